"""
Episode running service.

This service provides:
- build_provider: occupancy provider from a provider string
- EpisodeService.jobs_from_files / jobs_from_suite: episode setups
- EpisodeService.run: parallel rollouts written as JSON-lines plus a manifest
"""

import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from core.config import RunConfig
from core.exceptions import ValidationError
from domain.controller import BaselinePolicy, Policy
from domain.posing import standing_pose
from domain.providers import EmptyProvider, OccupancyProvider, RevolvingDoor, ScheduledSwap, StaticGridProvider
from domain.rollout import RolloutSettings, rollout
from domain.scenarios import (
    Scenario,
    corridor_scenario,
    door_scenario,
    open_ground_scenario,
    standing_target,
    wall_scenario,
)
from infrastructure.storage.episode_io import read_episode_config, write_episode
from infrastructure.storage.grid_codec import read_grid
from models.control import TargetEvent, TargetSpec
from models.episode import EpisodeConfig, EpisodeResult, OccupancyEncoding
from models.manifest import Manifest, ManifestEntry
from models.motion import Pose
from models.skeleton import Skeleton, default_skeleton
from services.batch import output_file, run_batch, timings_of, write_manifest

logger = logging.getLogger(__name__)

EPISODE_SUFFIX = ".jsonl"


class Suite(str, Enum):
    """Built-in scenario families"""

    OPEN = "open"
    WALL = "wall"
    CORRIDOR = "corridor"
    DOOR = "door"


_SUITES: Dict[Suite, Callable[..., Scenario]] = {
    Suite.OPEN: open_ground_scenario,
    Suite.WALL: wall_scenario,
    Suite.CORRIDOR: corridor_scenario,
    Suite.DOOR: door_scenario,
}


def _resolve(reference: str, base_dir: Optional[Path]) -> Path:
    path = Path(reference)
    if not path.is_absolute() and base_dir is not None:
        path = base_dir / path
    return path


def build_provider(
    spec: str,
    grid: Optional[str] = None,
    unit: float = 0.08,
    base_dir: Optional[Path] = None,
) -> OccupancyProvider:
    """
    Provider strings: empty | door | door:cx,cy,phase_deg | static:<grid path>
    | swap:<t> (empty until t, then the `grid` file).

    Raises:
        ValidationError: unknown provider or malformed arguments
        GridFormatError: unreadable grid file
    """
    kind, _, argument = spec.strip().partition(":")
    if kind == "empty" and not argument:
        return EmptyProvider()
    if kind == "door":
        if not argument:
            return RevolvingDoor(unit=unit)
        try:
            cx, cy, phase = (float(v) for v in argument.split(","))
        except ValueError:
            raise ValidationError(f"door provider needs 'door:cx,cy,phase_deg', got '{spec}'")
        return RevolvingDoor(center=(cx, cy), phase_deg=phase, unit=unit)
    if kind == "static" and argument:
        return StaticGridProvider(read_grid(_resolve(argument, base_dir)), reference=argument)
    if kind == "swap":
        if grid is None:
            raise ValidationError("swap provider needs a 'grid' file to switch to")
        try:
            switch_time = float(argument)
        except ValueError:
            raise ValidationError(f"swap provider needs 'swap:<time>', got '{spec}'")
        after = StaticGridProvider(read_grid(_resolve(grid, base_dir)), reference=grid)
        return ScheduledSwap(EmptyProvider(), after, switch_time)
    raise ValidationError(f"Unknown provider '{spec}'")


def episode_schedule(episode: EpisodeConfig, skeleton: Skeleton) -> List[TargetEvent]:
    """Point targets and standing-pose targets merged by time"""
    events = [
        TargetEvent(
            target.time,
            TargetSpec.from_points(target.points, None if target.yaw_deg is None else float(np.radians(target.yaw_deg))),
        )
        for target in episode.targets
    ]
    events += [
        TargetEvent(pose.time, standing_target(skeleton, pose.x, pose.y, float(np.radians(pose.yaw_deg))))
        for pose in episode.target_poses
    ]
    return sorted(events, key=lambda event: event.time)


@dataclass(eq=False)
class EpisodeJob:
    """Everything one rollout needs"""

    name: str
    provider: OccupancyProvider
    initial: Pose
    schedule: List[TargetEvent]
    duration: float
    seed: int
    settings: RolloutSettings


class EpisodeService:
    """Runs baseline-policy episodes from the run configuration"""

    def __init__(self, config: RunConfig, skeleton: Optional[Skeleton] = None):
        self.config = config
        self.skeleton = skeleton or default_skeleton()

    def settings_for(
        self,
        seed: int,
        rate: Optional[float] = None,
        regulation: bool = True,
        occupancy: bool = True,
        encoding: OccupancyEncoding = OccupancyEncoding.GRID,
    ) -> RolloutSettings:
        window = self.config.window if rate is None else self.config.window.model_copy(update={"rate": rate})
        return RolloutSettings(
            window=window,
            occupancy=self.config.canonical,
            field=self.config.field,
            regulation=regulation,
            use_occupancy=occupancy,
            encoding=encoding,
            bps_points=self.config.bps_points,
            bps_radius=self.config.bps_radius,
            bps_seed=seed,
            contact_height=self.config.metrics.contact_height,
        )

    def policy_for(self, settings: RolloutSettings) -> Policy:
        return BaselinePolicy(
            self.skeleton,
            limits=self.config.policy,
            field_params=settings.field,
            window=settings.window,
            occupancy_config=settings.occupancy,
            use_occupancy=settings.use_occupancy,
            regulate=settings.regulation,
            contact_height=settings.contact_height,
        )

    def job_from_config(
        self, episode: EpisodeConfig, base_dir: Optional[Path] = None, provider: Optional[str] = None
    ) -> EpisodeJob:
        source = provider or episode.provider
        initial = episode.initial
        return EpisodeJob(
            name=episode.name,
            provider=build_provider(source, episode.grid, self.config.unit, base_dir),
            initial=standing_pose(
                self.skeleton, initial.x, initial.y, float(np.radians(initial.yaw_deg)), self.config.metrics.contact_height
            ),
            schedule=episode_schedule(episode, self.skeleton),
            duration=episode.duration,
            seed=episode.seed,
            settings=self.settings_for(
                episode.seed, episode.rate, episode.regulation, episode.occupancy, episode.occupancy_encoding
            ),
        )

    def jobs_from_files(self, paths: Sequence[Path], provider: Optional[str] = None) -> List[EpisodeJob]:
        """
        Raises:
            ConfigError: an episode file is invalid (fails the whole command)
        """
        jobs = []
        for path in paths:
            episode = read_episode_config(path)
            jobs.append(self.job_from_config(episode, Path(path).parent, provider))
        return jobs

    def jobs_from_suite(
        self,
        suite: Suite,
        count: int,
        seed: int = 0,
        regulation: bool = True,
        occupancy: bool = True,
    ) -> List[EpisodeJob]:
        jobs = []
        for i in range(count):
            scenario = _SUITES[suite](seed + i, skeleton=self.skeleton)
            x, y, yaw = scenario.start
            jobs.append(
                EpisodeJob(
                    name=scenario.name,
                    provider=scenario.provider,
                    initial=standing_pose(self.skeleton, x, y, yaw, self.config.metrics.contact_height),
                    schedule=scenario.schedule(),
                    duration=scenario.duration,
                    seed=seed + i,
                    settings=self.settings_for(seed + i, regulation=regulation, occupancy=occupancy),
                )
            )
        return jobs

    def run_job(self, job: EpisodeJob) -> EpisodeResult:
        return rollout(
            self.policy_for(job.settings),
            job.initial,
            job.provider,
            job.schedule,
            job.duration,
            seed=job.seed,
            skeleton=self.skeleton,
            settings=job.settings,
            name=job.name,
        )

    def run(self, jobs: Sequence[EpisodeJob], out_dir: Path, threads: int = 1) -> Manifest:
        """
        Raises:
            ValidationError: two episodes share a name
        """
        names = [job.name for job in jobs]
        duplicates = sorted({name for name in names if names.count(name) > 1})
        if duplicates:
            raise ValidationError(f"Episode names must be unique, repeated: {duplicates}")
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)

        def work(job: EpisodeJob) -> ManifestEntry:
            result = self.run_job(job)
            path = write_episode(out_dir / f"{job.name}{EPISODE_SUFFIX}", result)
            return ManifestEntry(
                name=job.name,
                outputs=[output_file(path, out_dir)],
                info={
                    "frames": len(result),
                    "rate": result.rate,
                    "seed": result.seed,
                    "provider": result.provider,
                    "max_penetration": int(result.penetrations().max()),
                },
            )

        outcomes = run_batch(list(jobs), work, threads, "run", label=lambda job: job.name)
        entries = [
            outcome.value if outcome.ok else ManifestEntry(name=outcome.item.name, error=outcome.error)
            for outcome in outcomes
        ]
        manifest = Manifest(command="run", entries=entries)
        write_manifest(out_dir, manifest, timings_of(outcomes, names))
        return manifest

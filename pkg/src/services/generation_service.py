"""
Synthetic corpus generation service.

This service provides:
- GenerationService.motions: seeded motion JSON files per generator kind
- GenerationService.scenes: seeded scene grids with their travel endpoints
"""

import logging
from pathlib import Path
from typing import List, Optional, Sequence

from domain.scenarios import scene_endpoints, scene_grid
from domain.synthetic import generate_motion
from infrastructure.storage.grid_codec import write_grid
from infrastructure.storage.motion_io import write_motion
from models.manifest import Manifest, ManifestEntry
from models.synthetic import MotionKind, SceneKind, SceneSpec, SyntheticMotionSpec
from services.batch import output_file, run_batch, timings_of, write_manifest
from services.mob_service import GRID_SUFFIX

logger = logging.getLogger(__name__)


def _entries(outcomes) -> List[ManifestEntry]:
    return [
        outcome.value if outcome.ok else ManifestEntry(name=outcome.item.name, error=outcome.error)
        for outcome in outcomes
    ]


class GenerationService:
    """Writes synthetic motions and scenes; item i of a kind uses seed base + i"""

    def __init__(self, threads: int = 1):
        self.threads = threads

    def motion_specs(
        self,
        kinds: Sequence[MotionKind],
        count: int,
        seed: int = 0,
        duration: float = 3.0,
        speed: Optional[float] = None,
        fps: float = 30.0,
    ) -> List[SyntheticMotionSpec]:
        return [
            SyntheticMotionSpec(kind=kind, duration=duration, speed=speed, seed=seed + i, fps=fps)
            for kind in kinds
            for i in range(count)
        ]

    def motions(self, specs: Sequence[SyntheticMotionSpec], out_dir: Path) -> Manifest:
        out_dir = Path(out_dir)

        def make(spec: SyntheticMotionSpec) -> ManifestEntry:
            seq = generate_motion(spec)
            path = write_motion(out_dir / f"{spec.name}.json", seq)
            return ManifestEntry(
                name=spec.name,
                outputs=[output_file(path, out_dir)],
                info={"kind": spec.kind.value, "seed": spec.seed, "frames": len(seq), "fps": seq.fps},
            )

        outcomes = run_batch(list(specs), make, self.threads, "gen-motion", label=lambda s: s.name)
        manifest = Manifest(command="gen-motion", entries=_entries(outcomes))
        write_manifest(out_dir, manifest, timings_of(outcomes, [s.name for s in specs]))
        return manifest

    def scene_specs(self, kinds: Sequence[SceneKind], count: int, seed: int = 0, unit: float = 0.08) -> List[SceneSpec]:
        return [SceneSpec(kind=kind, seed=seed + i, unit=unit) for kind in kinds for i in range(count)]

    def scenes(self, specs: Sequence[SceneSpec], out_dir: Path) -> Manifest:
        out_dir = Path(out_dir)

        def make(spec: SceneSpec) -> ManifestEntry:
            grid = scene_grid(spec)
            path = write_grid(out_dir / f"{spec.name}{GRID_SUFFIX}", grid)
            start, goal = scene_endpoints(spec)
            return ManifestEntry(
                name=spec.name,
                outputs=[output_file(path, out_dir)],
                info={
                    "kind": spec.kind.value,
                    "seed": spec.seed,
                    "dims": list(grid.dims),
                    "unit": grid.unit,
                    "occupied_fraction": grid.occupied_fraction,
                    "start": start.tolist(),
                    "goal": goal.tolist(),
                },
            )

        outcomes = run_batch(list(specs), make, self.threads, "gen-scene", label=lambda s: s.name)
        manifest = Manifest(command="gen-scene", entries=_entries(outcomes))
        write_manifest(out_dir, manifest, timings_of(outcomes, [s.name for s in specs]))
        return manifest

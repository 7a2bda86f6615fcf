"""
Export service: grids, SDF volumes, episodes and motions to PLY, OBJ or JSON.
"""

import logging
from pathlib import Path
from typing import Dict, Optional, Sequence

import numpy as np

from domain.kinematics import forward_kinematics
from domain.occupancy import hide_ceiling, sdf_to_occupancy
from infrastructure.storage.episode_io import is_episode_file, read_episode
from infrastructure.storage.export import check_format, export_grid, export_tracks
from infrastructure.storage.grid_codec import GRID_MAGIC, SDF_MAGIC, read_grid, read_sdf, sniff_magic
from infrastructure.storage.motion_io import read_motion
from models.grid import OccupancyGrid
from models.manifest import Manifest, ManifestEntry
from models.skeleton import END_EFFECTORS, Skeleton
from services.batch import output_file, run_batch, timings_of, write_manifest

logger = logging.getLogger(__name__)


def end_effector_tracks(joints: np.ndarray, skeleton: Skeleton) -> Dict[str, np.ndarray]:
    """(frames, joints, 3) positions to one track per end-effector"""
    return {name: joints[:, skeleton.index(name)] for name in END_EFFECTORS}


class ExportService:
    """Writes one export per input file, named after the input"""

    def __init__(
        self,
        fmt: str,
        complement: bool = False,
        ceiling: Optional[float] = None,
        threads: int = 1,
    ):
        self.fmt = check_format(fmt)
        self.complement = complement
        self.ceiling = ceiling
        self.threads = threads

    def prepare_grid(self, grid: OccupancyGrid) -> OccupancyGrid:
        if self.complement:
            grid = grid.complement()
        if self.ceiling is not None:
            grid = hide_ceiling(grid, self.ceiling)
        return grid

    def export_file(self, source: Path, out_dir: Path) -> ManifestEntry:
        target = out_dir / f"{source.stem}.{self.fmt}"
        magic = sniff_magic(source)
        if magic in (GRID_MAGIC, SDF_MAGIC):
            grid = read_grid(source) if magic == GRID_MAGIC else sdf_to_occupancy(read_sdf(source))
            grid = self.prepare_grid(grid)
            export_grid(target, grid, self.fmt)
            info = {"kind": "grid", "cubes": grid.occupied_count}
        elif is_episode_file(source):
            result = read_episode(source)
            tracks = end_effector_tracks(result.joint_positions(), result.skeleton)
            export_tracks(target, tracks, result.rate, self.fmt)
            info = {"kind": "episode", "frames": len(result)}
        else:
            seq = read_motion(source)
            joints = np.stack([forward_kinematics(pose, seq.skeleton) for pose in seq.frames])
            export_tracks(target, end_effector_tracks(joints, seq.skeleton), seq.fps, self.fmt)
            info = {"kind": "motion", "frames": len(seq)}
        logger.info(f"Exported {source.name} -> {target.name}")
        return ManifestEntry(
            name=source.stem, source=source.as_posix(), outputs=[output_file(target, out_dir)], info=info
        )

    def export(self, sources: Sequence[Path], out_dir: Path) -> Manifest:
        sources = [Path(s) for s in sources]
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        outcomes = run_batch(
            sources, lambda s: self.export_file(s, out_dir), self.threads, "export", label=lambda s: s.name
        )
        entries = [
            outcome.value
            if outcome.ok
            else ManifestEntry(name=outcome.item.stem, source=outcome.item.as_posix(), error=outcome.error)
            for outcome in outcomes
        ]
        manifest = Manifest(
            command="export",
            parameters={"format": self.fmt, "complement": self.complement, "ceiling": self.ceiling},
            entries=entries,
        )
        write_manifest(out_dir, manifest, timings_of(outcomes, [s.stem for s in sources]))
        return manifest

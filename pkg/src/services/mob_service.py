"""
Motion occupancy base construction service.

This service provides:
- build_mob_batch: one pseudo-scene grid per motion file, plus a manifest
"""

import logging
from pathlib import Path
from typing import List, Sequence

from core.exceptions import ValidationError
from domain.occupancy import build_mob
from infrastructure.storage.grid_codec import write_grid
from infrastructure.storage.motion_io import read_motion
from models.manifest import Manifest, ManifestEntry
from services.batch import output_file, run_batch, timings_of, write_manifest

logger = logging.getLogger(__name__)

GRID_SUFFIX = ".mobg"


class MobService:
    """Builds pseudo-scene grids (complement of motion occupancy) from motion files"""

    def __init__(self, unit: float, threads: int = 1, contact_height: float = 0.05):
        if unit <= 0:
            raise ValidationError(f"Voxel unit must be positive, got {unit}")
        self.unit = unit
        self.threads = threads
        self.contact_height = contact_height

    def _build_one(self, source: Path, out_dir: Path) -> ManifestEntry:
        seq = read_motion(source, self.contact_height)
        grid = build_mob(seq, self.unit)
        path = write_grid(out_dir / f"{source.stem}{GRID_SUFFIX}", grid)
        roots = seq.root_positions
        logger.info(f"MOB {source.name}: {len(seq)} frames -> dims {grid.dims}, free {1 - grid.occupied_fraction:.3f}")
        return ManifestEntry(
            name=source.stem,
            source=source.as_posix(),
            outputs=[output_file(path, out_dir)],
            info={
                "frames": len(seq),
                "fps": seq.fps,
                "dims": list(grid.dims),
                "origin": grid.origin.tolist(),
                "unit": grid.unit,
                "occupied_fraction": grid.occupied_fraction,
                "start": roots[0].tolist(),
                "goal": roots[-1].tolist(),
            },
        )

    def build(self, sources: Sequence[Path], out_dir: Path) -> Manifest:
        """
        Raises:
            ValidationError: two motion files share a name
        """
        sources = [Path(s) for s in sources]
        stems = [s.stem for s in sources]
        duplicates = sorted({stem for stem in stems if stems.count(stem) > 1})
        if duplicates:
            raise ValidationError(f"Motion names must be unique, repeated: {duplicates}")
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)

        outcomes = run_batch(
            sources, lambda s: self._build_one(s, out_dir), self.threads, "build-mob", label=lambda s: s.name
        )
        entries: List[ManifestEntry] = [
            outcome.value
            if outcome.ok
            else ManifestEntry(name=outcome.item.stem, source=outcome.item.as_posix(), error=outcome.error)
            for outcome in outcomes
        ]
        manifest = Manifest(command="build-mob", parameters={"unit": self.unit}, entries=entries)
        write_manifest(out_dir, manifest, timings_of(outcomes, stems))
        return manifest

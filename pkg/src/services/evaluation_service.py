"""
Evaluation service.

This service provides:
- GridIndex: grid lookup by motion name, source file or grid reference
- EvaluationService.evaluate: metric rows for episode results and
  ground-truth motions, their aggregate, report and table files
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from core.exceptions import EmptySequenceError, MissingReferenceError
from domain.kinematics import canonical_frame
from domain.metrics import aggregate_reports, evaluate_episode, evaluate_motion, render_table
from domain.providers import OccupancyProvider, StaticGridProvider
from infrastructure.storage.episode_io import is_episode_file, read_episode
from infrastructure.storage.files import atomic_write_text
from infrastructure.storage.grid_codec import read_grid
from infrastructure.storage.motion_io import read_motion
from models.grid import OccupancyGrid
from models.manifest import Manifest, ManifestEntry
from models.metrics import EvaluationReport, MetricReport
from models.params import MetricThresholds
from services.batch import output_file, read_manifest, run_batch, timings_of, write_manifest

logger = logging.getLogger(__name__)

REPORT_NAME = "report.json"
TABLE_NAME = "report.txt"


class GridIndex:
    """Grids of a build-mob or gen-scene manifest, loaded on first use"""

    def __init__(self, manifest_path: Optional[Path] = None):
        self._paths: Dict[str, Path] = {}
        self._loaded: Dict[Path, OccupancyGrid] = {}
        if manifest_path is not None:
            manifest_path = Path(manifest_path)
            for entry in read_manifest(manifest_path).entries:
                if not entry.ok or not entry.outputs:
                    continue
                grid_path = manifest_path.parent / entry.outputs[0].path
                keys = {entry.name, Path(entry.outputs[0].path).name}
                if entry.source:
                    keys |= {entry.source, Path(entry.source).name, Path(entry.source).stem}
                for key in keys:
                    self._paths.setdefault(key, grid_path)

    def __contains__(self, reference: str) -> bool:
        return reference in self._paths

    def grid(self, reference: str, base_dir: Optional[Path] = None) -> OccupancyGrid:
        """
        Raises:
            MissingReferenceError: neither the manifest nor the file system has the grid
        """
        path = self._paths.get(reference)
        if path is None:
            candidate = Path(reference)
            if not candidate.is_absolute() and base_dir is not None:
                candidate = base_dir / candidate
            if not candidate.is_file():
                raise MissingReferenceError("grid", reference)
            path = candidate
        if path not in self._loaded:
            self._loaded[path] = read_grid(path)
        return self._loaded[path]


class EvaluationService:
    """Scores episode JSON-lines files and ground-truth motion files"""

    def __init__(
        self,
        thresholds: Optional[MetricThresholds] = None,
        grids: Optional[GridIndex] = None,
        references: Optional[Path] = None,
        threads: int = 1,
    ):
        self.thresholds = thresholds or MetricThresholds()
        self.grids = grids or GridIndex()
        self.references = Path(references) if references else None
        self.threads = threads

    def _episode_provider(self, description: str, base_dir: Path) -> Optional[OccupancyProvider]:
        kind, _, reference = description.partition(":")
        if kind != "static":
            return None
        return StaticGridProvider(self.grids.grid(reference, base_dir), reference)

    def _reference(self, name: str, rate: float):
        if self.references is None:
            return None, None
        path = self.references / f"{name}.json"
        if not path.is_file():
            return None, None
        seq = read_motion(path).decimated(rate)
        return seq.root_positions, canonical_frame(seq.frames[0], seq.skeleton)

    def evaluate_file(self, path: Path) -> MetricReport:
        """
        Raises:
            MissingReferenceError: the grid a result or motion refers to is unknown
        """
        path = Path(path)
        if is_episode_file(path):
            result = read_episode(path)
            provider = self._episode_provider(result.provider, path.parent)
            roots, frame = self._reference(result.name, result.rate)
            return evaluate_episode(result, self.thresholds, provider=provider, reference_roots=roots, reference_frame=frame)

        seq = read_motion(path, self.thresholds.contact_height)
        name = seq.name or path.stem
        reference = next((key for key in (path.as_posix(), path.name, path.stem) if key in self.grids), None)
        if reference is None:
            raise MissingReferenceError("grid", name)
        provider = StaticGridProvider(self.grids.grid(reference), reference)
        return evaluate_motion(seq.frames, seq.skeleton, seq.fps, provider, name, self.thresholds)

    def evaluate(self, paths: Sequence[Path], out_dir: Path) -> Tuple[EvaluationReport, Manifest]:
        """
        Raises:
            EmptySequenceError: no inputs, or no input could be evaluated
        """
        paths = [Path(p) for p in paths]
        if not paths:
            raise EmptySequenceError("No results to evaluate", required=1)
        outcomes = run_batch(paths, self.evaluate_file, self.threads, "eval", label=lambda p: p.name)
        rows: List[MetricReport] = [outcome.value for outcome in outcomes if outcome.ok]
        if not rows:
            raise EmptySequenceError("No result could be evaluated", required=1)
        report = EvaluationReport(rows=rows, total=aggregate_reports(rows))

        out_dir = Path(out_dir)
        report_path = atomic_write_text(
            out_dir / REPORT_NAME, json.dumps(report.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"
        )
        table_path = atomic_write_text(out_dir / TABLE_NAME, render_table([*rows, report.total]))
        entries = [
            ManifestEntry(name=outcome.item.stem, source=outcome.item.as_posix(), error=outcome.error)
            for outcome in outcomes
        ]
        entries.append(
            ManifestEntry(
                name="report",
                outputs=[output_file(report_path, out_dir), output_file(table_path, out_dir)],
                info={"rows": len(rows)},
            )
        )
        manifest = Manifest(command="eval", entries=entries)
        write_manifest(out_dir, manifest, timings_of(outcomes, [p.stem for p in paths]))
        logger.info(f"Evaluated {len(rows)}/{len(paths)} results")
        return report, manifest

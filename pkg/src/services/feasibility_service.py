"""
Rigid-agent feasibility analysis over grid corpora.

This service provides:
- FeasibilityService.from_manifest: grids with start and goal from a
  build-mob or gen-scene manifest
- FeasibilityService.from_grids: grid files sharing one start and goal
- FeasibilityService.analyse: cylinder path search per grid, summary and report
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from core.exceptions import EmptySequenceError, ValidationError
from domain.feasibility import path_feasibility
from infrastructure.storage.files import atomic_write_text
from infrastructure.storage.grid_codec import read_grid
from models.manifest import Manifest, ManifestEntry
from models.metrics import FeasibilityResult, FeasibilitySummary
from models.params import CylinderSpec
from services.batch import output_file, read_manifest, run_batch, timings_of, write_manifest

logger = logging.getLogger(__name__)

REPORT_NAME = "feasibility.json"

Point = Tuple[float, float, float]


@dataclass(frozen=True)
class FeasibilityQuery:
    name: str
    grid: Path
    start: Point
    goal: Point


def _point(values: Sequence[float]) -> Point:
    values = [float(v) for v in values]
    if len(values) == 2:
        values.append(0.0)
    if len(values) != 3:
        raise ValidationError(f"Expected an (x, y) or (x, y, z) point, got {values}")
    return values[0], values[1], values[2]


class FeasibilityService:
    def __init__(self, cylinder: Optional[CylinderSpec] = None, threads: int = 1):
        self.cylinder = cylinder or CylinderSpec()
        self.threads = threads

    def from_manifest(self, path: Path) -> List[FeasibilityQuery]:
        """
        Raises:
            ValidationError: an entry lacks start and goal
        """
        path = Path(path)
        queries = []
        for entry in read_manifest(path).entries:
            if not entry.ok or not entry.outputs:
                continue
            if "start" not in entry.info or "goal" not in entry.info:
                raise ValidationError(f"Manifest entry '{entry.name}' has no start/goal")
            queries.append(
                FeasibilityQuery(
                    entry.name, path.parent / entry.outputs[0].path, _point(entry.info["start"]), _point(entry.info["goal"])
                )
            )
        return queries

    def from_grids(self, grids: Sequence[Path], start: Sequence[float], goal: Sequence[float]) -> List[FeasibilityQuery]:
        return [FeasibilityQuery(Path(g).stem, Path(g), _point(start), _point(goal)) for g in grids]

    def check(self, query: FeasibilityQuery) -> FeasibilityResult:
        result = path_feasibility(read_grid(query.grid), query.start, query.goal, self.cylinder)
        logger.debug(f"{query.name}: feasible={result.feasible} reason={result.reason}")
        return result

    def analyse(self, queries: Sequence[FeasibilityQuery], out_dir: Path) -> Tuple[FeasibilitySummary, Manifest]:
        """
        Raises:
            EmptySequenceError: no grids given
        """
        if not queries:
            raise EmptySequenceError("No grids to analyse", required=1)
        outcomes = run_batch(list(queries), self.check, self.threads, "feasibility", label=lambda q: q.name)
        analysed = [outcome for outcome in outcomes if outcome.ok]
        infeasible = sum(1 for outcome in analysed if not outcome.value.feasible)
        summary = FeasibilitySummary(
            total=len(analysed),
            infeasible=infeasible,
            failed=len(outcomes) - len(analysed),
            infeasible_fraction=infeasible / len(analysed) if analysed else 0.0,
        )

        out_dir = Path(out_dir)
        document = {
            "cylinder": self.cylinder.model_dump(),
            "summary": summary.model_dump(mode="json"),
            "grids": [
                {
                    "name": outcome.item.name,
                    "grid": outcome.item.grid.as_posix(),
                    "result": None if not outcome.ok else outcome.value.model_dump(mode="json"),
                    "error": None if outcome.ok else outcome.error.model_dump(),
                }
                for outcome in outcomes
            ],
        }
        report = atomic_write_text(out_dir / REPORT_NAME, json.dumps(document, indent=2, sort_keys=True) + "\n")
        entries = [
            ManifestEntry(
                name=outcome.item.name,
                source=outcome.item.grid.as_posix(),
                info={} if not outcome.ok else {"feasible": outcome.value.feasible},
                error=outcome.error,
            )
            for outcome in outcomes
        ]
        entries.append(ManifestEntry(name="report", outputs=[output_file(report, out_dir)]))
        manifest = Manifest(command="feasibility", parameters=self.cylinder.model_dump(), entries=entries)
        write_manifest(out_dir, manifest, timings_of(outcomes, [q.name for q in queries]))
        logger.info(
            f"Feasibility: {infeasible}/{summary.total} infeasible ({100 * summary.infeasible_fraction:.1f}%), "
            f"{summary.failed} failed"
        )
        return summary, manifest

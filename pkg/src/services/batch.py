"""
Shared batch machinery for the pipeline services.

This module provides:
- run_batch: ordered thread-pool map with per-item error capture and progress
- output_file / write_manifest: hashed outputs, manifest and timings sidecar
- batch_exit_code: exit status of a finished batch
"""

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Generic, List, Optional, Sequence, TypeVar

from pydantic import ValidationError as PydanticValidationError
from tqdm import tqdm

from core.exceptions import (
    EXIT_OK,
    EXIT_PARTIAL,
    BaseOccuException,
    BatchError,
    MissingReferenceError,
    ValidationError,
)
from infrastructure.storage.files import atomic_write_text, sha256_file
from models.manifest import ItemError, Manifest, OutputFile

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
TIMINGS_NAME = "timings.json"

T = TypeVar("T")
R = TypeVar("R")


@dataclass
class ItemOutcome(Generic[T, R]):
    item: T
    value: Optional[R] = None
    error: Optional[ItemError] = None
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return self.error is None


def _guarded(work: Callable[[T], R], label: Callable[[T], str]) -> Callable[[T], ItemOutcome]:
    def run(item: T) -> ItemOutcome:
        started = time.perf_counter()
        try:
            value = work(item)
            return ItemOutcome(item, value=value, seconds=time.perf_counter() - started)
        except BaseOccuException as e:
            logger.warning(f"{label(item)}: {e.message}")
            error = ItemError(code=e.error_code, message=e.message)
        except Exception as e:
            logger.error(f"{label(item)}: unexpected {type(e).__name__}: {e}", exc_info=True)
            error = ItemError(code=type(e).__name__, message=str(e))
        return ItemOutcome(item, error=error, seconds=time.perf_counter() - started)

    return run


def run_batch(
    items: Sequence[T],
    work: Callable[[T], R],
    threads: int = 1,
    desc: str = "batch",
    label: Callable[[T], str] = str,
) -> List[ItemOutcome]:
    """
    Apply `work` to every item. Results keep the input order whatever the
    thread count; a failing item is recorded and the batch continues.
    """
    guarded = _guarded(work, label)
    with tqdm(total=len(items), desc=desc, disable=len(items) < 2, leave=False) as progress:
        if threads <= 1:
            outcomes = []
            for item in items:
                outcomes.append(guarded(item))
                progress.update(1)
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                outcomes = []
                for outcome in pool.map(guarded, items):
                    outcomes.append(outcome)
                    progress.update(1)
    failed = sum(1 for outcome in outcomes if not outcome.ok)
    logger.info(f"{desc}: {len(outcomes) - failed}/{len(outcomes)} items done")
    return outcomes


def output_file(path: Path, root: Path) -> OutputFile:
    return OutputFile(path=Path(path).relative_to(root).as_posix(), sha256=sha256_file(path))


def write_manifest(
    out_dir: Path,
    manifest: Manifest,
    timings: Optional[Dict[str, float]] = None,
) -> Path:
    """manifest.json plus timings.json (wall-clock seconds per item) in `out_dir`"""
    out_dir = Path(out_dir)
    payload = json.dumps(manifest.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"
    path = atomic_write_text(out_dir / MANIFEST_NAME, payload)
    if timings is not None:
        atomic_write_text(out_dir / TIMINGS_NAME, json.dumps(timings, indent=2, sort_keys=True) + "\n")
    logger.info(f"Manifest with {len(manifest.entries)} entries written to {path}")
    return path


def read_manifest(path: Path) -> Manifest:
    try:
        return Manifest.model_validate_json(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise MissingReferenceError("manifest", str(path)) from e
    except PydanticValidationError as e:
        raise ValidationError(f"Invalid manifest {path}: {e.errors()[0]['msg']}") from e


def timings_of(outcomes: Sequence[ItemOutcome], names: Sequence[str]) -> Dict[str, float]:
    return {name: round(outcome.seconds, 6) for name, outcome in zip(names, outcomes)}


def batch_exit_code(manifest: Manifest) -> int:
    """
    Raises:
        BatchError: every item failed
    """
    total = len(manifest.entries)
    failed = manifest.failed
    if total and failed == total:
        raise BatchError(failed, total)
    return EXIT_PARTIAL if failed else EXIT_OK

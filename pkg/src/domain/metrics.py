"""
Episode evaluation.

This module provides:
- penetrated_voxels: distinct scene voxels touched by a body
- success: goal-reaching flag, minimum target distance and time to reach
- foot_sliding: share of frames with a grounded foot moving horizontally
- penetration: mean penetrated voxels per frame
- erp_distance: edit distance with real penalty between trajectories
- evaluate_episode / aggregate_reports / render_table
"""

import logging
from typing import Iterable, List, Optional, Sequence

import numpy as np

from core.exceptions import EmptySequenceError, ValidationError
from domain.body import body_geometry, body_samples
from domain.kinematics import forward_kinematics
from domain.occupancy import sample_spacing
from domain.providers import OccupancyProvider
from models.control import TargetSpec
from models.episode import EpisodeResult
from models.frame import CanonicalFrame
from models.metrics import MetricReport, SuccessResult
from models.motion import Pose
from models.params import MetricThresholds
from models.skeleton import END_EFFECTORS, Skeleton

logger = logging.getLogger(__name__)


def penetrated_voxels(
    pose: Pose,
    skeleton: Skeleton,
    provider: OccupancyProvider,
    t: float = 0.0,
    joints: Optional[np.ndarray] = None,
) -> int:
    """
    Number of distinct provider voxels containing a body sample point and
    occupied at time t.
    """
    if provider.is_empty:
        return 0
    lattice = provider.lattice_at(t)
    samples = body_samples(body_geometry(pose, skeleton, joints), sample_spacing(lattice.unit))
    cells = np.unique(lattice.cells(samples), axis=0)
    return int(np.count_nonzero(provider.is_occupied(lattice.centers(cells), t)))


def penetration_counts(
    poses: Sequence[Pose],
    skeleton: Skeleton,
    provider: OccupancyProvider,
    rate: float,
) -> np.ndarray:
    """Per-frame penetrated voxels of a pose sequence played at `rate`"""
    return np.array(
        [penetrated_voxels(pose, skeleton, provider, i / rate) for i, pose in enumerate(poses)], dtype=np.int64
    )


def target_distances(result: EpisodeResult, target: Optional[TargetSpec] = None) -> np.ndarray:
    """Per-frame mean Euclidean distance over the present target points"""
    target = target or result.final_target()
    if target is None:
        raise ValidationError("Episode has no target to measure against")
    ee = result.skeleton.indices(END_EFFECTORS)
    mask = target.mask
    points = result.joint_positions()[:, ee][:, mask]
    return np.linalg.norm(points - target.points[mask], axis=2).mean(axis=1)


def success(
    result: EpisodeResult,
    target: Optional[TargetSpec] = None,
    thresholds: Optional[MetricThresholds] = None,
) -> SuccessResult:
    """
    Success iff some frame is within the distance threshold while its
    penetrated voxel count is below the penetration threshold.

    Raises:
        EmptySequenceError: the episode has no frames
    """
    thresholds = thresholds or MetricThresholds()
    if len(result) == 0:
        raise EmptySequenceError("Cannot evaluate an episode without frames", required=1)
    distances = target_distances(result, target)
    qualifying = (distances < thresholds.success_distance) & (
        result.penetrations() < thresholds.success_penetration
    )
    hits = np.flatnonzero(qualifying)
    if hits.size == 0:
        return SuccessResult(success=False, min_distance=float(distances.min()))
    first = int(hits[0])
    return SuccessResult(success=True, min_distance=float(distances.min()), time=first / result.rate, frame=first)


def sliding_frames(
    feet: np.ndarray,
    rate: float,
    contact_height: float = 0.05,
    slide_speed: float = 0.075,
) -> np.ndarray:
    """
    Flags per frame for foot trajectories of shape (n, feet, 3).

    Horizontal speed is the backward difference times `rate`; frame 0
    copies frame 1.
    """
    feet = np.asarray(feet, dtype=np.float64)
    n = feet.shape[0]
    if n < 2:
        return np.zeros(n, dtype=bool)
    speed = np.empty(feet.shape[:2])
    speed[1:] = np.linalg.norm(np.diff(feet[..., :2], axis=0), axis=2) * rate
    speed[0] = speed[1]
    grounded = feet[..., 2] < contact_height
    return np.any(grounded & (speed > slide_speed), axis=1)


def foot_sliding(
    result: EpisodeResult,
    contact_height: float = 0.05,
    slide_speed: float = 0.075,
) -> float:
    """Percentage of frames where a grounded foot slides"""
    if len(result) == 0:
        return 0.0
    feet = result.joint_positions()[:, result.skeleton.indices(("left_foot", "right_foot"))]
    flags = sliding_frames(feet, result.rate, contact_height, slide_speed)
    return float(100.0 * np.count_nonzero(flags) / len(flags))


def penetration(result: EpisodeResult, provider: Optional[OccupancyProvider] = None) -> float:
    """
    Mean penetrated voxels per frame; recounted against `provider` when
    given, otherwise taken from the recorded frames.
    """
    if len(result) == 0:
        return 0.0
    if provider is None:
        counts = result.penetrations()
    else:
        counts = np.array(
            [penetrated_voxels(f.pose, result.skeleton, provider, f.time, f.joints) for f in result.frames]
        )
    return float(np.mean(counts))


def erp_distance(a, b, gap: Sequence[float] = (0.0, 0.0, 0.0)) -> float:
    """
    Edit distance with real penalty.

    Matching a_i with b_j costs |a_i - b_j|, skipping a point costs its
    distance to the gap reference. One sequence may be empty.

    Raises:
        EmptySequenceError: both sequences are empty
    """
    a = np.asarray(a, dtype=np.float64).reshape(-1, 3)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 3)
    if len(a) == 0 and len(b) == 0:
        raise EmptySequenceError("ERP needs at least one non-empty trajectory", required=1)
    g = np.asarray(gap, dtype=np.float64)
    gap_a = np.linalg.norm(a - g, axis=1)
    gap_b = np.linalg.norm(b - g, axis=1)
    match = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)

    n0, n1 = len(a), len(b)
    cost = np.zeros((n0 + 1, n1 + 1))
    for i in range(1, n0 + 1):
        cost[i, 0] = cost[i - 1, 0] + gap_a[i - 1]
    for j in range(1, n1 + 1):
        cost[0, j] = cost[0, j - 1] + gap_b[j - 1]
    for i in range(1, n0 + 1):
        for j in range(1, n1 + 1):
            cost[i, j] = min(
                cost[i - 1, j] + gap_a[i - 1],
                cost[i, j - 1] + gap_b[j - 1],
                cost[i - 1, j - 1] + match[i - 1, j - 1],
            )
    return float(cost[n0, n1])


def reference_erp(result: EpisodeResult, reference_roots: np.ndarray, reference_frame: CanonicalFrame) -> float:
    """ERP of root trajectories, both expressed in the reference's first-pose frame"""
    ours = reference_frame.points_to_canonical(result.root_positions())
    theirs = reference_frame.points_to_canonical(np.asarray(reference_roots, dtype=np.float64))
    return erp_distance(ours, theirs)


def evaluate_episode(
    result: EpisodeResult,
    thresholds: Optional[MetricThresholds] = None,
    target: Optional[TargetSpec] = None,
    provider: Optional[OccupancyProvider] = None,
    reference_roots: Optional[np.ndarray] = None,
    reference_frame: Optional[CanonicalFrame] = None,
) -> MetricReport:
    """All metrics of one episode as a report row"""
    thresholds = thresholds or MetricThresholds()
    reached = success(result, target, thresholds)
    erp = None
    if reference_roots is not None:
        frame = reference_frame or CanonicalFrame()
        erp = reference_erp(result, reference_roots, frame)
    report = MetricReport(
        name=result.name,
        success_rate=100.0 if reached.success else 0.0,
        dt_cm=100.0 * reached.min_distance,
        time_s=reached.time,
        fs_percent=foot_sliding(result, thresholds.contact_height, thresholds.slide_speed),
        pen=penetration(result, provider),
        erp=erp,
    )
    logger.debug(f"Evaluated {result.name}: success={reached.success} DT={report.dt_cm:.1f}cm PEN={report.pen:.2f}")
    return report


def evaluate_motion(
    poses: Sequence[Pose],
    skeleton: Skeleton,
    rate: float,
    provider: OccupancyProvider,
    name: str,
    thresholds: Optional[MetricThresholds] = None,
) -> MetricReport:
    """
    Metrics of a recorded motion treated as its own ground truth: the target
    is the placement of the last frame.
    """
    thresholds = thresholds or MetricThresholds()
    if len(poses) == 0:
        raise EmptySequenceError(f"Motion {name} has no frames", required=1)
    joints = np.stack([forward_kinematics(p, skeleton) for p in poses])
    counts = penetration_counts(poses, skeleton, provider, rate)
    ee = skeleton.indices(END_EFFECTORS)
    distances = np.linalg.norm(joints[:, ee] - joints[-1, ee], axis=2).mean(axis=1)
    qualifying = np.flatnonzero((distances < thresholds.success_distance) & (counts < thresholds.success_penetration))
    feet = joints[:, skeleton.indices(("left_foot", "right_foot"))]
    flags = sliding_frames(feet, rate, thresholds.contact_height, thresholds.slide_speed)
    return MetricReport(
        name=name,
        success_rate=100.0 if qualifying.size else 0.0,
        dt_cm=100.0 * float(distances.min()),
        time_s=float(qualifying[0] / rate) if qualifying.size else None,
        fs_percent=float(100.0 * np.count_nonzero(flags) / len(flags)),
        pen=float(np.mean(counts)),
    )


def aggregate_reports(reports: Iterable[MetricReport], name: str = "total") -> MetricReport:
    """
    Average of report rows weighted by their episode counts; Time averages
    successful episodes only.

    Raises:
        EmptySequenceError: no reports
    """
    rows: List[MetricReport] = list(reports)
    if not rows:
        raise EmptySequenceError("Nothing to aggregate", required=1)
    weights = np.array([r.episodes for r in rows], dtype=np.float64)
    total = float(weights.sum())

    def mean(values) -> float:
        return float(np.dot(weights, values) / total)

    successes = np.array([r.success_rate / 100.0 * r.episodes for r in rows])
    timed = [(r.time_s, s) for r, s in zip(rows, successes) if r.time_s is not None and s > 0]
    time_s = None
    if timed:
        times, counts = np.array(timed).T
        time_s = float(np.dot(times, counts) / counts.sum())
    erps = [(r.erp, r.episodes) for r in rows if r.erp is not None]
    erp = None
    if erps:
        values, counts = np.array(erps, dtype=np.float64).T
        erp = float(np.dot(values, counts) / counts.sum())
    return MetricReport(
        name=name,
        episodes=int(total),
        success_rate=min(100.0, mean([r.success_rate for r in rows])),
        dt_cm=mean([r.dt_cm for r in rows]),
        time_s=time_s,
        fs_percent=min(100.0, mean([r.fs_percent for r in rows])),
        pen=mean([r.pen for r in rows]),
        erp=erp,
    )


TABLE_COLUMNS = ("Suc.", "DT", "Time", "FS", "PEN", "ERP")


def render_table(reports: Sequence[MetricReport]) -> str:
    """Aligned plain-text table: name, Suc., DT, Time, FS, PEN, ERP"""

    def fmt(value: Optional[float]) -> str:
        return "-" if value is None else f"{value:.2f}"

    header = ("Name",) + TABLE_COLUMNS
    rows = [
        (r.name, fmt(r.success_rate), fmt(r.dt_cm), fmt(r.time_s), fmt(r.fs_percent), fmt(r.pen), fmt(r.erp))
        for r in reports
    ]
    widths = [max(len(row[i]) for row in [header] + rows) for i in range(len(header))]
    lines = []
    for row in [header] + rows:
        cells = [row[0].ljust(widths[0])] + [cell.rjust(w) for cell, w in zip(row[1:], widths[1:])]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines) + "\n"

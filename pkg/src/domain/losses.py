"""
Training objectives as standalone scalar functions with analytic gradients.

This module provides:
- loss_mix: L1 on rotation entries plus squared L2 on the rest
- loss_pen: distance of occupied joints to their nearest free voxel
- loss_field: share of the field correction plus a speed penalty
- loss_total: weighted sum
- gradient_check: central differences against analytic gradients
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from core.exceptions import DimensionMismatchError, NonFiniteError
from models.control import Prediction
from models.grid import OccupancyGrid
from models.params import LossWeights

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LossComponents:
    mix: float = 0.0
    pen: float = 0.0
    field: float = 0.0


def flatten_future_state(prediction: Prediction) -> Tuple[np.ndarray, np.ndarray]:
    """
    Flat vector of a prediction and the mask of its rotation entries.

    Layout: root velocity, yaw rate, root rotation, joint rotations, joint
    velocities, then the future summary when present.
    """
    parts = [
        (prediction.root_velocity, False),
        (np.atleast_1d(prediction.yaw_rate), False),
        (prediction.root_rot6d, True),
        (prediction.joint_rot6d, True),
        (prediction.joint_velocities, False),
    ]
    future = prediction.future
    if future is not None:
        parts += [
            (future.root_positions, False),
            (future.limb_positions, False),
            (future.joint_rot6d, True),
            (future.root_velocities, False),
            (future.limb_velocities, False),
            (future.yaw_rates, False),
        ]
    values = np.concatenate([np.asarray(v, dtype=np.float64).ravel() for v, _ in parts])
    mask = np.concatenate([np.full(np.size(v), flag) for v, flag in parts])
    return values, mask


def _check(pred: np.ndarray, gt: np.ndarray, rotation_mask: np.ndarray) -> None:
    if pred.shape != gt.shape:
        raise DimensionMismatchError("loss_mix operands", pred.shape, gt.shape)
    if rotation_mask.shape != pred.shape:
        raise DimensionMismatchError("rotation mask", pred.shape, rotation_mask.shape)


def loss_mix(pred, gt, rotation_mask) -> float:
    """Sum of |residual| over rotation entries and residual^2 over the rest"""
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    mask = np.asarray(rotation_mask, dtype=bool)
    _check(pred, gt, mask)
    residual = pred - gt
    return float(np.sum(np.abs(residual[mask])) + np.sum(residual[~mask] ** 2))


def loss_mix_grad(pred, gt, rotation_mask) -> np.ndarray:
    """Gradient of loss_mix with respect to pred"""
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    mask = np.asarray(rotation_mask, dtype=bool)
    _check(pred, gt, mask)
    residual = pred - gt
    return np.where(mask, np.sign(residual), 2.0 * residual)


def _pen_terms(joints, grid: OccupancyGrid):
    p = np.asarray(joints, dtype=np.float64).reshape(-1, 3)
    occupied = grid.is_occupied(p)
    refs = np.zeros_like(p)
    for n in np.flatnonzero(occupied):
        refs[n] = grid.free_space.nearest(p[n])
    return p, occupied, refs


def loss_pen(joints, grid: OccupancyGrid) -> float:
    """
    Sum over occupied joints of the distance to the nearest free voxel center.

    Raises:
        NoFreeVoxelError: an occupied joint exists and the grid has no free voxel
    """
    p, occupied, refs = _pen_terms(joints, grid)
    if not np.any(occupied):
        return 0.0
    return float(np.sum(np.linalg.norm(p[occupied] - refs[occupied], axis=1)))


def loss_pen_grad(joints, grid: OccupancyGrid) -> np.ndarray:
    """Gradient of loss_pen with the free/occupied assignment and references held fixed"""
    p, occupied, refs = _pen_terms(joints, grid)
    grad = np.zeros_like(p)
    diff = p[occupied] - refs[occupied]
    norm = np.linalg.norm(diff, axis=1, keepdims=True)
    grad[occupied] = np.where(norm > 0, diff / np.where(norm > 0, norm, 1.0), 0.0)
    return grad.reshape(np.shape(joints))


def _field_ratio_rows(count: int, root_only: bool) -> np.ndarray:
    rows = np.zeros(count, dtype=bool)
    if root_only:
        rows[:1] = True
    else:
        rows[:] = True
    return rows


def loss_field(deltas, velocities, eps_v: float = 1e-6, root_only: bool = False) -> float:
    """
    sum_j (|dv_j| / |v_j|)^2 + |v_j|^2.

    The ratio term is 0 for joints slower than eps_v; with `root_only` it
    covers the first row (the root) only.
    """
    dv = np.asarray(deltas, dtype=np.float64).reshape(-1, 3)
    v = np.asarray(velocities, dtype=np.float64).reshape(-1, 3)
    if dv.shape != v.shape:
        raise DimensionMismatchError("loss_field operands", v.shape, dv.shape)
    speed_sq = np.sum(v * v, axis=1)
    speed = np.sqrt(speed_sq)
    ratio_rows = _field_ratio_rows(len(v), root_only) & (speed >= eps_v)
    delta_sq = np.sum(dv * dv, axis=1)
    ratio = np.zeros(len(v))
    ratio[ratio_rows] = delta_sq[ratio_rows] / speed_sq[ratio_rows]
    return float(np.sum(ratio) + np.sum(speed_sq))


def loss_field_grad(deltas, velocities, eps_v: float = 1e-6, root_only: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """Gradients of loss_field with respect to (deltas, velocities)"""
    dv = np.asarray(deltas, dtype=np.float64).reshape(-1, 3)
    v = np.asarray(velocities, dtype=np.float64).reshape(-1, 3)
    if dv.shape != v.shape:
        raise DimensionMismatchError("loss_field operands", v.shape, dv.shape)
    speed_sq = np.sum(v * v, axis=1)
    rows = _field_ratio_rows(len(v), root_only) & (np.sqrt(speed_sq) >= eps_v)

    grad_dv = np.zeros_like(dv)
    grad_v = 2.0 * v
    if np.any(rows):
        s2 = speed_sq[rows][:, None]
        d2 = np.sum(dv[rows] ** 2, axis=1, keepdims=True)
        grad_dv[rows] = 2.0 * dv[rows] / s2
        grad_v[rows] += -2.0 * d2 * v[rows] / (s2 * s2)
    return grad_dv.reshape(np.shape(deltas)), grad_v.reshape(np.shape(velocities))


def loss_total(components: LossComponents, weights: Optional[LossWeights] = None) -> float:
    """mix + alpha * pen + beta * field"""
    weights = weights or LossWeights()
    return components.mix + weights.alpha * components.pen + weights.beta * components.field


def gradient_check(
    f: Callable[[np.ndarray], float],
    grad: Callable[[np.ndarray], np.ndarray],
    x0,
    h: float = 1e-5,
) -> float:
    """
    Max over coordinates of |g_fd - g_an| / max(1, |g_fd|), with g_fd the
    central-difference gradient of f at x0.

    Raises:
        NonFiniteError: f or grad returned NaN or infinity
    """
    x0 = np.asarray(x0, dtype=np.float64).ravel()
    analytic = np.asarray(grad(x0.copy()), dtype=np.float64).ravel()
    if not np.all(np.isfinite(analytic)):
        raise NonFiniteError("analytic gradient")
    worst = 0.0
    for i in range(x0.size):
        step = np.zeros_like(x0)
        step[i] = h
        plus, minus = f(x0 + step), f(x0 - step)
        if not (np.isfinite(plus) and np.isfinite(minus)):
            raise NonFiniteError(f"loss evaluation at coordinate {i}")
        numeric = (plus - minus) / (2.0 * h)
        worst = max(worst, abs(numeric - analytic[i]) / max(1.0, abs(numeric)))
    return float(worst)

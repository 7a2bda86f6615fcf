"""
Occupancy field regulation.

This module provides:
- field_correction / field_corrections: deceleration of joint velocities
  toward nearby occupied voxel centers
- apply_regulation: corrections applied to a predicted next state
- steer_around: field gains applied to the approach component of a
  rigidly shared horizontal velocity
- calibrate_stiffness: stiffness giving a requested slow-down in front of a wall
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from models.control import Prediction
from models.params import CanonicalOccupancyConfig, FieldParams
from models.skeleton import END_EFFECTORS, Skeleton

logger = logging.getLogger(__name__)

SPEED_EPS = 1e-12


def field_weights(distances: np.ndarray, params: FieldParams) -> np.ndarray:
    """max(0, 1/(d - gamma) - b), exactly 0 for d <= gamma and beyond the cutoff"""
    d = np.asarray(distances, dtype=np.float64)
    weights = np.zeros_like(d)
    active = (d > params.gamma) & (d < params.cutoff)
    weights[active] = np.maximum(0.0, 1.0 / (d[active] - params.gamma) - params.b)
    return weights


def field_corrections(velocities, positions, centers, params: FieldParams) -> np.ndarray:
    """
    Velocity corrections for many joints at once.

    Args:
        velocities: (n, 3) joint velocities (m/s)
        positions: (n, 3) joint positions
        centers: (m, 3) occupied voxel centers, same frame as positions

    Returns:
        (n, 3) corrections, each a non-negative multiple of -velocity with
        norm at most c_max * |velocity|
    """
    v = np.asarray(velocities, dtype=np.float64).reshape(-1, 3)
    p = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    centers = np.asarray(centers, dtype=np.float64).reshape(-1, 3)
    deltas = np.zeros_like(v)
    if len(centers) == 0 or params.k == 0:
        return deltas

    speed = np.linalg.norm(v, axis=1)
    for n in np.flatnonzero(speed > SPEED_EPS):
        offsets = centers - p[n]
        distances = np.linalg.norm(offsets, ord=params.norm.ord, axis=1)
        weights = field_weights(distances, params)
        near = weights > 0
        if not np.any(near):
            continue
        euclid = np.linalg.norm(offsets[near], axis=1)
        cosine = np.where(euclid > 0, offsets[near] @ v[n] / (speed[n] * np.maximum(euclid, SPEED_EPS)), 0.0)
        gain = params.k * float(np.sum(np.maximum(cosine, 0.0) * weights[near]))
        gain = min(gain, params.c_max)
        deltas[n] = -gain * v[n]
    return deltas


def field_correction(velocity, position, centers, params: FieldParams) -> np.ndarray:
    """Correction for a single joint; see `field_corrections`"""
    return field_corrections(velocity, position, centers, params)[0]


def regulated_joints(skeleton: Skeleton, params: FieldParams) -> List[int]:
    if params.full_body:
        return list(range(skeleton.joint_count))
    return skeleton.indices(END_EFFECTORS)


def apply_regulation(
    prediction: Prediction,
    positions: np.ndarray,
    centers: np.ndarray,
    params: FieldParams,
    joints: Sequence[int],
) -> Tuple[Prediction, np.ndarray]:
    """
    Add field corrections to the predicted velocities of the regulated joints.

    Args:
        positions: (j, 3) current joint positions, same frame as the velocities
        centers: occupied voxel centers in that frame
        joints: regulated joint indices (joint 0 drives the root velocity)

    Returns:
        corrected prediction and the (j, 3) raw corrections
    """
    j = prediction.joint_velocities.shape[0]
    deltas = np.zeros((j, 3))
    if len(centers) == 0:
        return prediction.with_velocities(prediction.root_velocity, prediction.joint_velocities, deltas), deltas

    index = np.asarray(joints, dtype=np.int64)
    deltas[index] = field_corrections(prediction.joint_velocities[index], positions[index], centers, params)
    velocities = prediction.joint_velocities + deltas
    root_velocity = prediction.root_velocity + deltas[0]
    return prediction.with_velocities(root_velocity, velocities, deltas), deltas


def approach_direction(velocity, position, centers, params: FieldParams) -> Tuple[float, np.ndarray]:
    """
    Field gain of one joint and the horizontal unit direction of the
    occupancy it approaches (cosine and falloff weighted mean).

    Returns:
        (gain, direction); gain 0 and a zero direction when nothing in range
        lies ahead
    """
    v = np.asarray(velocity, dtype=np.float64)
    speed = float(np.linalg.norm(v))
    none = (0.0, np.zeros(2))
    if speed <= SPEED_EPS or len(centers) == 0 or params.k == 0:
        return none
    offsets = np.asarray(centers, dtype=np.float64).reshape(-1, 3) - np.asarray(position, dtype=np.float64)
    weights = field_weights(np.linalg.norm(offsets, ord=params.norm.ord, axis=1), params)
    near = weights > 0
    if not np.any(near):
        return none
    euclid = np.maximum(np.linalg.norm(offsets[near], axis=1), SPEED_EPS)
    cosine = np.maximum(offsets[near] @ v / (speed * euclid), 0.0)
    strength = cosine * weights[near]
    gain = min(params.k * float(np.sum(strength)), params.c_max)
    pull = (strength / euclid) @ offsets[near][:, :2]
    length = float(np.linalg.norm(pull))
    if gain <= 0 or length <= SPEED_EPS:
        return none
    return gain, pull / length


def steer_around(velocity, positions, centers, params: FieldParams) -> np.ndarray:
    """
    Horizontal velocity shared by rigidly moving joints, with each joint in
    turn removing its field gain times the velocity component toward the
    occupancy it approaches. Head-on this is the plain field correction;
    obliquely the motion along the obstacle survives. Vertical velocity is
    left unchanged.
    """
    steered = np.array(velocity, dtype=np.float64)
    for position in np.asarray(positions, dtype=np.float64).reshape(-1, 3):
        planar = np.array([steered[0], steered[1], 0.0])
        gain, direction = approach_direction(planar, position, centers, params)
        along = float(planar[:2] @ direction)
        if gain > 0 and along > 0:
            steered[:2] -= gain * along * direction
    return steered


def wall_centers(distance: float, cfg: CanonicalOccupancyConfig, height: float = 0.0) -> np.ndarray:
    """Centers of the canonical cell layer nearest to a wall `distance` ahead"""
    s, u = cfg.size, cfg.unit
    half = (s - 1) / 2.0
    layer = int(np.clip(np.rint((distance - cfg.offset) / u + half), 0, s - 1))
    steps = (np.arange(s) - half) * u
    y, z = np.meshgrid(steps, height + steps, indexing="ij")
    x = np.full(y.size, cfg.offset + (layer - half) * u)
    return np.stack([x, y.ravel(), z.ravel()], axis=1)


def calibrate_stiffness(
    speed: float = 1.4,
    wall_distance: float = 0.4,
    target_ratio: float = 0.5,
    cfg: Optional[CanonicalOccupancyConfig] = None,
    params: Optional[FieldParams] = None,
) -> float:
    """
    Stiffness k for which a joint moving head-on at `speed` toward a flat
    wall `wall_distance` ahead keeps `target_ratio` of its speed.

    The correction scales with speed and is linear in k below the cap, so
    one unit-stiffness evaluation determines k for any `speed`.
    """
    cfg = cfg or CanonicalOccupancyConfig()
    params = params or FieldParams()
    offsets = wall_centers(wall_distance, cfg)
    distances = np.linalg.norm(offsets, ord=params.norm.ord, axis=1)
    cosine = offsets[:, 0] / np.linalg.norm(offsets, axis=1)
    unit_gain = float(np.sum(np.maximum(cosine, 0.0) * field_weights(distances, params)))
    if unit_gain <= 0:
        logger.warning(f"Wall at {wall_distance} m is outside the field range, stiffness undefined")
        return 0.0
    k = (1.0 - target_ratio) / unit_gain
    logger.info(f"Calibrated stiffness k={k:.6g} for {speed} m/s at {wall_distance} m (ratio {target_ratio})")
    return k

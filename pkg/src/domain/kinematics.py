"""
Rotation representation, forward kinematics, canonicalization and finite
velocities.

This module provides:
- 6D rotation <-> matrix conversion (Gram-Schmidt)
- Forward kinematics over the capsule skeleton
- Canonical frame extraction from shoulders and hips
- Canonicalization of points, directions and orientations
- Backward-difference velocities of a motion sequence
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.spatial.transform import Rotation

from core.exceptions import DegenerateFacingError, EmptySequenceError, InvalidRotationError
from models.frame import CanonicalFrame, ValueKind, wrap_angle, yaw_matrix
from models.motion import MotionSequence, Pose
from models.skeleton import Skeleton

logger = logging.getLogger(__name__)

ROTATION_EPS = 1e-8
FACING_EPS = 1e-6


def rot6d_to_matrix(r6d) -> np.ndarray:
    """
    Map 6D rotation blocks (..., 6) to rotation matrices (..., 3, 3).

    The first 3-vector is normalized, the second is orthogonalized against
    it and normalized, the third column is their cross product.

    Raises:
        InvalidRotationError: zero first vector or (near-)parallel vectors
    """
    r = np.asarray(r6d, dtype=np.float64)
    a1, a2 = r[..., 0:3], r[..., 3:6]

    n1 = np.linalg.norm(a1, axis=-1, keepdims=True)
    if np.any(n1 < ROTATION_EPS):
        raise InvalidRotationError("First 6D vector is zero")
    b1 = a1 / n1

    u2 = a2 - np.sum(b1 * a2, axis=-1, keepdims=True) * b1
    n2 = np.linalg.norm(u2, axis=-1, keepdims=True)
    if np.any(n2 < ROTATION_EPS * np.maximum(1.0, np.linalg.norm(a2, axis=-1, keepdims=True))):
        raise InvalidRotationError("6D vectors are parallel")
    b2 = u2 / n2
    b3 = np.cross(b1, b2)
    return np.stack([b1, b2, b3], axis=-1)


def matrix_to_rot6d(matrix) -> np.ndarray:
    m = np.asarray(matrix, dtype=np.float64)
    return np.concatenate([m[..., :, 0], m[..., :, 1]], axis=-1)


def rotation_between(a, b) -> np.ndarray:
    """Minimal rotation matrix taking direction `a` onto direction `b`"""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    axis = np.cross(a, b)
    sin = np.linalg.norm(axis)
    cos = float(np.clip(np.dot(a, b), -1.0, 1.0))
    if sin < 1e-12:
        if cos > 0:
            return np.eye(3)
        # Antiparallel: half turn about any perpendicular axis
        helper = np.array([1.0, 0.0, 0.0]) if abs(a[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        axis = np.cross(a, helper)
        return Rotation.from_rotvec(np.pi * axis / np.linalg.norm(axis)).as_matrix()
    return Rotation.from_rotvec(axis / sin * np.arctan2(sin, cos)).as_matrix()


def pose_yaw_pitch(yaw: float, pitch: float = 0.0) -> np.ndarray:
    """Root orientation facing `yaw`, leaning forward by `pitch` (rad)"""
    return yaw_matrix(yaw) @ Rotation.from_euler("y", pitch).as_matrix()


@dataclass(frozen=True)
class KinematicState:
    """World joint positions (j, 3) and world rotations (j, 3, 3)"""

    positions: np.ndarray
    rotations: np.ndarray


def forward_kinematics_full(pose: Pose, skeleton: Skeleton) -> KinematicState:
    local = rot6d_to_matrix(pose.joint_rot6d)
    root = rot6d_to_matrix(pose.root_rot6d)
    j = skeleton.joint_count
    positions = np.empty((j, 3))
    rotations = np.empty((j, 3, 3))

    positions[0] = pose.root_position
    rotations[0] = root @ local[0]
    for k in range(1, j):
        parent = skeleton.parents[k]
        positions[k] = positions[parent] + rotations[parent] @ skeleton.offsets[k]
        rotations[k] = rotations[parent] @ local[k]
    return KinematicState(positions, rotations)


def forward_kinematics(pose: Pose, skeleton: Skeleton) -> np.ndarray:
    """Joint world positions (j, 3)"""
    return forward_kinematics_full(pose, skeleton).positions


def facing_yaw_from_points(
    left_upper, right_upper, left_lower, right_lower, previous_yaw: Optional[float] = None
) -> float:
    """
    Yaw of the facing direction given left/right shoulder-like and hip-like points.

    right = (RU - LU) + (RL - LL) projected to XY; forward is `right` rotated
    +90 degrees about +Z.
    """
    right = (np.asarray(right_upper) - np.asarray(left_upper)) + (np.asarray(right_lower) - np.asarray(left_lower))
    right_xy = right[:2]
    norm = float(np.hypot(right_xy[0], right_xy[1]))
    if norm < FACING_EPS:
        if previous_yaw is None:
            raise DegenerateFacingError(norm)
        logger.debug(f"Degenerate facing (|right|={norm:.2e}), keeping previous yaw")
        return float(previous_yaw)
    forward = np.array([-right_xy[1], right_xy[0]]) / norm
    return float(np.arctan2(forward[1], forward[0]))


def canonical_frame(
    pose: Pose,
    skeleton: Skeleton,
    previous: Optional[Union[CanonicalFrame, float]] = None,
    joints: Optional[np.ndarray] = None,
) -> CanonicalFrame:
    """
    Root-anchored, facing-aligned frame of a pose.

    Args:
        previous: frame (or yaw) of the previous frame, used when the facing
            direction is degenerate
        joints: precomputed world joint positions
    """
    p = forward_kinematics(pose, skeleton) if joints is None else joints
    lm = skeleton.landmarks
    previous_yaw = previous.yaw if isinstance(previous, CanonicalFrame) else previous
    yaw = facing_yaw_from_points(
        p[lm["left_shoulder"]], p[lm["right_shoulder"]], p[lm["left_hip"]], p[lm["right_hip"]], previous_yaw
    )
    return CanonicalFrame.at(pose.root_position, yaw)


def canonicalize(values, frame: CanonicalFrame, kind: ValueKind) -> np.ndarray:
    """Express world values in the canonical frame"""
    if kind is ValueKind.POINT:
        return frame.points_to_canonical(values)
    if kind is ValueKind.DIRECTION:
        return frame.directions_to_canonical(values)
    return frame.orientations_to_canonical(values)


def decanonicalize(values, frame: CanonicalFrame, kind: ValueKind) -> np.ndarray:
    """Inverse of `canonicalize`"""
    if kind is ValueKind.POINT:
        return frame.points_to_world(values)
    if kind is ValueKind.DIRECTION:
        return frame.directions_to_world(values)
    return frame.orientations_to_world(values)


def canonicalize_pose(pose: Pose, frame: CanonicalFrame) -> Pose:
    root = frame.points_to_canonical(pose.root_position)
    orientation = frame.orientations_to_canonical(rot6d_to_matrix(pose.root_rot6d))
    return Pose(root, matrix_to_rot6d(orientation), pose.joint_rot6d, pose.foot_contact)


def decanonicalize_pose(pose: Pose, frame: CanonicalFrame) -> Pose:
    root = frame.points_to_world(pose.root_position)
    orientation = frame.orientations_to_world(rot6d_to_matrix(pose.root_rot6d))
    return Pose(root, matrix_to_rot6d(orientation), pose.joint_rot6d, pose.foot_contact)


@dataclass(frozen=True)
class SequenceVelocities:
    """Per-frame root velocity (n, 3), joint velocities (n, j, 3), yaw rate (n,)"""

    root: np.ndarray
    joints: np.ndarray
    yaw_rate: np.ndarray
    positions: np.ndarray
    yaws: np.ndarray


def sequence_yaws(seq: MotionSequence, positions: Optional[np.ndarray] = None) -> np.ndarray:
    """Facing yaw per frame, degenerate frames inherit the previous yaw"""
    if positions is None:
        positions = np.stack([forward_kinematics(pose, seq.skeleton) for pose in seq.frames])
    yaws = np.empty(len(seq))
    previous = None
    for i, pose in enumerate(seq.frames):
        previous = canonical_frame(pose, seq.skeleton, previous, positions[i]).yaw
        yaws[i] = previous
    return yaws


def finite_velocities(seq: MotionSequence) -> SequenceVelocities:
    """
    Backward-difference velocities scaled by fps; frame 0 copies frame 1.

    Raises:
        EmptySequenceError: fewer than two frames
    """
    if len(seq.frames) < 2:
        raise EmptySequenceError("Velocities need at least 2 frames", required=2)
    positions = np.stack([forward_kinematics(pose, seq.skeleton) for pose in seq.frames])
    yaws = sequence_yaws(seq, positions)

    joints = np.empty_like(positions)
    joints[1:] = (positions[1:] - positions[:-1]) * seq.fps
    joints[0] = joints[1]

    root = np.stack([pose.root_position for pose in seq.frames])
    root_velocity = np.empty_like(root)
    root_velocity[1:] = (root[1:] - root[:-1]) * seq.fps
    root_velocity[0] = root_velocity[1]

    yaw_rate = np.empty(len(seq))
    yaw_rate[1:] = wrap_angle(yaws[1:] - yaws[:-1]) * seq.fps
    yaw_rate[0] = yaw_rate[1]
    return SequenceVelocities(root_velocity, joints, yaw_rate, positions, yaws)


def label_foot_contacts(
    pose: Pose, skeleton: Skeleton, threshold: float = 0.05, joints: Optional[np.ndarray] = None
) -> Pose:
    """Contact flag is true iff the foot joint is lower than `threshold`"""
    p = forward_kinematics(pose, skeleton) if joints is None else joints
    left = bool(p[skeleton.index("left_foot"), 2] < threshold)
    right = bool(p[skeleton.index("right_foot"), 2] < threshold)
    return pose.with_contacts((left, right))


def transform_pose(pose: Pose, yaw: float, translation: Sequence[float] = (0.0, 0.0, 0.0)) -> Pose:
    """Rigidly rotate a pose about +Z through the world origin, then translate"""
    rz = yaw_matrix(yaw)
    root = rz @ pose.root_position + np.asarray(translation, dtype=np.float64)
    orientation = rz @ rot6d_to_matrix(pose.root_rot6d)
    return Pose(root, matrix_to_rot6d(orientation), pose.joint_rot6d, pose.foot_contact)

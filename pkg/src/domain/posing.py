"""
Pose realization from end-effector placements.

This module provides:
- realize_pose: rigid spine + analytic two-bone limbs reaching hand/foot points
- standing_pose and the standing end-effector offsets of a skeleton
- end_effector_points: world positions of root, hands and feet
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Mapping, Optional, Sequence

import numpy as np

from domain.kinematics import (
    forward_kinematics,
    forward_kinematics_full,
    label_foot_contacts,
    matrix_to_rot6d,
    pose_yaw_pitch,
    rotation_between,
)
from models.frame import yaw_matrix
from models.motion import IDENTITY_6D, Pose
from models.skeleton import END_EFFECTORS, LIMB_ENDS, Skeleton

logger = logging.getLogger(__name__)

FOOT_CLEARANCE = 0.04

# Pole directions in the body's yaw frame
_KNEE_POLE = np.array([1.0, 0.0, 0.0])
_ELBOW_POLE = np.array([-1.0, 0.0, -1.0]) / np.sqrt(2.0)


@dataclass(frozen=True)
class LimbChain:
    upper: int
    mid: int
    end: int
    upper_length: float
    lower_length: float

    @property
    def reach(self) -> float:
        return self.upper_length + self.lower_length


def limb_chain(skeleton: Skeleton, end_landmark: str) -> LimbChain:
    end = skeleton.index(end_landmark)
    mid = int(skeleton.parents[end])
    upper = int(skeleton.parents[mid])
    return LimbChain(
        upper,
        mid,
        end,
        float(np.linalg.norm(skeleton.offsets[mid])),
        float(np.linalg.norm(skeleton.offsets[end])),
    )


def _rest_positions(skeleton: Skeleton) -> np.ndarray:
    return forward_kinematics(Pose.rest(skeleton), skeleton)


@lru_cache(maxsize=16)
def standing_offsets(skeleton: Skeleton) -> Dict[str, np.ndarray]:
    """Hand and foot positions relative to the root of a relaxed standing pose (yaw frame)"""
    rest = _rest_positions(skeleton)
    offsets = {}
    for name in LIMB_ENDS:
        chain = limb_chain(skeleton, name)
        anchor = rest[chain.upper]
        if name.endswith("foot"):
            offsets[name] = anchor + np.array([0.0, 0.0, -0.99 * chain.reach])
        else:
            side = np.sign(anchor[1]) or 1.0
            offsets[name] = anchor + np.array([0.05, 0.02 * side, -0.95 * chain.reach])
    return offsets


def standing_root_height(skeleton: Skeleton) -> float:
    offsets = standing_offsets(skeleton)
    return float(-min(offsets["left_foot"][2], offsets["right_foot"][2]) + FOOT_CLEARANCE)


def _elbow_position(origin, target, chain: LimbChain, pole: np.ndarray, fallback: np.ndarray) -> np.ndarray:
    l1, l2 = chain.upper_length, chain.lower_length
    delta = target - origin
    d = float(np.linalg.norm(delta))
    axis = delta / d if d > 1e-9 else fallback
    d_min = max(abs(l1 - l2), 0.05 * chain.reach)
    d = float(np.clip(d, d_min, chain.reach * (1.0 - 1e-6)))

    a = (l1 * l1 - l2 * l2 + d * d) / (2.0 * d)
    h = np.sqrt(max(l1 * l1 - a * a, 0.0))
    bend = pole - np.dot(pole, axis) * axis
    norm = np.linalg.norm(bend)
    if norm < 1e-9:
        bend = np.cross(axis, [0.0, 0.0, 1.0])
        norm = np.linalg.norm(bend)
        if norm < 1e-9:
            bend, norm = np.array([1.0, 0.0, 0.0]), 1.0
    return origin + a * axis + h * bend / norm


def realize_pose(
    skeleton: Skeleton,
    root_position: Sequence[float],
    yaw: float,
    targets: Optional[Mapping[str, Sequence[float]]] = None,
    pitch: float = 0.0,
    contact_height: float = 0.05,
    lean: Optional[np.ndarray] = None,
) -> Pose:
    """
    Build a pose whose hands and feet reach the requested world points.

    The spine chain keeps its rest shape under the root orientation
    (yaw, then forward lean `pitch`, or the heading-relative rotation
    `lean` when given). Each limb is solved analytically;
    unreachable targets are approached along the straight line.
    Missing targets fall back to the standing offsets.
    """
    root_position = np.asarray(root_position, dtype=np.float64)
    root_matrix = pose_yaw_pitch(yaw, pitch) if lean is None else yaw_matrix(yaw) @ np.asarray(lean)
    heading = yaw_matrix(yaw)
    standing = standing_offsets(skeleton)
    targets = dict(targets or {})

    local = np.tile(np.eye(3), (skeleton.joint_count, 1, 1))
    base = Pose(root_position, matrix_to_rot6d(root_matrix), np.tile(IDENTITY_6D, (skeleton.joint_count, 1)))
    state = forward_kinematics_full(base, skeleton)
    positions, rotations = state.positions.copy(), state.rotations.copy()

    for name in LIMB_ENDS:
        chain = limb_chain(skeleton, name)
        target = targets.get(name)
        if target is None:
            target = root_position + heading @ standing[name]
        target = np.asarray(target, dtype=np.float64)

        pole = heading @ (_KNEE_POLE if name.endswith("foot") else _ELBOW_POLE)
        origin = positions[chain.upper]
        parent_rotation = rotations[int(skeleton.parents[chain.upper])]
        rest_dir = parent_rotation @ skeleton.offsets[chain.mid]
        elbow = _elbow_position(origin, target, chain, pole, rest_dir / np.linalg.norm(rest_dir))

        upper_global = rotation_between(rest_dir, elbow - origin) @ parent_rotation
        reached = elbow + (target - elbow) / max(np.linalg.norm(target - elbow), 1e-12) * chain.lower_length
        lower_dir = upper_global @ skeleton.offsets[chain.end]
        mid_global = rotation_between(lower_dir, reached - elbow) @ upper_global

        local[chain.upper] = parent_rotation.T @ upper_global
        local[chain.mid] = upper_global.T @ mid_global
        rotations[chain.upper], rotations[chain.mid] = upper_global, mid_global
        positions[chain.mid], positions[chain.end] = elbow, reached

    pose = Pose(root_position, matrix_to_rot6d(root_matrix), matrix_to_rot6d(local))
    return label_foot_contacts(pose, skeleton, contact_height)


def standing_pose(skeleton: Skeleton, x: float = 0.0, y: float = 0.0, yaw: float = 0.0, contact_height: float = 0.05) -> Pose:
    return realize_pose(skeleton, (x, y, standing_root_height(skeleton)), yaw, contact_height=contact_height)


def end_effector_points(pose: Pose, skeleton: Skeleton, joints: Optional[np.ndarray] = None) -> np.ndarray:
    """(5, 3) world positions in the order root, left hand, right hand, left foot, right foot"""
    p = forward_kinematics(pose, skeleton) if joints is None else joints
    return p[skeleton.indices(END_EFFECTORS)]

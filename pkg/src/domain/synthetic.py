"""
Procedural motion generators.

This module provides:
- generate_motion: seeded walk, turn, sit-rise, crawl and reach sequences

Poses are produced with realize_pose from root paths and hand/foot
placements, so every generated frame is a valid skeleton pose.
"""

import logging
from typing import Callable, Dict, List, Optional

import numpy as np

from domain.posing import FOOT_CLEARANCE, realize_pose, standing_offsets, standing_root_height
from models.frame import yaw_matrix
from models.motion import MotionSequence, Pose
from models.skeleton import Skeleton, default_skeleton
from models.synthetic import MotionKind, SyntheticMotionSpec

logger = logging.getLogger(__name__)

GAIT_PERIOD = 1.0
STEP_LIFT = 0.08
CRAWL_ROOT_HEIGHT = 0.42
CRAWL_PITCH_DEG = 80.0
SIT_ROOT_HEIGHT = 0.55

_DEFAULT_SPEEDS = {
    MotionKind.WALK: 1.0,
    MotionKind.TURN: 0.8,
    MotionKind.SIT: 0.2,
    MotionKind.CRAWL: 0.3,
    MotionKind.REACH: 0.0,
}


def _gait_offset(phase: float, stride: float, lift: float):
    """Foot offset along travel and height for a gait phase in [0, 1)"""
    if phase < 0.5:
        return stride / 2.0 - phase / 0.5 * stride, 0.0
    s = (phase - 0.5) / 0.5
    return -stride / 2.0 + s * stride, lift * np.sin(np.pi * s)


class _Builder:
    """Shared state of one generation run"""

    def __init__(self, spec: SyntheticMotionSpec, skeleton: Skeleton):
        self.spec = spec
        self.skeleton = skeleton
        self.rng = np.random.default_rng(spec.seed)
        self.speed = (spec.speed or _DEFAULT_SPEEDS[spec.kind]) * self.rng.uniform(0.9, 1.1)
        self.start = np.array([*self.rng.uniform(-0.5, 0.5, size=2), 0.0])
        self.heading = float(self.rng.uniform(-np.pi, np.pi))
        self.phase = float(self.rng.uniform(0.0, 1.0))
        self.offsets = standing_offsets(skeleton)
        self.height = standing_root_height(skeleton)
        count = max(2, int(round(spec.duration * spec.fps)) + 1)
        self.times = np.arange(count) / spec.fps

    def place(self, root_xy, yaw: float, local: Dict[str, np.ndarray]) -> Dict[str, np.ndarray]:
        """Heading-frame offsets (x, y relative to root, z absolute) to world points"""
        rotation = yaw_matrix(yaw)
        world = {}
        for name, offset in local.items():
            xy = rotation @ np.array([offset[0], offset[1], 0.0])
            world[name] = np.array([root_xy[0] + xy[0], root_xy[1] + xy[1], offset[2]])
        return world

    def hand(self, name: str, root_z: float, swing: float = 0.0) -> np.ndarray:
        rest = self.offsets[name]
        return np.array([rest[0] + swing, rest[1], root_z + rest[2]])

    def foot(self, name: str, along: float = 0.0, lift: float = 0.0) -> np.ndarray:
        rest = self.offsets[name]
        return np.array([rest[0] + along, rest[1], FOOT_CLEARANCE + lift])


def _gait_frames(builder: _Builder, yaw_rate: float) -> List[Pose]:
    stride = builder.speed * GAIT_PERIOD / 2.0
    poses = []
    position = builder.start[:2].copy()
    yaw = builder.heading
    previous_t = 0.0
    for t in builder.times:
        dt = t - previous_t
        previous_t = t
        yaw += yaw_rate * dt
        position = position + builder.speed * dt * np.array([np.cos(yaw), np.sin(yaw)])
        cycle = (t / GAIT_PERIOD + builder.phase) % 1.0
        left_along, left_lift = _gait_offset(cycle, stride, STEP_LIFT)
        right_along, right_lift = _gait_offset((cycle + 0.5) % 1.0, stride, STEP_LIFT)
        bob = 0.02 * np.cos(4.0 * np.pi * cycle)
        root_z = builder.height - 0.03 + bob
        local = {
            "left_foot": builder.foot("left_foot", left_along, left_lift),
            "right_foot": builder.foot("right_foot", right_along, right_lift),
            "left_hand": builder.hand("left_hand", root_z, -0.6 * left_along),
            "right_hand": builder.hand("right_hand", root_z, -0.6 * right_along),
        }
        root = np.array([position[0], position[1], root_z])
        poses.append(realize_pose(builder.skeleton, root, yaw, builder.place(position, yaw, local)))
    return poses


def _walk(builder: _Builder) -> List[Pose]:
    return _gait_frames(builder, 0.0)


def _turn(builder: _Builder) -> List[Pose]:
    rate = np.radians(builder.rng.uniform(30.0, 60.0)) * builder.rng.choice([-1.0, 1.0])
    return _gait_frames(builder, float(rate))


def _sit(builder: _Builder) -> List[Pose]:
    """Lower the pelvis backwards onto a seat, hold, rise again"""
    duration = builder.times[-1] if builder.times[-1] > 0 else 1.0
    depth = builder.rng.uniform(0.15, 0.25)
    poses = []
    for t in builder.times:
        s = np.sin(np.pi * t / duration) ** 2
        root_xy = builder.start[:2] + yaw_matrix(builder.heading)[:2, :2] @ np.array([-depth * s, 0.0])
        root_z = builder.height - (builder.height - SIT_ROOT_HEIGHT) * s
        lean = np.radians(30.0) * s
        local = {
            "left_foot": builder.foot("left_foot", depth * s),
            "right_foot": builder.foot("right_foot", depth * s),
            "left_hand": builder.hand("left_hand", root_z, 0.15 * s),
            "right_hand": builder.hand("right_hand", root_z, 0.15 * s),
        }
        root = np.array([root_xy[0], root_xy[1], root_z])
        poses.append(
            realize_pose(builder.skeleton, root, builder.heading, builder.place(root_xy, builder.heading, local), pitch=lean)
        )
    return poses


def _crawl(builder: _Builder) -> List[Pose]:
    """Hands and knees with a low pelvis and near-horizontal trunk"""
    stride = builder.speed * GAIT_PERIOD / 2.0
    pitch = np.radians(CRAWL_PITCH_DEG)
    poses = []
    for t in builder.times:
        position = builder.start[:2] + builder.speed * t * np.array([np.cos(builder.heading), np.sin(builder.heading)])
        cycle = (t / GAIT_PERIOD + builder.phase) % 1.0
        a_along, a_lift = _gait_offset(cycle, stride, 0.05)
        b_along, b_lift = _gait_offset((cycle + 0.5) % 1.0, stride, 0.05)
        root_z = CRAWL_ROOT_HEIGHT + 0.01 * np.cos(4.0 * np.pi * cycle)
        local = {
            "left_hand": np.array([0.48 + a_along, 0.18, 0.05 + a_lift]),
            "right_hand": np.array([0.48 + b_along, -0.18, 0.05 + b_lift]),
            "left_foot": np.array([-0.62 + b_along, 0.12, 0.06 + b_lift]),
            "right_foot": np.array([-0.62 + a_along, -0.12, 0.06 + a_lift]),
        }
        root = np.array([position[0], position[1], root_z])
        poses.append(
            realize_pose(
                builder.skeleton, root, builder.heading, builder.place(position, builder.heading, local), pitch=pitch
            )
        )
    return poses


def _reach(builder: _Builder) -> List[Pose]:
    """Standing in place while one hand reaches toward a point and returns"""
    duration = builder.times[-1] if builder.times[-1] > 0 else 1.0
    side = "left_hand" if builder.rng.uniform() < 0.5 else "right_hand"
    sign = 1.0 if side == "left_hand" else -1.0
    goal = np.array([builder.rng.uniform(0.3, 0.5), sign * builder.rng.uniform(0.1, 0.4), builder.rng.uniform(0.9, 1.5)])
    root_z = builder.height
    rest = builder.hand(side, root_z)
    poses = []
    for t in builder.times:
        s = np.sin(np.pi * t / duration) ** 2
        local = {
            "left_foot": builder.foot("left_foot"),
            "right_foot": builder.foot("right_foot"),
            "left_hand": builder.hand("left_hand", root_z),
            "right_hand": builder.hand("right_hand", root_z),
        }
        local[side] = rest + s * (goal - rest)
        root = np.array([builder.start[0], builder.start[1], root_z])
        poses.append(
            realize_pose(builder.skeleton, root, builder.heading, builder.place(builder.start[:2], builder.heading, local))
        )
    return poses


_GENERATORS: Dict[MotionKind, Callable[[_Builder], List[Pose]]] = {
    MotionKind.WALK: _walk,
    MotionKind.TURN: _turn,
    MotionKind.SIT: _sit,
    MotionKind.CRAWL: _crawl,
    MotionKind.REACH: _reach,
}


def generate_motion(spec: SyntheticMotionSpec, skeleton: Optional[Skeleton] = None) -> MotionSequence:
    """Deterministic motion for a spec; same spec and skeleton give identical frames"""
    skeleton = skeleton or default_skeleton()
    builder = _Builder(spec, skeleton)
    frames = _GENERATORS[spec.kind](builder)
    logger.debug(f"Generated {spec.name}: {len(frames)} frames at {spec.fps} fps")
    return MotionSequence(skeleton, tuple(frames), spec.fps, spec.name)

"""
Controller state encoding and policies.

This module provides:
- MotionTrack: world poses with their velocities and facing, grown by the rollout
- encode_pose_state / encode_history / encode_target: canonical state encoders
- Policy: predictor interface, with ZeroVelocityPolicy and the analytic BaselinePolicy
- mask_control_signals: random blanking of control channels
- build_training_pairs: supervised samples from a motion and its scene
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence, Union

import numpy as np

from core.exceptions import EmptySequenceError, PolicyError
from domain.field import regulated_joints, steer_around
from domain.kinematics import (
    finite_velocities,
    forward_kinematics,
    matrix_to_rot6d,
    rot6d_to_matrix,
)
from domain.occupancy import occupied_centers, sample_canonical_occupancy
from domain.posing import end_effector_points, realize_pose, standing_offsets
from domain.providers import OccupancyProvider
from models.control import (
    TARGET_POINTS,
    ControlSignals,
    FutureSummary,
    HistoryState,
    PoseState,
    Prediction,
    TargetSpec,
)
from models.frame import CanonicalFrame, wrap_angle, yaw_matrix
from models.motion import MotionSequence, Pose
from models.params import CanonicalOccupancyConfig, FieldParams, PolicyLimits, WindowConfig
from models.skeleton import END_EFFECTORS, LIMB_ENDS, Skeleton

logger = logging.getLogger(__name__)


@dataclass
class MotionTrack:
    """World-space motion with per-frame velocities (per second) and facing yaw"""

    skeleton: Skeleton
    rate: float
    poses: List[Pose] = field(default_factory=list)
    joints: List[np.ndarray] = field(default_factory=list)
    yaws: List[float] = field(default_factory=list)
    root_velocities: List[np.ndarray] = field(default_factory=list)
    joint_velocities: List[np.ndarray] = field(default_factory=list)
    yaw_rates: List[float] = field(default_factory=list)

    @classmethod
    def from_sequence(cls, seq: MotionSequence) -> "MotionTrack":
        vel = finite_velocities(seq)
        track = cls(seq.skeleton, seq.fps)
        for i, pose in enumerate(seq.frames):
            track.append(pose, vel.positions[i], vel.yaws[i], vel.root[i], vel.joints[i], vel.yaw_rate[i])
        return track

    def __len__(self) -> int:
        return len(self.poses)

    def append(self, pose: Pose, joints, yaw: float, root_velocity, joint_velocities, yaw_rate: float) -> None:
        self.poses.append(pose)
        self.joints.append(np.asarray(joints, dtype=np.float64))
        self.yaws.append(float(yaw))
        self.root_velocities.append(np.asarray(root_velocity, dtype=np.float64))
        self.joint_velocities.append(np.asarray(joint_velocities, dtype=np.float64))
        self.yaw_rates.append(float(yaw_rate))

    def frame(self, t: int) -> CanonicalFrame:
        return CanonicalFrame.at(self.poses[t].root_position, self.yaws[t])


def _as_track(source: Union[MotionTrack, MotionSequence]) -> MotionTrack:
    return source if isinstance(source, MotionTrack) else MotionTrack.from_sequence(source)


def _heading_relative(pose: Pose, frame: CanonicalFrame) -> np.ndarray:
    return matrix_to_rot6d(frame.orientations_to_canonical(rot6d_to_matrix(pose.root_rot6d)))


def encode_pose_state(source: Union[MotionTrack, MotionSequence], t: int) -> PoseState:
    """Pose, joint positions and velocities of frame t in its own canonical frame"""
    track = _as_track(source)
    frame = track.frame(t)
    pose = track.poses[t]
    return PoseState(
        root_position=frame.points_to_canonical(pose.root_position),
        root_rot6d=_heading_relative(pose, frame),
        joint_rot6d=pose.joint_rot6d.copy(),
        joints=frame.points_to_canonical(track.joints[t]),
        root_velocity=frame.directions_to_canonical(track.root_velocities[t]),
        joint_velocities=frame.directions_to_canonical(track.joint_velocities[t]),
        yaw_rate=track.yaw_rates[t],
        foot_contact=pose.foot_contact,
    )


def encode_history(source: Union[MotionTrack, MotionSequence], t: int, w: int) -> HistoryState:
    """
    Frames t-w..t in the canonical frame of frame t. Indices before the
    start repeat frame 0.
    """
    track = _as_track(source)
    frame = track.frame(t)
    limbs = track.skeleton.indices(LIMB_ENDS)
    picks = [max(i, 0) for i in range(t - w, t + 1)]
    return HistoryState(
        root_positions=np.stack([frame.points_to_canonical(track.poses[i].root_position) for i in picks]),
        limb_positions=np.stack([frame.points_to_canonical(track.joints[i][limbs]) for i in picks]),
        root_rot6d=np.stack([_heading_relative(track.poses[i], frame) for i in picks]),
        root_velocities=np.stack([frame.directions_to_canonical(track.root_velocities[i]) for i in picks]),
        limb_velocities=np.stack([frame.directions_to_canonical(track.joint_velocities[i][limbs]) for i in picks]),
        yaw_rates=np.array([track.yaw_rates[i] for i in picks]),
    )


def encode_target(target: Optional[TargetSpec], frame: CanonicalFrame) -> ControlSignals:
    """Target channel in the canonical frame; absent points stay NaN"""
    if target is None:
        return ControlSignals()
    points = np.full((TARGET_POINTS, 3), np.nan)
    mask = target.mask
    points[mask] = frame.points_to_canonical(target.points[mask])
    yaw = None if target.yaw is None else float(frame.yaw_to_canonical(target.yaw))
    return ControlSignals(target=points, target_yaw=yaw)


def decode_target(points, frame: CanonicalFrame) -> np.ndarray:
    """Inverse of encode_target for the point channel"""
    points = np.asarray(points, dtype=np.float64)
    world = np.full_like(points, np.nan)
    mask = ~np.isnan(points[:, 0])
    world[mask] = frame.points_to_world(points[mask])
    return world


class Policy(ABC):
    """
    Next-state predictor.

    Implementations receive the canonical history, current state and
    control signals of frame t and return the next state in the same frame.
    """

    @abstractmethod
    def step(
        self,
        history: HistoryState,
        state: PoseState,
        signals: ControlSignals,
        rng: Optional[np.random.Generator] = None,
    ) -> Prediction:
        pass

    def describe(self) -> str:
        return type(self).__name__


def policy_step(
    policy: Policy,
    history: HistoryState,
    state: PoseState,
    signals: ControlSignals,
    rng: Optional[np.random.Generator] = None,
    frame: int = 0,
) -> Prediction:
    """
    One policy call for control frame `frame`.

    Raises:
        PolicyError: the policy raised; the cause is chained
    """
    try:
        return policy.step(history, state, signals, rng)
    except PolicyError:
        raise
    except Exception as e:
        raise PolicyError(frame, e) from e


class ZeroVelocityPolicy(Policy):
    """Holds the current pose"""

    def step(self, history, state, signals, rng=None) -> Prediction:
        return Prediction(
            root_velocity=np.zeros(3),
            yaw_rate=0.0,
            root_rot6d=state.root_rot6d.copy(),
            joint_rot6d=state.joint_rot6d.copy(),
            joint_velocities=np.zeros_like(state.joint_velocities),
        )


class BaselinePolicy(Policy):
    """
    Analytic goal-reaching controller.

    The root heads for the target root at up to v_max, the facing turns
    toward the goal at up to turn_max and adopts the target facing once
    close. Hand and foot offsets blend from the standing offsets toward the
    target offsets as the goal gets near. When occupancy is present, the
    field gain of the root and of each end-effector removes the part of the
    body velocity heading into the occupancy that joint approaches: the body
    stops in front of a head-on obstacle and slides along an oblique one,
    so it resumes once a moving obstacle clears.
    """

    def __init__(
        self,
        skeleton: Skeleton,
        limits: Optional[PolicyLimits] = None,
        field_params: Optional[FieldParams] = None,
        window: Optional[WindowConfig] = None,
        occupancy_config: Optional[CanonicalOccupancyConfig] = None,
        use_occupancy: bool = True,
        regulate: bool = True,
        contact_height: float = 0.05,
    ):
        self.skeleton = skeleton
        self.limits = limits or PolicyLimits()
        self.field_params = field_params or FieldParams()
        self.window = window or WindowConfig()
        self.occupancy_config = occupancy_config
        self.use_occupancy = use_occupancy
        self.regulate = regulate
        self.contact_height = contact_height
        self._ee = skeleton.indices(END_EFFECTORS)
        self._limbs = skeleton.indices(LIMB_ENDS)
        rest = standing_offsets(skeleton)
        self._rest_offsets = np.stack([rest[name] for name in LIMB_ENDS])
        self._regulated = regulated_joints(skeleton, self.field_params)

    def describe(self) -> str:
        flags = []
        if not self.use_occupancy:
            flags.append("no-occupancy")
        if not self.regulate:
            flags.append("no-regulation")
        return "baseline" + (f"[{','.join(flags)}]" if flags else "")

    # Steering

    def _root_command(self, state: PoseState, signals: ControlSignals, dt: float):
        root = state.root_position
        goal = None if signals.target is None or np.isnan(signals.target[0, 0]) else signals.target[0]
        if goal is None:
            return np.zeros(3), 0.0, np.inf

        delta = goal - root
        distance = float(np.hypot(delta[0], delta[1]))
        velocity = np.zeros(3)
        if distance > 1e-9:
            speed = min(self.limits.v_max, distance / dt)
            velocity[:2] = delta[:2] / distance * speed
        velocity[2] = float(np.clip(delta[2] / dt, -self.limits.v_vertical, self.limits.v_vertical))

        if distance > self.limits.face_radius:
            desired = float(np.arctan2(delta[1], delta[0]))
        else:
            desired = signals.target_yaw if signals.target_yaw is not None else 0.0
        turn_max = np.radians(self.limits.turn_max_deg)
        yaw_rate = float(np.clip(wrap_angle(desired) / dt, -turn_max, turn_max))
        return velocity, yaw_rate, distance

    def _limb_offsets(self, state: PoseState, signals: ControlSignals, distance: float, yaw_next: float, dt: float):
        """Hand/foot offsets from the root in the next heading frame"""
        current = state.joints[self._limbs] - state.root_position
        heading = yaw_matrix(yaw_next)
        current = current @ heading
        weight = float(np.clip(1.0 - distance / self.limits.blend_radius, 0.0, 1.0))
        desired = self._rest_offsets.copy()
        target = signals.target
        if weight > 0 and target is not None and not np.isnan(target[0, 0]):
            present = ~np.isnan(target[1:, 0])
            goal_offsets = (target[1:] - target[0]) @ heading
            desired[present] = (1.0 - weight) * desired[present] + weight * goal_offsets[present]

        step = desired - current
        norms = np.linalg.norm(step, axis=1, keepdims=True)
        reach = self.limits.ee_blend_rate * dt
        scale = np.where(norms > reach, reach / np.maximum(norms, 1e-12), 1.0)
        return current + step * scale

    def step(self, history, state, signals, rng=None) -> Prediction:
        dt = self.window.dt
        root = state.root_position
        velocity, yaw_rate, distance = self._root_command(state, signals, dt)
        yaw_next = yaw_rate * dt
        offsets = self._limb_offsets(state, signals, distance, yaw_next, dt)
        heading = yaw_matrix(yaw_next)

        def limb_points(root_velocity):
            return root + root_velocity * dt + offsets @ heading.T

        limbs_next = limb_points(velocity)
        deltas = None
        occupancy = signals.occupancy if self.use_occupancy else None
        if self.regulate and occupancy is not None:
            centers = occupied_centers(occupancy, self.occupancy_config)
            index = np.asarray(self._regulated, dtype=np.int64)
            steered = steer_around(velocity, state.joints[index], centers, self.field_params)
            deltas = np.zeros((self.skeleton.joint_count, 3))
            deltas[index] = steered - velocity
            if np.any(steered != velocity):
                velocity = steered
                limbs_next = limb_points(velocity)

        root_next = root + velocity * dt
        lean = rot6d_to_matrix(state.root_rot6d)
        pose = realize_pose(
            self.skeleton,
            root_next,
            yaw_next,
            targets=dict(zip(LIMB_ENDS, limbs_next)),
            contact_height=self.contact_height,
            lean=lean,
        )
        joints_next = forward_kinematics(pose, self.skeleton)
        joint_velocities = (joints_next - state.joints) / dt
        future = self._future(pose, joints_next, velocity, yaw_rate, yaw_next, joint_velocities, dt)
        return Prediction(
            root_velocity=velocity,
            yaw_rate=yaw_rate,
            root_rot6d=matrix_to_rot6d(lean),
            joint_rot6d=pose.joint_rot6d.copy(),
            joint_velocities=joint_velocities,
            future=future,
            field_deltas=deltas,
            limb_targets=limbs_next,
        )

    def _future(self, pose, joints_next, velocity, yaw_rate, yaw_next, joint_velocities, dt) -> FutureSummary:
        """Constant-velocity extrapolation in the canonical frame of the next frame"""
        frame_next = CanonicalFrame.at(pose.root_position, yaw_next)
        f = self.window.future
        steps = (np.arange(1, f + 1) * dt)[:, None]
        roots = pose.root_position + steps * velocity
        limbs = joints_next[self._limbs][None] + steps[:, :, None] * velocity
        return FutureSummary(
            root_positions=frame_next.points_to_canonical(roots),
            limb_positions=frame_next.points_to_canonical(limbs),
            joint_rot6d=np.repeat(pose.joint_rot6d[None], f, axis=0),
            root_velocities=np.repeat(frame_next.directions_to_canonical(velocity)[None], f, axis=0),
            limb_velocities=np.repeat(
                frame_next.directions_to_canonical(joint_velocities[self._limbs])[None], f, axis=0
            ),
            yaw_rates=np.full(f, yaw_rate),
        )


def mask_control_signals(
    signals: ControlSignals,
    rng: np.random.Generator,
    p_target: float = 0.5,
    p_occupancy: float = 0.1,
) -> ControlSignals:
    """
    Blank each target point with probability p_target and the occupancy
    channels with probability p_occupancy. Blanked points become NaN,
    blanked channels None.
    """
    target = signals.target
    if target is not None:
        target = target.copy()
        drop = rng.uniform(size=TARGET_POINTS) < p_target
        target[drop] = np.nan
    occupancy, bps = signals.occupancy, signals.bps
    if rng.uniform() < p_occupancy:
        occupancy, bps = None, None
    return signals.without(target=target, occupancy=occupancy, bps=bps)


@dataclass(frozen=True, eq=False)
class TrainingPair:
    """One supervised sample: inputs at frame t, ground truth of frame t+1"""

    index: int
    history: HistoryState
    state: PoseState
    signals: ControlSignals
    target: Prediction


def _ground_truth(track: MotionTrack, t: int, future: int) -> Prediction:
    frame, nxt = track.frame(t), t + 1
    frame_next = track.frame(nxt)
    limbs = track.skeleton.indices(LIMB_ENDS)
    picks = [min(i, len(track) - 1) for i in range(nxt + 1, nxt + 1 + future)]
    summary = FutureSummary(
        root_positions=np.stack([frame_next.points_to_canonical(track.poses[i].root_position) for i in picks]),
        limb_positions=np.stack([frame_next.points_to_canonical(track.joints[i][limbs]) for i in picks]),
        joint_rot6d=np.stack([track.poses[i].joint_rot6d for i in picks]),
        root_velocities=np.stack([frame_next.directions_to_canonical(track.root_velocities[i]) for i in picks]),
        limb_velocities=np.stack(
            [frame_next.directions_to_canonical(track.joint_velocities[i][limbs]) for i in picks]
        ),
        yaw_rates=np.array([track.yaw_rates[i] for i in picks]),
    )
    return Prediction(
        root_velocity=frame.directions_to_canonical(track.root_velocities[nxt]),
        yaw_rate=track.yaw_rates[nxt],
        root_rot6d=_heading_relative(track.poses[nxt], frame_next),
        joint_rot6d=track.poses[nxt].joint_rot6d.copy(),
        joint_velocities=frame.directions_to_canonical(track.joint_velocities[nxt]),
        future=summary,
    )


def build_training_pairs(
    seq: MotionSequence,
    provider: OccupancyProvider,
    cfg: Optional[CanonicalOccupancyConfig] = None,
    window: Optional[WindowConfig] = None,
) -> Iterator[TrainingPair]:
    """
    Supervised samples of a motion at the control rate. The target of every
    sample is the end-effector placement of the last frame.

    Raises:
        EmptySequenceError: fewer than two frames after resampling
    """
    cfg = cfg or CanonicalOccupancyConfig()
    window = window or WindowConfig()
    resampled = seq.decimated(window.rate)
    if len(resampled) < 2:
        raise EmptySequenceError("Training pairs need at least 2 frames at the control rate", required=2)
    track = MotionTrack.from_sequence(resampled)
    final = TargetSpec(end_effector_points(track.poses[-1], track.skeleton, track.joints[-1]))

    for t in range(len(track) - 1):
        frame = track.frame(t)
        height = float(track.poses[t].root_position[2])
        signals = encode_target(final, frame).without(
            occupancy=sample_canonical_occupancy(provider, frame, t * window.dt, cfg, height)
        )
        yield TrainingPair(
            index=t,
            history=encode_history(track, t, window.history),
            state=encode_pose_state(track, t),
            signals=signals,
            target=_ground_truth(track, t, window.future),
        )


def target_from_pose(pose: Pose, skeleton: Skeleton, yaw: Optional[float] = None) -> TargetSpec:
    return TargetSpec(end_effector_points(pose, skeleton), yaw)


def masked_target(points: Sequence[Optional[Sequence[float]]], yaw: Optional[float] = None) -> TargetSpec:
    return TargetSpec.from_points(points, yaw)

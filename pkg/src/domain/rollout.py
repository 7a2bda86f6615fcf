"""
Auto-regressive rollout of a policy in a scene.

Each step builds the control signals from the tracked world root and
facing, calls the policy, applies field regulation when the policy did not,
integrates the predicted velocities with explicit Euler steps at the
control rate and records the new frame.
"""

import logging
from typing import Optional, Sequence

import numpy as np
from pydantic import Field

from core.exceptions import PolicyError, ValidationError
from domain.controller import MotionTrack, Policy, encode_history, encode_pose_state, encode_target, policy_step
from domain.field import apply_regulation, regulated_joints
from domain.kinematics import canonical_frame, forward_kinematics, label_foot_contacts, matrix_to_rot6d, rot6d_to_matrix
from domain.metrics import penetrated_voxels
from domain.occupancy import BpsBasis, bps_encode, occupied_centers, sample_canonical_occupancy
from domain.posing import realize_pose
from domain.providers import OccupancyProvider
from models.control import ControlSignals, Prediction, TargetEvent, WorldState
from models.episode import EpisodeResult, FrameRecord, OccupancyEncoding
from models.frame import CanonicalFrame, wrap_angle, yaw_matrix
from models.motion import Pose
from models.params import CanonicalOccupancyConfig, FieldParams, StrictModel, WindowConfig
from models.skeleton import LIMB_ENDS, Skeleton, default_skeleton

logger = logging.getLogger(__name__)


class RolloutSettings(StrictModel):
    """Scene sensing and regulation used by a rollout"""

    window: WindowConfig = Field(default_factory=WindowConfig)
    occupancy: CanonicalOccupancyConfig = Field(default_factory=CanonicalOccupancyConfig)
    field: FieldParams = Field(default_factory=FieldParams)
    regulation: bool = True
    use_occupancy: bool = True
    encoding: OccupancyEncoding = OccupancyEncoding.GRID
    bps_points: int = Field(1024, ge=1)
    bps_radius: float = Field(1.0, gt=0)
    bps_seed: int = 0
    contact_height: float = Field(0.05, gt=0)


def active_target(schedule: Sequence[TargetEvent], t: float):
    """Target of the last event whose time is <= t"""
    active = None
    for event in schedule:
        if event.time <= t + 1e-9:
            active = event.target
        else:
            break
    return active


class Rollout:
    """State of one running episode"""

    def __init__(
        self,
        policy: Policy,
        skeleton: Skeleton,
        provider: OccupancyProvider,
        schedule: Sequence[TargetEvent],
        settings: RolloutSettings,
        seed: int = 0,
    ):
        self.policy = policy
        self.skeleton = skeleton
        self.provider = provider
        self.schedule = sorted(schedule, key=lambda event: event.time)
        self.settings = settings
        self.rng = np.random.default_rng(seed)
        self.dt = settings.window.dt
        self.track = MotionTrack(skeleton, settings.window.rate)
        self.world: Optional[WorldState] = None
        self._regulated = regulated_joints(skeleton, settings.field)
        self._limbs = skeleton.indices(LIMB_ENDS)
        self._basis = (
            BpsBasis.sample(settings.bps_points, settings.bps_seed)
            if settings.encoding is OccupancyEncoding.BPS
            else None
        )

    def start(self, pose: Pose) -> None:
        """Place the initial pose with zero velocities"""
        joints = forward_kinematics(pose, self.skeleton)
        frame = canonical_frame(pose, self.skeleton, joints=joints)
        pose = label_foot_contacts(pose, self.skeleton, self.settings.contact_height, joints)
        self.world = WorldState(np.array(pose.root_position, dtype=np.float64), frame.yaw)
        self.track.append(pose, joints, frame.yaw, np.zeros(3), np.zeros_like(joints), 0.0)

    def frame(self) -> CanonicalFrame:
        return CanonicalFrame.at(self.world.position, self.world.yaw)

    def sense(self, t: float):
        """Canonical occupancy of the current frame, or None when sensing is off"""
        if not self.settings.use_occupancy:
            return None
        height = float(self.world.position[2])
        return sample_canonical_occupancy(self.provider, self.frame(), t, self.settings.occupancy, height)

    def signals(self, t: float, c_o) -> ControlSignals:
        frame = self.frame()
        signals = encode_target(active_target(self.schedule, t), frame)
        if c_o is None:
            return signals
        if self._basis is not None:
            height = float(self.world.position[2])
            bps = bps_encode(self.provider, frame, t, self._basis, self.settings.bps_radius, height)
            return signals.without(bps=bps)
        return signals.without(occupancy=c_o)

    def _regulate(self, prediction: Prediction, state, c_o) -> Prediction:
        if prediction.field_deltas is not None or not self.settings.regulation or c_o is None:
            return prediction
        centers = occupied_centers(c_o, self.settings.occupancy)
        if len(centers) == 0:
            return prediction
        regulated, _ = apply_regulation(prediction, state.joints, centers, self.settings.field, self._regulated)
        return regulated

    def _next_pose(self, prediction: Prediction, frame: CanonicalFrame, root_next: np.ndarray, yaw_next: float):
        lean = rot6d_to_matrix(prediction.root_rot6d)
        if prediction.limb_targets is not None:
            targets = frame.points_to_world(prediction.limb_targets)
            return realize_pose(
                self.skeleton,
                root_next,
                yaw_next,
                targets=dict(zip(LIMB_ENDS, targets)),
                contact_height=self.settings.contact_height,
                lean=lean,
            )

        pose = Pose(root_next, matrix_to_rot6d(yaw_matrix(yaw_next) @ lean), prediction.joint_rot6d)
        deltas = prediction.field_deltas
        if deltas is not None and np.any(deltas[self._limbs]):
            # Corrected limb velocities move hands and feet; the limbs are re-solved to follow
            joints = forward_kinematics(pose, self.skeleton)
            shift = frame.directions_to_world(deltas[self._limbs]) * self.dt
            targets = joints[self._limbs] + shift
            pose = realize_pose(
                self.skeleton,
                root_next,
                yaw_next,
                targets=dict(zip(LIMB_ENDS, targets)),
                contact_height=self.settings.contact_height,
                lean=lean,
            )
        return label_foot_contacts(pose, self.skeleton, self.settings.contact_height)

    def advance(self, step: int, c_o) -> np.ndarray:
        """
        One control step from frame `step` to `step + 1`.

        Returns:
            (j,) norms of the field corrections applied during the step

        Raises:
            PolicyError: the policy failed
        """
        t = step * self.dt
        frame = self.frame()
        state = encode_pose_state(self.track, step)
        history = encode_history(self.track, step, self.settings.window.history)
        signals = self.signals(t, c_o)
        prediction = policy_step(self.policy, history, state, signals, self.rng, frame=step)
        prediction = self._regulate(prediction, state, c_o)

        yaw_next = float(self.world.yaw + prediction.yaw_rate * self.dt)
        root_next = self.world.position + frame.directions_to_world(prediction.root_velocity * self.dt)
        pose = self._next_pose(prediction, frame, root_next, yaw_next)
        joints = forward_kinematics(pose, self.skeleton)
        if not (np.all(np.isfinite(joints)) and np.isfinite(yaw_next)):
            raise PolicyError(step, ValidationError("Prediction produced non-finite values"))

        previous = self.track.joints[-1]
        root_velocity = (root_next - self.world.position) / self.dt
        yaw_rate = float(wrap_angle(yaw_next - self.world.yaw)) / self.dt
        self.track.append(pose, joints, yaw_next, root_velocity, (joints - previous) / self.dt, yaw_rate)
        self.world = WorldState(root_next, yaw_next)

        deltas = prediction.field_deltas
        if deltas is None:
            return np.zeros(self.skeleton.joint_count)
        return np.linalg.norm(deltas, axis=1)

    def record(self, index: int, delta_norms: np.ndarray, c_o) -> FrameRecord:
        t = index * self.dt
        pose = self.track.poses[index]
        joints = self.track.joints[index]
        return FrameRecord(
            index=index,
            time=t,
            pose=pose,
            joints=joints,
            root_velocity=self.track.root_velocities[index],
            joint_velocities=self.track.joint_velocities[index],
            yaw=self.track.yaws[index],
            yaw_rate=self.track.yaw_rates[index],
            delta_norms=delta_norms,
            penetration=penetrated_voxels(pose, self.skeleton, self.provider, t, joints),
            occupancy_digest="" if c_o is None else c_o.digest(),
        )


def frame_count(duration: float, rate: float) -> int:
    return max(1, int(round(duration * rate)))


def rollout(
    policy: Policy,
    initial_pose: Pose,
    provider: OccupancyProvider,
    schedule: Sequence[TargetEvent],
    duration: float,
    seed: int = 0,
    skeleton: Optional[Skeleton] = None,
    settings: Optional[RolloutSettings] = None,
    name: str = "episode",
) -> EpisodeResult:
    """
    Run `policy` for duration * rate frames; frame 0 is the initial pose.

    Raises:
        ValidationError: non-positive duration
        PolicyError: the policy failed at some frame
    """
    if duration <= 0:
        raise ValidationError(f"Duration must be positive, got {duration}")
    settings = settings or RolloutSettings()
    skeleton = skeleton or default_skeleton()
    run = Rollout(policy, skeleton, provider, schedule, settings, seed)
    run.start(initial_pose)

    frames_total = frame_count(duration, settings.window.rate)
    result = EpisodeResult(
        name=name,
        skeleton=skeleton,
        rate=settings.window.rate,
        seed=seed,
        provider=provider.describe(),
        schedule=list(run.schedule),
    )
    delta_norms = np.zeros(skeleton.joint_count)
    for step in range(frames_total):
        c_o = run.sense(step * run.dt)
        result.frames.append(run.record(step, delta_norms, c_o))
        if step + 1 < frames_total:
            delta_norms = run.advance(step, c_o)

    logger.info(
        f"Rollout {name}: {frames_total} frames, policy {policy.describe()}, provider {result.provider}, "
        f"max penetration {int(result.penetrations().max())}"
    )
    return result

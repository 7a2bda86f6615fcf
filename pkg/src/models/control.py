"""
Controller state carriers.

All spatial values are expressed in a canonical frame (see models.frame);
velocities are per second.
"""

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from core.exceptions import ValidationError

TARGET_POINTS = 5


@dataclass(frozen=True, eq=False)
class PoseState:
    """Current pose and velocities in the canonical frame of the current frame"""

    root_position: np.ndarray
    root_rot6d: np.ndarray
    joint_rot6d: np.ndarray
    joints: np.ndarray
    root_velocity: np.ndarray
    joint_velocities: np.ndarray
    yaw_rate: float
    foot_contact: Tuple[bool, bool] = (False, False)

    def vector(self) -> np.ndarray:
        return np.concatenate(
            [
                self.root_position,
                self.joints.ravel(),
                self.root_rot6d,
                self.joint_rot6d.ravel(),
                self.root_velocity,
                self.joint_velocities.ravel(),
                [self.yaw_rate],
            ]
        )


@dataclass(frozen=True, eq=False)
class HistoryState:
    """
    Past window (oldest first, current frame last) in the canonical frame of
    the current frame. Only hands and feet keep positions and velocities.
    """

    root_positions: np.ndarray
    limb_positions: np.ndarray
    root_rot6d: np.ndarray
    root_velocities: np.ndarray
    limb_velocities: np.ndarray
    yaw_rates: np.ndarray

    @property
    def length(self) -> int:
        return int(self.root_positions.shape[0])


@dataclass(frozen=True, eq=False)
class TargetSpec:
    """
    World-space goal: five points (root, left hand, right hand, left foot,
    right foot). Absent points are NaN rows. `yaw` is the goal facing.
    """

    points: np.ndarray
    yaw: Optional[float] = None

    def __post_init__(self):
        points = np.array(self.points, dtype=np.float64)
        if points.shape != (TARGET_POINTS, 3):
            raise ValidationError(f"Target needs shape ({TARGET_POINTS}, 3), got {points.shape}")
        rows_nan = np.isnan(points)
        if np.any(rows_nan.any(axis=1) != rows_nan.all(axis=1)):
            raise ValidationError("Target points are either fully given or fully absent")
        points.setflags(write=False)
        object.__setattr__(self, "points", points)

    @classmethod
    def from_points(cls, points: Sequence[Optional[Sequence[float]]], yaw: Optional[float] = None) -> "TargetSpec":
        rows = [np.full(3, np.nan) if p is None else np.asarray(p, dtype=np.float64) for p in points]
        return cls(np.stack(rows), yaw)

    @property
    def mask(self) -> np.ndarray:
        """True for present points"""
        return ~np.isnan(self.points[:, 0])

    @property
    def root(self) -> Optional[np.ndarray]:
        return None if np.isnan(self.points[0, 0]) else self.points[0]


@dataclass(frozen=True, eq=False)
class TargetEvent:
    """Target active from `time` (s) until the next event"""

    time: float
    target: Optional[TargetSpec]


@dataclass(frozen=True, eq=False)
class ControlSignals:
    """
    Control input of one step. Absent channels are None; absent target
    points are NaN rows.
    """

    occupancy: Optional[object] = None
    bps: Optional[np.ndarray] = None
    target: Optional[np.ndarray] = None
    target_yaw: Optional[float] = None
    future_trajectory: Optional[np.ndarray] = None

    @property
    def target_mask(self) -> np.ndarray:
        if self.target is None:
            return np.zeros(TARGET_POINTS, dtype=bool)
        return ~np.isnan(self.target[:, 0])

    def without(self, **channels) -> "ControlSignals":
        return replace(self, **channels)


@dataclass(frozen=True, eq=False)
class FutureSummary:
    """Predicted future window in the canonical frame of the next frame"""

    root_positions: np.ndarray
    limb_positions: np.ndarray
    joint_rot6d: np.ndarray
    root_velocities: np.ndarray
    limb_velocities: np.ndarray
    yaw_rates: np.ndarray


@dataclass(frozen=True, eq=False)
class Prediction:
    """
    Next-frame state predicted at frame t.

    Velocities are in the canonical frame of frame t. `root_rot6d` is the
    root orientation relative to the next facing direction (e.g. a forward
    lean), `joint_rot6d` the local joint rotations of the next pose.
    `field_deltas` is set once regulation has been applied.
    """

    root_velocity: np.ndarray
    yaw_rate: float
    root_rot6d: np.ndarray
    joint_rot6d: np.ndarray
    joint_velocities: np.ndarray
    future: Optional[FutureSummary] = None
    field_deltas: Optional[np.ndarray] = None
    limb_targets: Optional[np.ndarray] = field(default=None)

    def with_velocities(self, root_velocity, joint_velocities, field_deltas) -> "Prediction":
        return replace(
            self,
            root_velocity=np.asarray(root_velocity, dtype=np.float64),
            joint_velocities=np.asarray(joint_velocities, dtype=np.float64),
            field_deltas=np.asarray(field_deltas, dtype=np.float64),
        )


@dataclass
class WorldState:
    """Global root position and facing tracked by the rollout"""

    position: np.ndarray
    yaw: float

    def copy(self) -> "WorldState":
        return WorldState(np.array(self.position, dtype=np.float64), float(self.yaw))

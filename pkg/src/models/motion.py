"""
Pose and motion sequence value types.

Rotations are stored in the continuous 6D form (first two columns of the
rotation matrix). Gravity points along -Z.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from core.exceptions import EmptySequenceError, ValidationError
from models.skeleton import Skeleton


IDENTITY_6D = np.array([1.0, 0.0, 0.0, 0.0, 1.0, 0.0])


def _frozen(array, shape: Tuple[int, ...], name: str, dtype=np.float64) -> np.ndarray:
    value = np.array(array, dtype=dtype)
    if value.shape != shape:
        raise ValidationError(f"{name} must have shape {shape}, got {value.shape}")
    if dtype is np.float64 and not np.all(np.isfinite(value)):
        raise ValidationError(f"{name} must be finite")
    value.setflags(write=False)
    return value


@dataclass(frozen=True, eq=False)
class Pose:
    """Root position (m), root orientation and per-joint local rotations (6D)"""

    root_position: np.ndarray
    root_rot6d: np.ndarray
    joint_rot6d: np.ndarray
    foot_contact: Tuple[bool, bool] = (False, False)

    def __post_init__(self):
        object.__setattr__(self, "root_position", _frozen(self.root_position, (3,), "root_position"))
        object.__setattr__(self, "root_rot6d", _frozen(self.root_rot6d, (6,), "root_rot6d"))
        joints = np.asarray(self.joint_rot6d)
        j = joints.shape[0] if joints.ndim == 2 else -1
        object.__setattr__(self, "joint_rot6d", _frozen(joints, (j, 6), "joint_rot6d"))
        object.__setattr__(self, "foot_contact", (bool(self.foot_contact[0]), bool(self.foot_contact[1])))

    @property
    def joint_count(self) -> int:
        return int(self.joint_rot6d.shape[0])

    @classmethod
    def rest(cls, skeleton: Skeleton, root_position: Sequence[float] = (0.0, 0.0, 0.0)) -> "Pose":
        """All rotations identity"""
        return cls(
            root_position=np.asarray(root_position, dtype=np.float64),
            root_rot6d=IDENTITY_6D,
            joint_rot6d=np.tile(IDENTITY_6D, (skeleton.joint_count, 1)),
        )

    def with_contacts(self, contacts: Tuple[bool, bool]) -> "Pose":
        return Pose(self.root_position, self.root_rot6d, self.joint_rot6d, contacts)

    def with_root_position(self, root_position: Sequence[float]) -> "Pose":
        return Pose(np.asarray(root_position, dtype=np.float64), self.root_rot6d, self.joint_rot6d, self.foot_contact)

    def equals(self, other: "Pose") -> bool:
        return (
            np.array_equal(self.root_position, other.root_position)
            and np.array_equal(self.root_rot6d, other.root_rot6d)
            and np.array_equal(self.joint_rot6d, other.joint_rot6d)
            and self.foot_contact == other.foot_contact
        )


@dataclass(frozen=True, eq=False)
class MotionSequence:
    """Ordered poses sampled at a constant rate, all sharing one skeleton"""

    skeleton: Skeleton
    frames: Tuple[Pose, ...]
    fps: float = 30.0
    name: Optional[str] = field(default=None)

    def __post_init__(self):
        frames = tuple(self.frames)
        if len(frames) < 2:
            raise EmptySequenceError("A motion sequence needs at least 2 frames", required=2)
        if not self.fps > 0:
            raise ValidationError(f"fps must be positive, got {self.fps}")
        j = self.skeleton.joint_count
        for i, pose in enumerate(frames):
            if pose.joint_count != j:
                raise ValidationError(f"frame {i} has {pose.joint_count} joints, skeleton has {j}")
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "fps", float(self.fps))

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def duration(self) -> float:
        return (len(self.frames) - 1) / self.fps

    @property
    def root_positions(self) -> np.ndarray:
        return np.stack([pose.root_position for pose in self.frames])

    def window(self, start: int, stop: int) -> List[Pose]:
        return list(self.frames[max(start, 0):stop])

    def translated(self, offset: Sequence[float]) -> "MotionSequence":
        shift = np.asarray(offset, dtype=np.float64)
        frames = tuple(pose.with_root_position(pose.root_position + shift) for pose in self.frames)
        return MotionSequence(self.skeleton, frames, self.fps, self.name)

    def decimated(self, rate: float) -> "MotionSequence":
        """Resample to a lower rate by nearest-frame picking"""
        if rate >= self.fps:
            return self
        count = int(np.floor(self.duration * rate + 1e-9)) + 1
        picks = [min(int(round(i * self.fps / rate)), len(self.frames) - 1) for i in range(count)]
        return MotionSequence(self.skeleton, tuple(self.frames[i] for i in picks), rate, self.name)

"""
Episode configuration and rollout records.

This module provides:
- EpisodeConfig: validated episode description (pydantic)
- FrameRecord / EpisodeResult: per-frame rollout output
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from pydantic import Field, field_validator, model_validator

from models.control import TargetEvent
from models.motion import Pose
from models.params import StrictModel
from models.skeleton import Skeleton


class OccupancyEncoding(str, Enum):
    """How scene occupancy reaches the policy"""

    GRID = "grid"
    BPS = "bps"


class InitialPlacement(StrictModel):
    """Standing pose placement on the ground"""

    x: float = 0.0
    y: float = 0.0
    yaw_deg: float = 0.0


class TargetPoints(StrictModel):
    """Five world points (root, hands, feet); None marks an absent point"""

    time: float = Field(0.0, ge=0)
    points: List[Optional[Tuple[float, float, float]]]
    yaw_deg: Optional[float] = None

    @field_validator("points")
    @classmethod
    def five_points(cls, value):
        if len(value) != 5:
            raise ValueError(f"expected 5 target points, got {len(value)}")
        return value


class TargetPose(StrictModel):
    """Standing pose goal: the five points of a standing pose placed at (x, y, yaw)"""

    time: float = Field(0.0, ge=0)
    x: float
    y: float
    yaw_deg: float = 0.0


class EpisodeConfig(StrictModel):
    """One goal-reaching episode"""

    name: str = "episode"
    duration: float = Field(10.0, gt=0, description="Simulated time (s)")
    seed: int = 0
    rate: Optional[float] = Field(None, gt=0, description="Control rate (Hz); defaults to the run configuration")
    initial: InitialPlacement = Field(default_factory=InitialPlacement)
    provider: str = Field("empty", description="empty | door | door:cx,cy,phase_deg | static:<path> | swap:<t>")
    grid: Optional[str] = Field(None, description="Grid file used by swap providers after the switch")
    regulation: bool = True
    occupancy: bool = True
    occupancy_encoding: OccupancyEncoding = OccupancyEncoding.GRID
    targets: List[TargetPoints] = Field(default_factory=list)
    target_poses: List[TargetPose] = Field(default_factory=list)

    @model_validator(mode="after")
    def sorted_schedule(self):
        for events in (self.targets, self.target_poses):
            times = [event.time for event in events]
            if times != sorted(times):
                raise ValueError("target times must be non-decreasing")
        return self


@dataclass(frozen=True, eq=False)
class FrameRecord:
    """World state of one frame and the quantities derived during the step"""

    index: int
    time: float
    pose: Pose
    joints: np.ndarray
    root_velocity: np.ndarray
    joint_velocities: np.ndarray
    yaw: float
    yaw_rate: float
    delta_norms: np.ndarray
    penetration: int
    occupancy_digest: str = ""


@dataclass(eq=False)
class EpisodeResult:
    """Complete rollout; frame 0 is the initial state"""

    name: str
    skeleton: Skeleton
    rate: float
    seed: int
    provider: str
    schedule: List[TargetEvent] = field(default_factory=list)
    frames: List[FrameRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def duration(self) -> float:
        return len(self.frames) / self.rate

    def joint_positions(self) -> np.ndarray:
        return np.stack([f.joints for f in self.frames])

    def root_positions(self) -> np.ndarray:
        return np.stack([f.pose.root_position for f in self.frames])

    def penetrations(self) -> np.ndarray:
        return np.array([f.penetration for f in self.frames], dtype=np.int64)

    def final_target(self):
        return self.schedule[-1].target if self.schedule else None

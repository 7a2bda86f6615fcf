"""
Synthetic motion and scene descriptions.
"""

from enum import Enum
from typing import Optional

from pydantic import Field

from models.params import StrictModel


class MotionKind(str, Enum):
    WALK = "walk"
    TURN = "turn"
    SIT = "sit"
    CRAWL = "crawl"
    REACH = "reach"


class SyntheticMotionSpec(StrictModel):
    """Procedural motion request; identical specs give identical motions"""

    kind: MotionKind = MotionKind.WALK
    duration: float = Field(3.0, gt=0, description="Length (s)")
    speed: Optional[float] = Field(None, gt=0, description="Travel speed (m/s); kind default when unset")
    seed: int = 0
    fps: float = Field(30.0, gt=0)

    @property
    def name(self) -> str:
        return f"{self.kind.value}_{self.seed:04d}"


class SceneKind(str, Enum):
    OPEN_ROOM = "open-room"
    WALL = "wall"
    CORRIDOR = "corridor"
    CRAWL_TUNNEL = "crawl-tunnel"
    SEALED_GOAL = "sealed-goal"


class SceneSpec(StrictModel):
    """Procedural evaluation scene"""

    kind: SceneKind = SceneKind.OPEN_ROOM
    seed: int = 0
    unit: float = Field(0.08, gt=0)
    length: float = Field(6.0, gt=0, description="Extent along the travel direction (m)")
    width: float = Field(3.0, gt=0, description="Extent across the travel direction (m)")
    height: float = Field(2.4, gt=0)

    @property
    def name(self) -> str:
        return f"{self.kind.value}_{self.seed:04d}"

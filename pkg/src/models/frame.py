"""
Canonical frame: root-anchored, facing-aligned rigid transform.

Canonical coordinates put the root at the XY origin with the facing
direction along +X. The origin stays on the ground (z = 0), so heights are
preserved.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np


class ValueKind(str, Enum):
    """How a value transforms under a change of frame"""

    POINT = "point"
    DIRECTION = "direction"
    ORIENTATION = "orientation"


def yaw_matrix(yaw: float) -> np.ndarray:
    c, s = np.cos(yaw), np.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def wrap_angle(angle):
    """Wrap to [-pi, pi)"""
    return (np.asarray(angle) + np.pi) % (2.0 * np.pi) - np.pi


@dataclass(frozen=True)
class CanonicalFrame:
    origin_x: float = 0.0
    origin_y: float = 0.0
    yaw: float = 0.0

    @classmethod
    def at(cls, position: Sequence[float], yaw: float) -> "CanonicalFrame":
        return cls(float(position[0]), float(position[1]), float(yaw))

    @property
    def origin(self) -> np.ndarray:
        return np.array([self.origin_x, self.origin_y, 0.0])

    @property
    def rotation(self) -> np.ndarray:
        """World-from-canonical rotation"""
        return yaw_matrix(self.yaw)

    @property
    def forward(self) -> np.ndarray:
        return np.array([np.cos(self.yaw), np.sin(self.yaw), 0.0])

    # World -> canonical

    def points_to_canonical(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=np.float64)
        return (p - self.origin) @ self.rotation

    def directions_to_canonical(self, vectors) -> np.ndarray:
        return np.asarray(vectors, dtype=np.float64) @ self.rotation

    def orientations_to_canonical(self, matrices) -> np.ndarray:
        return self.rotation.T @ np.asarray(matrices, dtype=np.float64)

    # Canonical -> world

    def points_to_world(self, points) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) @ self.rotation.T + self.origin

    def directions_to_world(self, vectors) -> np.ndarray:
        return np.asarray(vectors, dtype=np.float64) @ self.rotation.T

    def orientations_to_world(self, matrices) -> np.ndarray:
        return self.rotation @ np.asarray(matrices, dtype=np.float64)

    def yaw_to_canonical(self, yaw) -> np.ndarray:
        return wrap_angle(np.asarray(yaw) - self.yaw)

    def yaw_to_world(self, yaw) -> np.ndarray:
        return wrap_angle(np.asarray(yaw) + self.yaw)


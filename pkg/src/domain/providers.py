"""
Scene occupancy providers.

This module provides:
- Abstract provider interface answering point queries and voxel snapshots
- Static grid, empty, half-space and box providers
- Rigidly transformed and time-frozen wrappers
- Time-varying revolving door and scheduled swap providers
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from models.frame import yaw_matrix
from models.grid import Lattice, OccupancyGrid

logger = logging.getLogger(__name__)

DEFAULT_UNIT = 0.08
WORLD_ORIGIN = (0.0, 0.0, 0.0)


class OccupancyProvider(ABC):
    """
    Interface for scene occupancy queried by time.

    Implementations must be safe for concurrent reads and expose a voxel
    lattice; a snapshot reports, for every lattice cell in a region, whether
    its center is occupied.
    """

    @property
    @abstractmethod
    def lattice(self) -> Lattice:
        """Voxel lattice used for snapshots and voxel counting"""
        pass

    def lattice_at(self, t: float) -> Lattice:
        """Lattice in effect at time t"""
        return self.lattice

    @abstractmethod
    def is_occupied(self, points, t: float = 0.0) -> np.ndarray:
        """
        Occupancy of world points (..., 3) at time t (s).

        Returns:
            Boolean array of shape points.shape[:-1]
        """
        pass

    @property
    def is_empty(self) -> bool:
        return False

    @property
    def is_static(self) -> bool:
        return True

    def describe(self) -> str:
        return self.__class__.__name__

    def region_cells(self, lo, hi, t: float = 0.0) -> Tuple[np.ndarray, Tuple[int, int, int]]:
        """First cell and dims of the block of the time-t lattice covering the box [lo, hi]"""
        lattice = self.lattice_at(t)
        first = lattice.cells(np.asarray(lo, dtype=np.float64))
        last = lattice.cells(np.asarray(hi, dtype=np.float64))
        dims = tuple(int(d) for d in np.maximum(last - first + 1, 1))
        return first, dims

    def snapshot(self, t: float, lo, hi) -> OccupancyGrid:
        """Voxelized occupancy of the box [lo, hi] at time t"""
        lattice = self.lattice_at(t)
        first, dims = self.region_cells(lo, hi, t)
        origin = np.asarray(lattice.origin) + first * lattice.unit
        if self.is_empty:
            return OccupancyGrid.empty(dims, origin, lattice.unit)
        index = np.stack(np.meshgrid(*[np.arange(d) for d in dims], indexing="ij"), axis=-1)
        centers = lattice.centers(index + first)
        return OccupancyGrid(self.is_occupied(centers, t), origin, lattice.unit)

    def occupied_centers(self, t: float, lo, hi) -> np.ndarray:
        """World centers (n, 3) of occupied lattice cells inside the box [lo, hi]"""
        if self.is_empty:
            return np.zeros((0, 3))
        return self.snapshot(t, lo, hi).occupied_centers()


@dataclass(frozen=True)
class EmptyProvider(OccupancyProvider):
    unit: float = DEFAULT_UNIT

    @property
    def lattice(self) -> Lattice:
        return Lattice(WORLD_ORIGIN, self.unit)

    @property
    def is_empty(self) -> bool:
        return True

    def is_occupied(self, points, t: float = 0.0) -> np.ndarray:
        return np.zeros(np.shape(points)[:-1], dtype=bool)

    def describe(self) -> str:
        return "empty"


@dataclass(frozen=True, eq=False)
class StaticGridProvider(OccupancyProvider):
    """Time-invariant occupancy read from a grid; outside the grid is free"""

    grid: OccupancyGrid
    reference: str = "grid"

    @property
    def lattice(self) -> Lattice:
        return self.grid.lattice

    @property
    def is_empty(self) -> bool:
        return self.grid.occupied_count == 0

    def is_occupied(self, points, t: float = 0.0) -> np.ndarray:
        return self.grid.is_occupied(points)

    def occupied_centers(self, t: float, lo, hi) -> np.ndarray:
        grid = self.grid
        first = np.maximum(grid.cells_of(np.asarray(lo, dtype=np.float64)), 0)
        last = np.minimum(grid.cells_of(np.asarray(hi, dtype=np.float64)), np.asarray(grid.dims) - 1)
        if np.any(last < first):
            return np.zeros((0, 3))
        block = grid.voxels[first[0]:last[0] + 1, first[1]:last[1] + 1, first[2]:last[2] + 1]
        return grid.centers(np.argwhere(block) + first)

    def describe(self) -> str:
        return f"static:{self.reference}"


@dataclass(frozen=True)
class HalfSpaceProvider(OccupancyProvider):
    """Solid where normal . p <= offset (default: the ground z <= 0)"""

    normal: Tuple[float, float, float] = (0.0, 0.0, 1.0)
    offset: float = 0.0
    unit: float = DEFAULT_UNIT

    @property
    def lattice(self) -> Lattice:
        return Lattice(WORLD_ORIGIN, self.unit)

    def is_occupied(self, points, t: float = 0.0) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) @ np.asarray(self.normal) <= self.offset

    def describe(self) -> str:
        return f"halfspace:{self.normal}:{self.offset}"


@dataclass(frozen=True)
class BoxesProvider(OccupancyProvider):
    """Union of closed axis-aligned boxes given as (min corner, max corner)"""

    boxes: Tuple[Tuple[Tuple[float, float, float], Tuple[float, float, float]], ...] = ()
    unit: float = DEFAULT_UNIT

    @property
    def lattice(self) -> Lattice:
        return Lattice(WORLD_ORIGIN, self.unit)

    @property
    def is_empty(self) -> bool:
        return not self.boxes

    def is_occupied(self, points, t: float = 0.0) -> np.ndarray:
        p = np.asarray(points, dtype=np.float64)
        result = np.zeros(p.shape[:-1], dtype=bool)
        for lo, hi in self.boxes:
            result |= np.all((p >= np.asarray(lo)) & (p <= np.asarray(hi)), axis=-1)
        return result

    def describe(self) -> str:
        return f"boxes:{len(self.boxes)}"


@dataclass(frozen=True, eq=False)
class TransformedProvider(OccupancyProvider):
    """`base` rotated by `yaw` about +Z through the world origin, then translated"""

    base: OccupancyProvider
    yaw: float = 0.0
    translation: Tuple[float, float, float] = (0.0, 0.0, 0.0)

    @property
    def lattice(self) -> Lattice:
        return Lattice(WORLD_ORIGIN, self.base.lattice.unit)

    def lattice_at(self, t: float) -> Lattice:
        return Lattice(WORLD_ORIGIN, self.base.lattice_at(t).unit)

    @property
    def is_empty(self) -> bool:
        return self.base.is_empty

    @property
    def is_static(self) -> bool:
        return self.base.is_static

    def is_occupied(self, points, t: float = 0.0) -> np.ndarray:
        p = np.asarray(points, dtype=np.float64) - np.asarray(self.translation)
        return self.base.is_occupied(p @ yaw_matrix(self.yaw), t)

    def describe(self) -> str:
        return f"transformed:{self.base.describe()}"


@dataclass(frozen=True, eq=False)
class FrozenProvider(OccupancyProvider):
    """A time-varying provider held at time `at`"""

    base: OccupancyProvider
    at: float = 0.0

    @property
    def lattice(self) -> Lattice:
        return self.base.lattice

    def lattice_at(self, t: float) -> Lattice:
        return self.base.lattice_at(self.at)

    @property
    def is_empty(self) -> bool:
        return self.base.is_empty

    def is_occupied(self, points, t: float = 0.0) -> np.ndarray:
        return self.base.is_occupied(points, self.at)

    def describe(self) -> str:
        return f"frozen:{self.base.describe()}@{self.at}"


@dataclass(frozen=True)
class RevolvingDoor(OccupancyProvider):
    """
    Revolving door: `wings` slabs radiating from a vertical axis at `center`,
    turning counter-clockwise at `angular_speed_deg` (deg/s).
    """

    center: Tuple[float, float] = (0.0, 0.0)
    radius: float = 1.5
    thickness: float = 0.35
    angular_speed_deg: float = 15.0
    wings: int = 4
    height: float = 2.2
    phase_deg: float = 0.0
    unit: float = DEFAULT_UNIT

    @property
    def lattice(self) -> Lattice:
        return Lattice(WORLD_ORIGIN, self.unit)

    @property
    def is_static(self) -> bool:
        return self.angular_speed_deg == 0.0

    def wing_angles(self, t: float) -> np.ndarray:
        base = np.deg2rad(self.phase_deg + self.angular_speed_deg * t)
        return base + np.arange(self.wings) * (2.0 * np.pi / self.wings)

    def is_occupied(self, points, t: float = 0.0) -> np.ndarray:
        p = np.asarray(points, dtype=np.float64)
        dx = p[..., 0] - self.center[0]
        dy = p[..., 1] - self.center[1]
        vertical = (p[..., 2] >= 0.0) & (p[..., 2] <= self.height)
        result = np.zeros(p.shape[:-1], dtype=bool)
        half = 0.5 * self.thickness
        for angle in self.wing_angles(t):
            c, s = np.cos(angle), np.sin(angle)
            along = dx * c + dy * s
            across = -dx * s + dy * c
            result |= (along >= -half) & (along <= self.radius) & (np.abs(across) <= half)
        return result & vertical

    def describe(self) -> str:
        return f"door:{self.center[0]},{self.center[1]},{self.phase_deg}"


@dataclass(frozen=True, eq=False)
class ScheduledSwap(OccupancyProvider):
    """`before` until `switch_time`, then `after` (abrupt change)"""

    before: OccupancyProvider
    after: OccupancyProvider
    switch_time: float = 0.0

    @property
    def lattice(self) -> Lattice:
        return self.before.lattice

    def lattice_at(self, t: float) -> Lattice:
        return self.active(t).lattice_at(t)

    @property
    def is_static(self) -> bool:
        return False

    def active(self, t: float) -> OccupancyProvider:
        return self.before if t < self.switch_time else self.after

    @property
    def is_empty(self) -> bool:
        return self.before.is_empty and self.after.is_empty

    def is_occupied(self, points, t: float = 0.0) -> np.ndarray:
        return self.active(t).is_occupied(points, t)

    def snapshot(self, t: float, lo, hi) -> OccupancyGrid:
        return self.active(t).snapshot(t, lo, hi)

    def occupied_centers(self, t: float, lo, hi) -> np.ndarray:
        return self.active(t).occupied_centers(t, lo, hi)

    def describe(self) -> str:
        return f"swap:{self.switch_time}"


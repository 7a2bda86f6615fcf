"""
Axis-aligned voxel volumes.

This module provides:
- OccupancyGrid: binary volume with origin (min corner) and unit size
- SdfGrid: scalar signed distance volume with the same layout
- Lattice arithmetic shared by grids and analytic providers
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence, Tuple

import numpy as np

from core.exceptions import DimensionMismatchError, ValidationError


def _check_layout(dims: Tuple[int, ...], origin: np.ndarray, unit: float) -> None:
    if len(dims) != 3 or any(d < 1 for d in dims):
        raise ValidationError(f"Grid dims must be three positive integers, got {dims}")
    if origin.shape != (3,) or not np.all(np.isfinite(origin)):
        raise ValidationError("Grid origin must be a finite 3-vector")
    if not (np.isfinite(unit) and unit > 0):
        raise ValidationError(f"Grid unit must be positive, got {unit}")


@dataclass(frozen=True)
class Lattice:
    """Infinite cubic lattice: cell = floor((point - origin) / unit)"""

    origin: Tuple[float, float, float]
    unit: float

    def cells(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=np.float64)
        return np.floor((p - np.asarray(self.origin)) / self.unit).astype(np.int64)

    def centers(self, cells) -> np.ndarray:
        return np.asarray(self.origin) + (np.asarray(cells, dtype=np.float64) + 0.5) * self.unit


@dataclass(frozen=True, eq=False)
class OccupancyGrid:
    """
    Binary voxel volume. `voxels[x, y, z]` is True when the cell is occupied.

    Linear index of a cell is x + Dx * (y + Dy * z); points outside the grid
    are treated as free.
    """

    voxels: np.ndarray
    origin: np.ndarray
    unit: float

    def __post_init__(self):
        voxels = np.array(self.voxels, dtype=bool)
        origin = np.array(self.origin, dtype=np.float64).reshape(-1)
        if voxels.ndim != 3:
            raise ValidationError(f"Grid voxels must be 3-dimensional, got shape {voxels.shape}")
        _check_layout(voxels.shape, origin, float(self.unit))
        voxels.setflags(write=False)
        origin.setflags(write=False)
        object.__setattr__(self, "voxels", voxels)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "unit", float(self.unit))

    @classmethod
    def empty(cls, dims: Sequence[int], origin: Sequence[float] = (0.0, 0.0, 0.0), unit: float = 0.08):
        return cls(np.zeros(tuple(int(d) for d in dims), dtype=bool), np.asarray(origin, dtype=np.float64), unit)

    @classmethod
    def from_packed(cls, dims: Sequence[int], origin: Sequence[float], unit: float, payload: bytes) -> "OccupancyGrid":
        """Rebuild from LSB-first packed bits in linear-index order"""
        dims = tuple(int(d) for d in dims)
        total = int(np.prod(dims))
        expected = (total + 7) // 8
        if len(payload) != expected:
            raise DimensionMismatchError("packed voxel bytes", expected, len(payload))
        bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8), count=total, bitorder="little")
        voxels = bits.astype(bool).reshape(dims, order="F")
        return cls(voxels, np.asarray(origin, dtype=np.float64), unit)

    @property
    def dims(self) -> Tuple[int, int, int]:
        return tuple(int(d) for d in self.voxels.shape)

    @property
    def total(self) -> int:
        return int(self.voxels.size)

    @property
    def occupied_count(self) -> int:
        return int(np.count_nonzero(self.voxels))

    @property
    def occupied_fraction(self) -> float:
        return self.occupied_count / self.total

    @property
    def lattice(self) -> Lattice:
        return Lattice(tuple(float(v) for v in self.origin), self.unit)

    @property
    def upper(self) -> np.ndarray:
        """Max corner of the volume"""
        return self.origin + np.asarray(self.dims) * self.unit

    def packed(self) -> bytes:
        return np.packbits(self.voxels.ravel(order="F"), bitorder="little").tobytes()

    def complement(self) -> "OccupancyGrid":
        return OccupancyGrid(~self.voxels, self.origin, self.unit)

    def linear_index(self, cells) -> np.ndarray:
        c = np.asarray(cells, dtype=np.int64)
        dx, dy, _ = self.dims
        return c[..., 0] + dx * (c[..., 1] + dy * c[..., 2])

    def cells_of(self, points) -> np.ndarray:
        return self.lattice.cells(points)

    def inside(self, cells) -> np.ndarray:
        c = np.asarray(cells)
        return np.all((c >= 0) & (c < np.asarray(self.dims)), axis=-1)

    def centers(self, cells) -> np.ndarray:
        return self.lattice.centers(cells)

    def is_occupied(self, points) -> np.ndarray:
        """Occupancy of the cells containing `points` (..., 3); outside is free"""
        p = np.asarray(points, dtype=np.float64)
        cells = self.cells_of(p.reshape(-1, 3))
        inside = self.inside(cells)
        result = np.zeros(len(cells), dtype=bool)
        hit = cells[inside]
        result[inside] = self.voxels[hit[:, 0], hit[:, 1], hit[:, 2]]
        return result.reshape(p.shape[:-1])

    def occupied_cells(self) -> np.ndarray:
        """(n, 3) indices of occupied cells in linear-index order"""
        cells = np.argwhere(self.voxels)
        return cells[np.argsort(self.linear_index(cells), kind="stable")]

    def occupied_centers(self) -> np.ndarray:
        return self.centers(self.occupied_cells())

    def same_layout(self, other: "OccupancyGrid") -> bool:
        return self.dims == other.dims and np.array_equal(self.origin, other.origin) and self.unit == other.unit

    def equals(self, other: "OccupancyGrid") -> bool:
        return self.same_layout(other) and np.array_equal(self.voxels, other.voxels)

    @cached_property
    def free_space(self):
        """Nearest-free-voxel index, built on first use"""
        from domain.occupancy import FreeSpaceIndex

        return FreeSpaceIndex(self)


@dataclass(frozen=True, eq=False)
class SdfGrid:
    """Signed distance samples at cell centers (negative inside solids)"""

    values: np.ndarray
    origin: np.ndarray
    unit: float

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float32)
        origin = np.array(self.origin, dtype=np.float64).reshape(-1)
        if values.ndim != 3:
            raise ValidationError(f"SDF values must be 3-dimensional, got shape {values.shape}")
        _check_layout(values.shape, origin, float(self.unit))
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "unit", float(self.unit))

    @property
    def dims(self) -> Tuple[int, int, int]:
        return tuple(int(d) for d in self.values.shape)

    @property
    def lattice(self) -> Lattice:
        return Lattice(tuple(float(v) for v in self.origin), self.unit)

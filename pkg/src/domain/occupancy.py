"""
Motion occupancy, pseudo-scenes and egocentric occupancy sampling.

This module provides:
- MOB construction: motion occupancy volume from a motion sequence, and its complement
- SDF import to occupancy
- Canonical (egocentric) occupancy sampling and occupied-center extraction
- Nearest free voxel queries backed by a distance transform and a KD-tree
- Basis point set encoding of nearby occupancy
- Crop and ceiling-hiding tools for exports
"""

import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from core.exceptions import DimensionMismatchError, EmptySequenceError, NoFreeVoxelError, ValidationError
from domain.body import CapsuleBody, body_geometry, body_samples, point_in_body
from domain.kinematics import forward_kinematics
from domain.providers import OccupancyProvider
from models.frame import CanonicalFrame
from models.grid import Lattice, OccupancyGrid, SdfGrid
from models.motion import MotionSequence
from models.params import CanonicalOccupancyConfig

logger = logging.getLogger(__name__)


def sample_spacing(unit: float) -> float:
    """Body sampling density used for voxel marking and penetration counting"""
    return unit / 2.0


def sequence_bodies(seq: MotionSequence) -> List[CapsuleBody]:
    return [body_geometry(pose, seq.skeleton, forward_kinematics(pose, seq.skeleton)) for pose in seq.frames]


def _frame_cells(body: CapsuleBody, lattice: Lattice) -> np.ndarray:
    """Lattice cells marked by one body: surface samples, then centers inside the volume"""
    marked = lattice.cells(body_samples(body, sample_spacing(lattice.unit)))

    lo, hi = body.bounds()
    first, last = lattice.cells(lo), lattice.cells(hi)
    axes = [np.arange(a, b + 1) for a, b in zip(first, last)]
    block = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    inside = point_in_body(lattice.centers(block), body)
    return np.concatenate([marked, block[inside]], axis=0)


def voxelize_motion(
    seq: MotionSequence,
    unit: float,
    margin: int = 1,
    threads: int = 1,
    bodies: Optional[Sequence[CapsuleBody]] = None,
) -> OccupancyGrid:
    """
    Motion occupancy volume of a sequence.

    The grid covers the bounding box of every frame's body padded by
    `margin` cells, with its origin snapped to the world lattice. A voxel is
    occupied if a body sample of some frame falls in it, or if its center
    lies inside some frame's body.

    Raises:
        EmptySequenceError: no frames
        ValidationError: non-positive unit or negative margin
    """
    if unit <= 0:
        raise ValidationError(f"Voxel unit must be positive, got {unit}")
    if margin < 0:
        raise ValidationError(f"Margin must be non-negative, got {margin}")
    bodies = list(bodies) if bodies is not None else sequence_bodies(seq)
    if not bodies:
        raise EmptySequenceError("Cannot voxelize an empty sequence", required=1)

    bounds = [body.bounds() for body in bodies]
    lo = np.min([b[0] for b in bounds], axis=0)
    hi = np.max([b[1] for b in bounds], axis=0)
    first = np.floor(lo / unit).astype(np.int64) - margin

    while True:
        lattice = Lattice(tuple(float(v) for v in first * unit), unit)

        def mark(body: CapsuleBody) -> np.ndarray:
            return _frame_cells(body, lattice)

        if threads > 1 and len(bodies) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                per_frame = list(pool.map(mark, bodies))
        else:
            per_frame = [mark(body) for body in bodies]
        cells = np.concatenate(per_frame, axis=0)
        low = cells.min(axis=0)
        if np.all(low >= 0):
            break
        # samples on the far side of the snapped origin
        first = first + np.minimum(low, 0)

    last = np.maximum(cells.max(axis=0), lattice.cells(hi)) + margin
    dims = tuple(int(d) for d in last + 1)

    voxels = np.zeros(dims, dtype=bool)
    voxels[cells[:, 0], cells[:, 1], cells[:, 2]] = True
    grid = OccupancyGrid(voxels, np.asarray(lattice.origin), unit)
    logger.debug(f"Voxelized {len(bodies)} frames into {dims} cells, {grid.occupied_count} occupied")
    return grid


def complement(grid: OccupancyGrid) -> OccupancyGrid:
    """Pseudo-scene occupancy: every bit flipped"""
    return grid.complement()


def build_mob(seq: MotionSequence, unit: float, margin: int = 1, threads: int = 1) -> OccupancyGrid:
    """Pseudo-scene of a motion: complement of its motion occupancy"""
    return complement(voxelize_motion(seq, unit, margin, threads))


def sdf_to_occupancy(sdf: SdfGrid, iso: float = 0.0, expected_dims: Optional[Sequence[int]] = None) -> OccupancyGrid:
    """Occupied iff the signed distance is <= iso"""
    if expected_dims is not None and tuple(expected_dims) != sdf.dims:
        raise DimensionMismatchError("SDF dims", tuple(expected_dims), sdf.dims)
    return OccupancyGrid(sdf.values <= iso, sdf.origin, sdf.unit)


# Canonical occupancy


@dataclass(frozen=True, eq=False)
class CanonicalOccupancy:
    """
    Egocentric occupancy bits indexed [i, j, k] along canonical x, y, z.

    Flat index is i + s * (j + s * k). Canonical z keeps world height.
    """

    bits: np.ndarray
    unit: float
    offset: float
    height: float

    @property
    def size(self) -> int:
        return int(self.bits.shape[0])

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.bits))

    def flat(self) -> np.ndarray:
        return self.bits.ravel(order="F")

    def packed(self) -> bytes:
        return np.packbits(self.flat(), bitorder="little").tobytes()

    def digest(self) -> str:
        return hashlib.sha256(self.packed()).hexdigest()[:16]


def canonical_cell_centers(cfg: CanonicalOccupancyConfig, height: float) -> np.ndarray:
    """Canonical centers of all cells, shape (s, s, s, 3)"""
    s, u = cfg.size, cfg.unit
    steps = (np.arange(s) - (s - 1) / 2.0) * u
    x, y, z = np.meshgrid(cfg.offset + steps, steps, height + steps, indexing="ij")
    return np.stack([x, y, z], axis=-1)


_CORNERS = np.array([[dx, dy, dz] for dx in (-0.5, 0.5) for dy in (-0.5, 0.5) for dz in (-0.5, 0.5)])


def sample_canonical_occupancy(
    provider: OccupancyProvider,
    frame: CanonicalFrame,
    t: float,
    cfg: CanonicalOccupancyConfig,
    height: float,
) -> CanonicalOccupancy:
    """
    Sample scene occupancy on a cubic grid aligned with the canonical frame.

    The grid is centered `cfg.offset` ahead of the root along the facing
    direction, vertically at root `height`. A cell is occupied when its
    center is occupied (or, in conservative mode, any of its 8 corners).
    """
    s = cfg.size
    if provider.is_empty:
        return CanonicalOccupancy(np.zeros((s, s, s), dtype=bool), cfg.unit, cfg.offset, height)

    centers = canonical_cell_centers(cfg, height)
    if cfg.conservative:
        points = centers[..., None, :] + _CORNERS * cfg.unit
        bits = np.any(provider.is_occupied(frame.points_to_world(points), t), axis=-1)
    else:
        bits = provider.is_occupied(frame.points_to_world(centers), t)
    return CanonicalOccupancy(np.asarray(bits, dtype=bool), cfg.unit, cfg.offset, height)


def occupied_centers(c_o: CanonicalOccupancy, cfg: Optional[CanonicalOccupancyConfig] = None) -> np.ndarray:
    """Canonical centers (n, 3) of the set bits, in flat-index order"""
    if c_o.count == 0:
        return np.zeros((0, 3))
    if cfg is None:
        cfg = CanonicalOccupancyConfig(size=c_o.size, unit=c_o.unit, forward_offset=c_o.offset)
    flat = np.flatnonzero(c_o.flat())
    s = c_o.size
    i, j, k = flat % s, (flat // s) % s, flat // (s * s)
    half = (s - 1) / 2.0
    x = cfg.offset + (i - half) * cfg.unit
    y = (j - half) * cfg.unit
    z = c_o.height + (k - half) * cfg.unit
    return np.stack([x, y, z], axis=1)


# Nearest free voxel


class FreeSpaceIndex:
    """
    Nearest free voxel center of a grid.

    A distance transform bounds the search radius for points inside the
    grid; a KD-tree over free centers returns the candidates, which are
    then ranked exactly with ties going to the smallest linear index.
    """

    def __init__(self, grid: OccupancyGrid):
        self.grid = grid
        free = ~grid.voxels
        self.free_count = int(np.count_nonzero(free))
        if self.free_count == 0:
            self._tree = None
            return
        cells = np.argwhere(free)
        order = np.argsort(grid.linear_index(cells), kind="stable")
        self.cells = cells[order]
        self.linear = grid.linear_index(self.cells)
        self.centers = grid.centers(self.cells)
        self._tree = cKDTree(self.centers)
        # Distance (m) from each cell center to the nearest free center
        self._bound = ndimage.distance_transform_edt(grid.voxels, sampling=grid.unit)

    def _rank(self, point: np.ndarray, candidates: np.ndarray) -> int:
        d = np.linalg.norm(self.centers[candidates] - point, axis=1)
        best = candidates[d == d.min()]
        return int(best[np.argmin(self.linear[best])])

    def nearest_index(self, point) -> int:
        """Position in `self.cells` of the nearest free voxel"""
        if self._tree is None:
            raise NoFreeVoxelError()
        p = np.asarray(point, dtype=np.float64)
        cell = self.grid.cells_of(p)
        if self.grid.inside(cell):
            radius = float(np.linalg.norm(p - self.grid.centers(cell)) + self._bound[tuple(cell)])
        else:
            radius, _ = self._tree.query(p)
            radius = float(radius)
        radius = radius * (1.0 + 1e-9) + 1e-9
        candidates = np.asarray(self._tree.query_ball_point(p, radius), dtype=np.int64)
        if candidates.size == 0:
            _, nearest = self._tree.query(p)
            candidates = np.array([int(nearest)])
        return self._rank(p, candidates)

    def nearest(self, point) -> np.ndarray:
        return self.centers[self.nearest_index(point)]


def nearest_free_voxel(point, grid: OccupancyGrid) -> np.ndarray:
    """
    Center of the free voxel closest to `point` (Euclidean), ties broken by
    the smallest linear index.

    Raises:
        NoFreeVoxelError: the grid is fully occupied
    """
    return grid.free_space.nearest(point)


# Basis point sets


@dataclass(frozen=True, eq=False)
class BpsBasis:
    """Points drawn uniformly in the unit ball"""

    points: np.ndarray
    seed: int

    @classmethod
    def sample(cls, n: int = 1024, seed: int = 0) -> "BpsBasis":
        if n < 1:
            raise ValidationError(f"Basis needs at least one point, got {n}")
        rng = np.random.default_rng(seed)
        directions = rng.normal(size=(n, 3))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        radii = rng.uniform(size=n) ** (1.0 / 3.0)
        points = directions * radii[:, None]
        points.setflags(write=False)
        return cls(points, seed)

    @property
    def size(self) -> int:
        return int(self.points.shape[0])


def bps_encode(
    provider: OccupancyProvider,
    frame: CanonicalFrame,
    t: float,
    basis: BpsBasis,
    radius: float = 1.0,
    height: float = 0.0,
) -> np.ndarray:
    """
    Distance from each basis point (scaled by `radius`, centered at the
    pelvis in the canonical frame) to the nearest occupied voxel center,
    capped at 2 * radius.
    """
    cap = 2.0 * radius
    world = frame.points_to_world(basis.points * radius + np.array([0.0, 0.0, height]))
    reach = radius + cap
    center = frame.points_to_world(np.array([0.0, 0.0, height]))
    centers = provider.occupied_centers(t, center - reach, center + reach)
    if len(centers) == 0:
        return np.full(basis.size, cap)
    distances, _ = cKDTree(centers).query(world, distance_upper_bound=cap)
    return np.minimum(distances, cap)


# Export helpers


def crop_grid(grid: OccupancyGrid, lo, hi) -> OccupancyGrid:
    """Sub-grid of the cells overlapping the box [lo, hi]"""
    first = np.maximum(grid.cells_of(np.asarray(lo, dtype=np.float64)), 0)
    last = np.minimum(grid.cells_of(np.asarray(hi, dtype=np.float64)), np.asarray(grid.dims) - 1)
    if np.any(last < first):
        raise ValidationError("Crop box does not overlap the grid")
    voxels = grid.voxels[first[0]:last[0] + 1, first[1]:last[1] + 1, first[2]:last[2] + 1]
    return OccupancyGrid(voxels, grid.origin + first * grid.unit, grid.unit)


def hide_ceiling(grid: OccupancyGrid, z_max: float) -> OccupancyGrid:
    """Clear every voxel whose center is above z_max"""
    z = grid.origin[2] + (np.arange(grid.dims[2]) + 0.5) * grid.unit
    voxels = grid.voxels.copy()
    voxels[:, :, z > z_max] = False
    return OccupancyGrid(voxels, grid.origin, grid.unit)


def lattice_cells(points, lattice: Lattice) -> np.ndarray:
    """Distinct lattice cells (n, 3) containing the points"""
    cells = lattice.cells(points)
    if len(cells) == 0:
        return cells.reshape(0, 3)
    return np.unique(cells, axis=0)


def occupied_centers_in(provider: OccupancyProvider, t: float, lo, hi) -> np.ndarray:
    return provider.occupied_centers(t, lo, hi)

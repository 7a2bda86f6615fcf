"""
Rigid cylinder path feasibility on occupancy grids.

A cell column is traversable when no occupied voxel within the cylinder
radius lies between the ground and the cylinder height. Paths are searched
with 8-connected A* without corner cutting.
"""

import heapq
import logging
import math
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import ndimage

from models.grid import OccupancyGrid
from models.metrics import FeasibilityResult, InfeasibleReason
from models.params import CylinderSpec

logger = logging.getLogger(__name__)

Cell = Tuple[int, int]

_STEPS = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


def disk_footprint(radius: float, unit: float) -> np.ndarray:
    """Cells whose centers lie within `radius` of the center cell's center"""
    reach = int(math.floor(radius / unit))
    offsets = np.arange(-reach, reach + 1) * unit
    dx, dy = np.meshgrid(offsets, offsets, indexing="ij")
    return dx * dx + dy * dy <= radius * radius + 1e-12


def blocked_columns(grid: OccupancyGrid, cylinder: CylinderSpec) -> np.ndarray:
    """(Dx, Dy) mask of columns with an occupied voxel center in (ground, ground + height]"""
    z = grid.origin[2] + (np.arange(grid.dims[2]) + 0.5) * grid.unit
    layers = (z > cylinder.ground_z) & (z <= cylinder.ground_z + cylinder.height)
    if not np.any(layers):
        return np.zeros(grid.dims[:2], dtype=bool)
    return np.any(grid.voxels[:, :, layers], axis=2)


def traversable_mask(grid: OccupancyGrid, cylinder: Optional[CylinderSpec] = None) -> np.ndarray:
    """(Dx, Dy) mask of cells where the cylinder axis may stand"""
    cylinder = cylinder or CylinderSpec()
    blocked = blocked_columns(grid, cylinder)
    swept = ndimage.binary_dilation(blocked, structure=disk_footprint(cylinder.radius, grid.unit), border_value=0)
    return ~swept


def neighbours(mask: np.ndarray, cell: Cell) -> List[Tuple[Cell, float]]:
    """Traversable 8-neighbours and step costs (in cells); diagonals need both side cells free"""
    x, y = cell
    nx, ny = mask.shape
    result = []
    for dx, dy in _STEPS:
        i, j = x + dx, y + dy
        if not (0 <= i < nx and 0 <= j < ny and mask[i, j]):
            continue
        if dx and dy and not (mask[x + dx, y] and mask[x, y + dy]):
            continue
        result.append(((i, j), math.sqrt(2.0) if dx and dy else 1.0))
    return result


def _octile(a: Cell, b: Cell) -> float:
    dx, dy = abs(a[0] - b[0]), abs(a[1] - b[1])
    return max(dx, dy) + (math.sqrt(2.0) - 1.0) * min(dx, dy)


def astar(mask: np.ndarray, start: Cell, goal: Cell) -> Tuple[Optional[List[Cell]], int]:
    """
    A* over traversable cells.

    Returns:
        (cells from start to goal inclusive or None, number of expanded cells)
    """
    counter = 0
    open_set = [(_octile(start, goal), counter, start)]
    came_from: Dict[Cell, Cell] = {}
    g_score: Dict[Cell, float] = {start: 0.0}
    closed = set()

    while open_set:
        _, _, current = heapq.heappop(open_set)
        if current in closed:
            continue
        if current == goal:
            path = [current]
            while current in came_from:
                current = came_from[current]
                path.append(current)
            path.reverse()
            return path, len(closed)
        closed.add(current)

        for nxt, cost in neighbours(mask, current):
            tentative = g_score[current] + cost
            if nxt not in g_score or tentative < g_score[nxt]:
                g_score[nxt] = tentative
                came_from[nxt] = current
                counter += 1
                heapq.heappush(open_set, (tentative + _octile(nxt, goal), counter, nxt))

    return None, len(closed)


def path_feasibility(
    grid: OccupancyGrid,
    start,
    goal,
    cylinder: Optional[CylinderSpec] = None,
) -> FeasibilityResult:
    """
    Whether a vertical cylinder can travel from `start` to `goal` (world
    points; only x and y matter) without touching occupied voxels.
    """
    cylinder = cylinder or CylinderSpec()
    cells = grid.cells_of(np.stack([np.asarray(start, dtype=np.float64), np.asarray(goal, dtype=np.float64)]))
    nx, ny, _ = grid.dims
    if not all(0 <= c[0] < nx and 0 <= c[1] < ny for c in cells):
        return FeasibilityResult(feasible=False, reason=InfeasibleReason.OUT_OF_BOUNDS)

    mask = traversable_mask(grid, cylinder)
    a, b = (int(cells[0, 0]), int(cells[0, 1])), (int(cells[1, 0]), int(cells[1, 1]))
    if not mask[a]:
        return FeasibilityResult(feasible=False, reason=InfeasibleReason.START_BLOCKED)
    if not mask[b]:
        return FeasibilityResult(feasible=False, reason=InfeasibleReason.GOAL_BLOCKED)

    path, expanded = astar(mask, a, b)
    if path is None:
        logger.debug(f"No cylinder path from {a} to {b} after expanding {expanded} cells")
        return FeasibilityResult(feasible=False, reason=InfeasibleReason.NO_PATH, expanded=expanded)

    xy = [
        (float(grid.origin[0] + (i + 0.5) * grid.unit), float(grid.origin[1] + (j + 0.5) * grid.unit))
        for i, j in path
    ]
    steps = np.diff(np.asarray(xy), axis=0)
    length = float(np.sum(np.linalg.norm(steps, axis=1))) if len(xy) > 1 else 0.0
    return FeasibilityResult(feasible=True, path=xy, length=length, expanded=expanded)

from collections import deque

import numpy as np
import pytest

from domain.feasibility import disk_footprint, neighbours, path_feasibility, traversable_mask
from domain.scenarios import scene_endpoints, scene_grid
from models.grid import OccupancyGrid
from models.metrics import InfeasibleReason
from models.params import CylinderSpec
from models.synthetic import SceneKind, SceneSpec

UNIT = 0.1


def _room(columns=(), dims=(40, 40, 25)) -> OccupancyGrid:
    """Empty room with full-height occupied columns at the given (i, j) cells"""
    voxels = np.zeros(dims, dtype=bool)
    for i, j in columns:
        voxels[i, j, :] = True
    return OccupancyGrid(voxels, (0.0, 0.0, 0.0), UNIT)


def _reachable(mask, start, goal) -> bool:
    seen, queue = {start}, deque([start])
    nx, ny = mask.shape
    while queue:
        x, y = queue.popleft()
        if (x, y) == goal:
            return True
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                i, j = x + dx, y + dy
                if (dx, dy) == (0, 0) or not (0 <= i < nx and 0 <= j < ny) or not mask[i, j]:
                    continue
                if dx and dy and not (mask[i, y] and mask[x, j]):
                    continue
                if (i, j) not in seen:
                    seen.add((i, j))
                    queue.append((i, j))
    return False


def test_disk_footprint():
    footprint = disk_footprint(0.25, UNIT)
    assert footprint.shape == (5, 5)
    assert footprint.sum() == 21
    assert not footprint[0, 0] and footprint[2, 0]


def test_open_room_is_feasible():
    result = path_feasibility(_room(), (0.55, 0.55, 0.0), (3.55, 3.55, 0.0))
    assert result.feasible and result.reason is None
    assert result.length == pytest.approx(30 * np.sqrt(2.0) * UNIT)
    assert result.path[0] == pytest.approx((0.55, 0.55))
    assert result.path[-1] == pytest.approx((3.55, 3.55))


def test_same_cell_path():
    result = path_feasibility(_room(), (1.0, 1.0, 0.0), (1.01, 1.02, 0.0))
    assert result.feasible and result.length == 0.0 and len(result.path) == 1


def test_out_of_bounds():
    result = path_feasibility(_room(), (0.5, 0.5, 0.0), (10.0, 10.0, 0.0))
    assert not result.feasible and result.reason is InfeasibleReason.OUT_OF_BOUNDS


def test_blocked_endpoints():
    grid = _room(columns=[(5, 5), (30, 30)])
    assert path_feasibility(grid, (0.55, 0.55, 0.0), (2.0, 2.0, 0.0)).reason is InfeasibleReason.START_BLOCKED
    assert path_feasibility(grid, (2.0, 2.0, 0.0), (3.05, 3.05, 0.0)).reason is InfeasibleReason.GOAL_BLOCKED


def test_sealed_goal():
    ring = [(i, j) for i in range(20, 36) for j in range(20, 36) if i in (20, 35) or j in (20, 35)]
    result = path_feasibility(_room(columns=ring), (0.55, 0.55, 0.0), (2.75, 2.75, 0.0))
    assert not result.feasible and result.reason is InfeasibleReason.NO_PATH
    assert result.expanded > 0


@pytest.mark.parametrize("gap, feasible", [(3, False), (8, True)])
def test_wall_opening_against_cylinder_width(gap, feasible):
    # wall across x = 2.0 with an opening of `gap` cells
    lo = 20 - gap // 2
    wall = [(20, j) for j in range(40) if not lo <= j < lo + gap]
    result = path_feasibility(_room(columns=wall), (0.55, 2.05, 0.0), (3.55, 2.05, 0.0))
    assert result.feasible is feasible


def test_obstacles_outside_the_height_band_are_ignored():
    voxels = np.zeros((40, 40, 25), dtype=bool)
    voxels[20, :, 18:] = True  # overhang starting at z = 1.8
    grid = OccupancyGrid(voxels, (0.0, 0.0, 0.0), UNIT)
    assert path_feasibility(grid, (0.55, 2.05, 0.0), (3.55, 2.05, 0.0)).feasible
    assert not path_feasibility(grid, (0.55, 2.05, 0.0), (3.55, 2.05, 0.0), CylinderSpec(height=1.9)).feasible


def test_no_corner_cutting():
    mask = np.ones((3, 3), dtype=bool)
    mask[1, 0] = mask[0, 1] = False
    assert (1, 1) not in [cell for cell, _ in neighbours(mask, (0, 0))]
    costs = dict(neighbours(np.ones((3, 3), dtype=bool), (1, 1)))
    assert len(costs) == 8 and costs[(2, 2)] == pytest.approx(np.sqrt(2.0))


def test_search_agrees_with_breadth_first_reachability(rng):
    for _ in range(15):
        columns = [tuple(c) for c in rng.integers(0, 20, size=(rng.integers(5, 60), 2))]
        grid = _room(columns=columns, dims=(20, 20, 20))
        mask = traversable_mask(grid, CylinderSpec(radius=0.1))
        free = np.argwhere(mask)
        if len(free) < 2:
            continue
        a, b = free[rng.choice(len(free), size=2, replace=False)]
        start, goal = grid.centers([a[0], a[1], 0]), grid.centers([b[0], b[1], 0])
        result = path_feasibility(grid, start, goal, CylinderSpec(radius=0.1))
        assert result.feasible == _reachable(mask, tuple(a), tuple(b))


@pytest.mark.parametrize(
    "kind, feasible",
    [
        (SceneKind.OPEN_ROOM, True),
        (SceneKind.CORRIDOR, True),
        (SceneKind.WALL, False),
        (SceneKind.CRAWL_TUNNEL, False),
        (SceneKind.SEALED_GOAL, False),
    ],
)
def test_scene_corpus(kind, feasible):
    spec = SceneSpec(kind=kind, seed=1)
    start, goal = scene_endpoints(spec)
    result = path_feasibility(scene_grid(spec), start, goal)
    assert result.feasible is feasible
    if not feasible:
        assert result.reason is InfeasibleReason.NO_PATH

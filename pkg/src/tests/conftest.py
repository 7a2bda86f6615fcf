import numpy as np
import pytest

from domain.posing import standing_pose
from models.grid import OccupancyGrid
from models.motion import MotionSequence
from models.skeleton import default_skeleton


@pytest.fixture
def skeleton():
    return default_skeleton()


@pytest.fixture
def standing(skeleton):
    return standing_pose(skeleton)


@pytest.fixture
def rng():
    return np.random.default_rng(7)


@pytest.fixture
def make_grid(rng):
    """Random grid factory: dims up to `side` per axis, `fill` occupied share"""

    def make(side: int = 8, fill: float = 0.3, unit: float = 0.1, flat: bool = False) -> OccupancyGrid:
        dims = rng.integers(1, side + 1, size=3)
        if flat:
            dims[2] = 1
        origin = rng.uniform(-1.0, 1.0, size=3)
        return OccupancyGrid(rng.uniform(size=tuple(dims)) < fill, origin, unit)

    return make


@pytest.fixture
def walk_line(skeleton, standing):
    """Standing pose sliding 0.05 m per frame along +X at 30 fps"""
    frames = tuple(standing.with_root_position(standing.root_position + [0.05 * i, 0.0, 0.0]) for i in range(6))
    return MotionSequence(skeleton, frames, 30.0, "line")

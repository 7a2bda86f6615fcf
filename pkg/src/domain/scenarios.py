"""
Evaluation scenes and goal-reaching episodes.

This module provides:
- scene_provider / scene_grid: seeded open rooms, walls, corridors, crawl
  tunnels and sealed goals laid out along +X
- Scenario builders for rollouts: open ground, wall, corridor, revolving door
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from domain.controller import target_from_pose
from domain.posing import standing_pose
from domain.providers import BoxesProvider, EmptyProvider, OccupancyProvider, RevolvingDoor
from models.control import TargetEvent, TargetSpec
from models.grid import OccupancyGrid
from models.skeleton import Skeleton, default_skeleton
from models.synthetic import SceneKind, SceneSpec

logger = logging.getLogger(__name__)

Box = Tuple[Tuple[float, float, float], Tuple[float, float, float]]

WALL_THICKNESS = 0.24


def _perimeter(spec: SceneSpec) -> List[Box]:
    t, length, width, height = WALL_THICKNESS, spec.length, spec.width, spec.height
    return [
        ((0.0, 0.0, 0.0), (length, t, height)),
        ((0.0, width - t, 0.0), (length, width, height)),
        ((0.0, 0.0, 0.0), (t, width, height)),
        ((length - t, 0.0, 0.0), (length, width, height)),
    ]


def scene_boxes(spec: SceneSpec) -> List[Box]:
    """
    Boxes of a scene spanning [0, length] x [0, width] x [0, height]. The
    travel line runs along +X at y = width / 2 from scene_endpoints.
    """
    rng = np.random.default_rng(spec.seed)
    length, width, height = spec.length, spec.width, spec.height
    mid = width / 2.0
    boxes = _perimeter(spec)

    if spec.kind is SceneKind.WALL:
        x = length / 2.0 + rng.uniform(-0.5, 0.5)
        boxes.append(((x, 0.0, 0.0), (x + WALL_THICKNESS, width, height)))
    elif spec.kind is SceneKind.CORRIDOR:
        gap = rng.uniform(0.9, 1.2)
        x0, x1 = length * 0.25, length * 0.75
        boxes.append(((x0, 0.0, 0.0), (x1, mid - gap / 2.0, height)))
        boxes.append(((x0, mid + gap / 2.0, 0.0), (x1, width, height)))
    elif spec.kind is SceneKind.CRAWL_TUNNEL:
        ceiling = rng.uniform(0.85, 1.05)
        x0 = length / 3.0 + rng.uniform(-0.3, 0.3)
        x1 = x0 + length / 3.0
        boxes.append(((x0, 0.0, ceiling), (x1, width, height)))
    elif spec.kind is SceneKind.SEALED_GOAL:
        x0 = length - 1.6
        boxes.append(((x0, 0.0, 0.0), (x0 + WALL_THICKNESS, width, height)))
    return boxes


def scene_provider(spec: SceneSpec) -> BoxesProvider:
    return BoxesProvider(tuple(scene_boxes(spec)), spec.unit)


def scene_grid(spec: SceneSpec) -> OccupancyGrid:
    """Voxelized scene; voxel (i, j, k) covers origin + [i, i+1) * unit, origin at 0"""
    provider = scene_provider(spec)
    hi = np.array([spec.length, spec.width, spec.height]) - 0.5 * spec.unit
    return provider.snapshot(0.0, (0.0, 0.0, 0.0), hi)


def scene_endpoints(spec: SceneSpec) -> Tuple[np.ndarray, np.ndarray]:
    """Start and goal ground points of a scene's travel line"""
    mid = spec.width / 2.0
    return np.array([0.7, mid, 0.0]), np.array([spec.length - 0.7, mid, 0.0])


@dataclass(frozen=True, eq=False)
class Scenario:
    """Rollout setup: scene, standing start and a standing target"""

    name: str
    provider: OccupancyProvider
    start: Tuple[float, float, float]
    target: TargetSpec
    duration: float

    def schedule(self) -> List[TargetEvent]:
        return [TargetEvent(0.0, self.target)]


def standing_target(skeleton: Skeleton, x: float, y: float, yaw: float = 0.0) -> TargetSpec:
    return target_from_pose(standing_pose(skeleton, x, y, yaw), skeleton, yaw)


def open_ground_scenario(seed: int, distance: float = 3.0, skeleton: Optional[Skeleton] = None) -> Scenario:
    """Random start and facing; target standing `distance` away in a random direction"""
    skeleton = skeleton or default_skeleton()
    rng = np.random.default_rng(seed)
    x, y = rng.uniform(-2.0, 2.0, size=2)
    yaw = float(rng.uniform(-np.pi, np.pi))
    bearing = float(rng.uniform(-np.pi, np.pi))
    goal_yaw = float(rng.uniform(-np.pi, np.pi))
    gx, gy = x + distance * np.cos(bearing), y + distance * np.sin(bearing)
    return Scenario(
        f"open_{seed:04d}", EmptyProvider(), (float(x), float(y), yaw), standing_target(skeleton, gx, gy, goal_yaw), 10.0
    )


def wall_scenario(seed: int, skeleton: Optional[Skeleton] = None) -> Scenario:
    """Target behind a wall crossing the travel line"""
    skeleton = skeleton or default_skeleton()
    spec = SceneSpec(kind=SceneKind.WALL, seed=seed)
    start, goal = scene_endpoints(spec)
    return Scenario(
        spec.name, scene_provider(spec), (start[0], start[1], 0.0), standing_target(skeleton, goal[0], goal[1]), 10.0
    )


def corridor_scenario(seed: int, skeleton: Optional[Skeleton] = None) -> Scenario:
    """Corridor closed at its far end, target beyond it"""
    skeleton = skeleton or default_skeleton()
    rng = np.random.default_rng(seed)
    spec = SceneSpec(kind=SceneKind.CORRIDOR, seed=seed)
    boxes = scene_boxes(spec)
    end = spec.length * 0.75 - WALL_THICKNESS - rng.uniform(0.0, 0.4)
    boxes.append(((end, 0.0, 0.0), (end + WALL_THICKNESS, spec.width, spec.height)))
    start, goal = scene_endpoints(spec)
    provider = BoxesProvider(tuple(boxes), spec.unit)
    return Scenario(
        f"corridor-closed_{seed:04d}", provider, (start[0], start[1], 0.0), standing_target(skeleton, goal[0], goal[1]), 10.0
    )


DOOR_PATH_Y = -0.75
DOOR_START_X = -3.5
DOOR_TARGET_X = 4.0


def door_scenario(seed: int, skeleton: Optional[Skeleton] = None) -> Scenario:
    """Walk through a revolving door centered at the origin; the wing phase is seeded"""
    skeleton = skeleton or default_skeleton()
    rng = np.random.default_rng(seed)
    door = RevolvingDoor(phase_deg=float(rng.uniform(0.0, 90.0)))
    return Scenario(
        f"door_{seed:04d}",
        door,
        (DOOR_START_X, DOOR_PATH_Y, 0.0),
        standing_target(skeleton, DOOR_TARGET_X, DOOR_PATH_Y),
        20.0,
    )

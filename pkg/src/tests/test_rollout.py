import numpy as np
import pytest

from core.exceptions import PolicyError, ValidationError
from domain.controller import BaselinePolicy, ZeroVelocityPolicy
from domain.metrics import success
from domain.posing import standing_pose
from domain.providers import BoxesProvider, EmptyProvider, TransformedProvider
from domain.rollout import RolloutSettings, active_target, frame_count, rollout
from domain.scenarios import standing_target
from infrastructure.storage.episode_io import dump_episode
from models.control import Prediction, TargetEvent
from models.episode import OccupancyEncoding


class RecordingPolicy(ZeroVelocityPolicy):
    def __init__(self):
        self.signals = []

    def step(self, history, state, signals, rng=None) -> Prediction:
        self.signals.append(signals)
        return super().step(history, state, signals, rng)


class FailingPolicy(ZeroVelocityPolicy):
    def step(self, history, state, signals, rng=None) -> Prediction:
        raise RuntimeError("boom")


class DivergingPolicy(ZeroVelocityPolicy):
    def step(self, history, state, signals, rng=None) -> Prediction:
        prediction = super().step(history, state, signals, rng)
        return prediction.with_velocities(np.full(3, np.nan), prediction.joint_velocities, np.zeros((17, 3)))


def _walk_to(skeleton, provider, x_goal: float, duration: float, **settings):
    schedule = [TargetEvent(0.0, standing_target(skeleton, x_goal, 0.0))]
    return rollout(
        BaselinePolicy(skeleton, regulate=settings.get("regulation", True)),
        standing_pose(skeleton),
        provider,
        schedule,
        duration,
        seed=3,
        skeleton=skeleton,
        settings=RolloutSettings(**settings),
        name="walk",
    )


def test_frame_count():
    assert frame_count(2.0, 10.0) == 20
    assert frame_count(0.01, 10.0) == 1


def test_active_target_follows_the_schedule(skeleton):
    first, second = standing_target(skeleton, 1.0, 0.0), standing_target(skeleton, 2.0, 0.0)
    schedule = [TargetEvent(0.0, first), TargetEvent(1.0, second)]
    assert active_target(schedule, 0.5) is first
    assert active_target(schedule, 1.0) is second
    assert active_target([TargetEvent(2.0, first)], 0.0) is None


def test_baseline_reaches_an_open_goal(skeleton):
    result = _walk_to(skeleton, EmptyProvider(), 3.0, 4.0)
    assert len(result) == 40
    assert result.frames[0].index == 0 and result.frames[0].time == 0.0
    reached = success(result)
    assert reached.success
    assert reached.time < 4.0
    assert np.allclose(result.root_positions()[-1, :2], [3.0, 0.0], atol=1e-6)
    assert np.all(result.penetrations() == 0)


def test_rollout_is_deterministic(skeleton):
    a = _walk_to(skeleton, EmptyProvider(), 2.0, 1.5)
    b = _walk_to(skeleton, EmptyProvider(), 2.0, 1.5)
    assert dump_episode(a) == dump_episode(b)


def test_regulation_is_inert_without_occupancy(skeleton):
    on = _walk_to(skeleton, EmptyProvider(), 2.0, 1.5)
    off = _walk_to(skeleton, EmptyProvider(), 2.0, 1.5, regulation=False)
    assert dump_episode(on) == dump_episode(off)


def test_regulation_slows_the_approach_to_a_wall(skeleton):
    wall = BoxesProvider((((1.5, -3.0, 0.0), (1.8, 3.0, 2.5)),))
    regulated = _walk_to(skeleton, wall, 5.0, 1.6)
    free = _walk_to(skeleton, wall, 5.0, 1.6, regulation=False)
    assert any(frame.delta_norms.any() for frame in regulated.frames)
    assert not any(frame.delta_norms.any() for frame in free.frames)
    assert regulated.root_positions()[-1, 0] < free.root_positions()[-1, 0]


def test_sensing_off_leaves_no_occupancy_digest(skeleton):
    result = _walk_to(skeleton, EmptyProvider(), 2.0, 0.5, use_occupancy=False)
    assert all(frame.occupancy_digest == "" for frame in result.frames)


def test_bps_encoding_reaches_the_policy(skeleton, standing):
    policy = RecordingPolicy()
    settings = RolloutSettings(encoding=OccupancyEncoding.BPS, bps_points=16)
    rollout(policy, standing, EmptyProvider(), [], 0.3, skeleton=skeleton, settings=settings)
    assert len(policy.signals) == 2
    assert all(s.occupancy is None and s.bps.shape == (16,) for s in policy.signals)


def test_grid_encoding_reaches_the_policy(skeleton, standing):
    policy = RecordingPolicy()
    rollout(policy, standing, EmptyProvider(), [], 0.2, skeleton=skeleton)
    assert policy.signals[0].occupancy.bits.shape == (25, 25, 25)
    assert policy.signals[0].target is None


def test_penetration_is_recorded(skeleton, standing):
    block = BoxesProvider((((-0.5, -0.5, 0.0), (0.5, 0.5, 2.0)),))
    result = rollout(ZeroVelocityPolicy(), standing, block, [], 0.3, skeleton=skeleton)
    assert np.all(result.penetrations() > 0)
    assert result.provider == "boxes:1"


def test_duration_must_be_positive(skeleton, standing):
    with pytest.raises(ValidationError):
        rollout(ZeroVelocityPolicy(), standing, EmptyProvider(), [], 0.0, skeleton=skeleton)


@pytest.mark.parametrize("policy", [FailingPolicy(), DivergingPolicy()])
def test_policy_failures_are_wrapped(skeleton, standing, policy):
    with pytest.raises(PolicyError):
        rollout(policy, standing, EmptyProvider(), [], 1.0, skeleton=skeleton)


def test_policy_failure_reports_its_frame(skeleton, standing):
    class LateFailure(ZeroVelocityPolicy):
        def step(self, history, state, signals, rng=None) -> Prediction:
            if self.calls == 3:
                raise RuntimeError("late")
            self.calls += 1
            return super().step(history, state, signals, rng)

    policy = LateFailure()
    policy.calls = 0
    with pytest.raises(PolicyError) as info:
        rollout(policy, standing, EmptyProvider(), [], 1.0, skeleton=skeleton)
    assert info.value.frame == 3


def test_rollout_moves_rigidly_with_the_scene(skeleton):
    wall = BoxesProvider((((1.213, -0.837, 0.0), (1.517, 0.291, 2.5)),))
    yaw, shift = 0.7, np.array([0.31, -1.27])
    turn = np.array([[np.cos(yaw), -np.sin(yaw)], [np.sin(yaw), np.cos(yaw)]])
    goal = np.array([3.0, 0.4])
    moved_goal = turn @ goal + shift

    def run(provider, start, target):
        schedule = [TargetEvent(0.0, target)]
        return rollout(BaselinePolicy(skeleton), start, provider, schedule, 3.0, skeleton=skeleton, name="rigid")

    base = run(wall, standing_pose(skeleton), standing_target(skeleton, *goal))
    moved = run(
        TransformedProvider(wall, yaw, (shift[0], shift[1], 0.0)),
        standing_pose(skeleton, shift[0], shift[1], yaw),
        standing_target(skeleton, moved_goal[0], moved_goal[1], yaw),
    )
    expected = base.root_positions()[:, :2] @ turn.T + shift
    np.testing.assert_allclose(moved.root_positions()[:, :2], expected, atol=1e-6)
    np.testing.assert_allclose(moved.root_positions()[:, 2], base.root_positions()[:, 2], atol=1e-6)
    assert np.linalg.norm(base.root_positions()[-1, :2] - base.root_positions()[0, :2]) > 0.5

import numpy as np
import pytest

from core.exceptions import EmptySequenceError, PolicyError, ValidationError
from domain.controller import (
    BaselinePolicy,
    MotionTrack,
    ZeroVelocityPolicy,
    build_training_pairs,
    decode_target,
    encode_history,
    encode_pose_state,
    encode_target,
    mask_control_signals,
    masked_target,
    policy_step,
    target_from_pose,
)
from domain.kinematics import transform_pose
from domain.occupancy import sample_canonical_occupancy
from domain.providers import BoxesProvider, EmptyProvider
from domain.synthetic import generate_motion
from models.control import ControlSignals, TargetSpec
from models.frame import CanonicalFrame
from models.motion import MotionSequence
from models.params import CanonicalOccupancyConfig, WindowConfig
from models.synthetic import MotionKind, SyntheticMotionSpec


def _moved(seq: MotionSequence, yaw: float, translation) -> MotionSequence:
    frames = tuple(transform_pose(pose, yaw, translation) for pose in seq.frames)
    return MotionSequence(seq.skeleton, frames, seq.fps, seq.name)


def _still(skeleton, standing) -> MotionSequence:
    return MotionSequence(skeleton, (standing, standing), 10.0)


def test_pose_state_of_linear_walk(walk_line):
    state = encode_pose_state(walk_line, 2)
    assert np.allclose(state.root_position[:2], 0.0)
    assert np.allclose(state.root_velocity, [1.5, 0.0, 0.0])
    assert np.allclose(state.joint_velocities, [1.5, 0.0, 0.0])
    assert state.yaw_rate == pytest.approx(0.0)


def test_pose_state_is_invariant_to_world_placement(walk_line):
    moved = _moved(walk_line, 1.1, (3.0, -2.0, 0.0))
    a, b = encode_pose_state(walk_line, 3), encode_pose_state(moved, 3)
    for name in ("root_position", "root_rot6d", "joints", "root_velocity", "joint_velocities"):
        assert np.allclose(getattr(a, name), getattr(b, name)), name
    assert np.allclose(encode_pose_state(moved, 3).root_velocity, [1.5, 0.0, 0.0])


def test_history_pads_with_the_first_frame(walk_line):
    history = encode_history(walk_line, 1, 3)
    assert history.length == 4
    assert np.allclose(history.root_positions[0], history.root_positions[1])
    assert np.allclose(history.root_positions[2], history.root_positions[0])
    assert np.allclose(history.root_positions[3, :2], [0.0, 0.0])
    assert np.allclose(history.root_positions[2, 0], -0.05)
    assert history.limb_positions.shape == (4, 4, 3)


def test_target_encoding_round_trip():
    frame = CanonicalFrame(1.0, 2.0, 0.5)
    target = masked_target([(4.0, 2.0, 0.9), None, (4.0, 1.5, 1.2), None, None], yaw=1.0)
    signals = encode_target(target, frame)
    assert signals.target_mask.tolist() == [True, False, True, False, False]
    assert signals.target_yaw == pytest.approx(0.5)
    np.testing.assert_allclose(decode_target(signals.target, frame), target.points)


def test_absent_target_gives_empty_signals():
    signals = encode_target(None, CanonicalFrame())
    assert signals.target is None and signals.occupancy is None
    assert not signals.target_mask.any()


def test_target_rejects_partial_rows():
    points = np.zeros((5, 3))
    points[1, 0] = np.nan
    with pytest.raises(ValidationError):
        TargetSpec(points)


def test_zero_velocity_policy(skeleton, standing):
    seq = _still(skeleton, standing)
    state = encode_pose_state(seq, 1)
    prediction = policy_step(ZeroVelocityPolicy(), encode_history(seq, 1, 1), state, ControlSignals())
    assert not prediction.root_velocity.any() and prediction.yaw_rate == 0.0
    assert np.array_equal(prediction.joint_rot6d, state.joint_rot6d)



class _BrokenPolicy(ZeroVelocityPolicy):
    def step(self, history, state, signals, rng=None):
        raise KeyError("joint")


def test_policy_step_wraps_failures(skeleton, standing):
    seq = _still(skeleton, standing)
    with pytest.raises(PolicyError) as info:
        policy_step(_BrokenPolicy(), encode_history(seq, 1, 1), encode_pose_state(seq, 1), ControlSignals(), frame=4)
    assert info.value.frame == 4 and info.value.details["frame"] == 4
    assert isinstance(info.value.__cause__, KeyError)

def _baseline_step(skeleton, standing, goal, occupancy=None, regulate=True):
    seq = _still(skeleton, standing)
    frame = MotionTrack.from_sequence(seq).frame(1)
    target = masked_target([goal, None, None, None, None])
    signals = encode_target(target, frame).without(occupancy=occupancy)
    policy = BaselinePolicy(skeleton, regulate=regulate)
    return policy.step(encode_history(seq, 1, 1), encode_pose_state(seq, 1), signals)


def test_baseline_heads_for_a_far_goal(skeleton, standing):
    goal = standing.root_position + [10.0, 0.0, 0.0]
    prediction = _baseline_step(skeleton, standing, goal)
    assert np.allclose(prediction.root_velocity, [1.4, 0.0, 0.0])
    assert prediction.yaw_rate == pytest.approx(0.0)
    assert prediction.future is not None and prediction.future.root_positions.shape == (1, 3)


def test_baseline_turn_rate_is_limited(skeleton, standing):
    goal = standing.root_position + [0.0, 10.0, 0.0]
    prediction = _baseline_step(skeleton, standing, goal)
    assert prediction.yaw_rate == pytest.approx(np.radians(120.0))


def test_baseline_stops_close_to_the_goal(skeleton, standing):
    goal = standing.root_position + [0.05, 0.0, 0.0]
    prediction = _baseline_step(skeleton, standing, goal)
    assert np.allclose(prediction.root_velocity, [0.5, 0.0, 0.0])


def test_baseline_without_target_stands_still(skeleton, standing):
    seq = _still(skeleton, standing)
    prediction = BaselinePolicy(skeleton).step(encode_history(seq, 1, 1), encode_pose_state(seq, 1), ControlSignals())
    assert np.allclose(prediction.root_velocity, 0.0)
    assert prediction.yaw_rate == 0.0


def test_baseline_slows_down_in_front_of_a_wall(skeleton, standing):
    wall = BoxesProvider((((0.6, -2.0, 0.0), (0.9, 2.0, 2.5)),))
    c_o = sample_canonical_occupancy(wall, CanonicalFrame(), 0.0, CanonicalOccupancyConfig(), 0.9)
    goal = standing.root_position + [10.0, 0.0, 0.0]
    free = _baseline_step(skeleton, standing, goal, c_o, regulate=False)
    regulated = _baseline_step(skeleton, standing, goal, c_o)
    assert np.linalg.norm(free.root_velocity) == pytest.approx(1.4)
    assert np.linalg.norm(regulated.root_velocity) < 1.4 - 1e-6
    assert regulated.field_deltas is not None and free.field_deltas is None


def test_baseline_slides_along_a_wall_it_meets_obliquely(skeleton, standing):
    wall = BoxesProvider((((0.6, -2.0, 0.0), (0.9, 2.0, 2.5)),))
    c_o = sample_canonical_occupancy(wall, CanonicalFrame(), 0.0, CanonicalOccupancyConfig(), 0.9)
    goal = standing.root_position + [10.0, 10.0, 0.0]
    regulated = _baseline_step(skeleton, standing, goal, c_o)
    # the head-on part is removed, the part along the wall is kept
    assert regulated.root_velocity[1] > 0.2
    assert regulated.root_velocity[0] < 1.4 / np.sqrt(2.0)
    assert np.linalg.norm(regulated.root_velocity) < 1.4


def test_masking_extremes(rng):
    c_o = sample_canonical_occupancy(EmptyProvider(), CanonicalFrame(), 0.0, CanonicalOccupancyConfig(size=5), 0.9)
    signals = ControlSignals(occupancy=c_o, target=np.ones((5, 3)))
    blank = mask_control_signals(signals, rng, p_target=1.0, p_occupancy=1.0)
    assert np.isnan(blank.target).all() and blank.occupancy is None
    kept = mask_control_signals(signals, rng, p_target=0.0, p_occupancy=0.0)
    assert np.array_equal(kept.target, signals.target) and kept.occupancy is c_o
    assert not np.isnan(signals.target).any()


def test_training_pairs(skeleton):
    seq = generate_motion(SyntheticMotionSpec(kind=MotionKind.WALK, duration=1.0, seed=2), skeleton)
    window = WindowConfig(history=2, future=3)
    pairs = list(build_training_pairs(seq, EmptyProvider(), CanonicalOccupancyConfig(size=5), window))
    assert len(pairs) == len(seq.decimated(window.rate)) - 1
    first, last = pairs[0], pairs[-1]
    assert first.index == 0 and first.history.length == 3
    assert first.target.future.root_positions.shape == (3, 3)
    assert first.signals.occupancy.count == 0
    assert first.signals.target_mask.all()
    # the last sample's target root lies one control step ahead of the current root
    assert np.linalg.norm(last.signals.target[0, :2]) <= np.linalg.norm(first.signals.target[0, :2])


def test_training_pairs_need_two_control_frames(skeleton, standing):
    seq = MotionSequence(skeleton, (standing, standing), 30.0)
    with pytest.raises(EmptySequenceError):
        list(build_training_pairs(seq, EmptyProvider()))


def test_target_from_pose(skeleton, standing):
    target = target_from_pose(standing, skeleton, yaw=0.3)
    assert target.mask.all()
    assert np.allclose(target.root, standing.root_position)

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from core.exceptions import DegenerateFacingError, EmptySequenceError, InvalidRotationError, ValidationError
from domain.body import (
    CapsuleBody,
    body_geometry,
    body_samples,
    capsule_volume,
    point_in_body,
    segment_distances,
)
from domain.kinematics import (
    canonical_frame,
    canonicalize,
    canonicalize_pose,
    decanonicalize,
    decanonicalize_pose,
    finite_velocities,
    forward_kinematics,
    label_foot_contacts,
    matrix_to_rot6d,
    rot6d_to_matrix,
    transform_pose,
)
from domain.posing import end_effector_points, realize_pose, standing_offsets, standing_root_height
from models.frame import CanonicalFrame, ValueKind, yaw_matrix
from models.motion import IDENTITY_6D, MotionSequence, Pose
from models.skeleton import LANDMARKS, Skeleton


def test_identity_rot6d_maps_to_identity():
    assert np.allclose(rot6d_to_matrix(IDENTITY_6D), np.eye(3))


def test_rot6d_ignores_scale_and_shear():
    assert np.allclose(rot6d_to_matrix([2.0, 0.0, 0.0, 1.0, 1.0, 0.0]), np.eye(3))


def test_rot6d_round_trip(rng):
    matrices = Rotation.from_rotvec(rng.normal(size=(20, 3))).as_matrix()
    recovered = rot6d_to_matrix(matrix_to_rot6d(matrices))
    assert np.allclose(recovered, matrices, atol=1e-12)
    assert np.allclose(np.linalg.det(recovered), 1.0)


@pytest.mark.parametrize("r6d", [np.zeros(6), [1.0, 0.0, 0.0, 2.0, 0.0, 0.0]])
def test_rot6d_rejects_degenerate_input(r6d):
    with pytest.raises(InvalidRotationError):
        rot6d_to_matrix(r6d)


def test_rest_pose_accumulates_offsets(skeleton):
    joints = forward_kinematics(Pose.rest(skeleton, (0.0, 0.0, 1.0)), skeleton)
    assert np.allclose(joints[0], [0.0, 0.0, 1.0])
    assert np.allclose(joints[skeleton.index("left_hand")], [0.0, 0.71, 1.55])
    assert np.allclose(joints[skeleton.index("right_foot")], [0.0, -0.10, 1.0 - 0.05 - 0.84])


def test_half_turn_root_mirrors_offsets(skeleton):
    rest = Pose.rest(skeleton, (1.0, 2.0, 1.0))
    turned = Pose(rest.root_position, matrix_to_rot6d(yaw_matrix(np.pi)), rest.joint_rot6d)
    a = forward_kinematics(rest, skeleton) - rest.root_position
    b = forward_kinematics(turned, skeleton) - rest.root_position
    assert np.allclose(b, a * [-1.0, -1.0, 1.0])


def test_canonical_frame_of_rest_pose_faces_x(skeleton):
    frame = canonical_frame(Pose.rest(skeleton, (1.0, 2.0, 0.9)), skeleton)
    assert frame.origin_x == 1.0 and frame.origin_y == 2.0
    assert frame.yaw == pytest.approx(0.0)


def test_canonical_frame_follows_root_yaw(skeleton):
    rest = Pose.rest(skeleton)
    pose = Pose(rest.root_position, matrix_to_rot6d(yaw_matrix(np.pi / 2)), rest.joint_rot6d)
    assert canonical_frame(pose, skeleton).yaw == pytest.approx(np.pi / 2)


def test_degenerate_facing(skeleton):
    rest = Pose.rest(skeleton)
    # left-right axis pointing straight up
    tipped = Pose(
        rest.root_position, matrix_to_rot6d(Rotation.from_euler("x", 90, degrees=True).as_matrix()), rest.joint_rot6d
    )
    with pytest.raises(DegenerateFacingError):
        canonical_frame(tipped, skeleton)
    assert canonical_frame(tipped, skeleton, previous=0.4).yaw == 0.4


def test_canonicalize_direction_under_quarter_turn():
    frame = CanonicalFrame(0.0, 0.0, np.pi / 2)
    assert np.allclose(canonicalize([1.0, 0.0, 0.0], frame, ValueKind.DIRECTION), [0.0, -1.0, 0.0])


def test_canonicalize_round_trip(rng):
    frame = CanonicalFrame(1.5, -0.5, 0.8)
    points = rng.normal(size=(10, 3))
    matrices = Rotation.from_rotvec(rng.normal(size=(4, 3))).as_matrix()
    for kind, values in ((ValueKind.POINT, points), (ValueKind.DIRECTION, points), (ValueKind.ORIENTATION, matrices)):
        assert np.allclose(decanonicalize(canonicalize(values, frame, kind), frame, kind), values)
    assert np.allclose(frame.points_to_canonical([1.5, -0.5, 0.3]), [0.0, 0.0, 0.3])
    assert np.isclose(frame.yaw_to_world(frame.yaw_to_canonical(0.5)), 0.5)


def test_canonicalize_pose_round_trip(standing):
    frame = CanonicalFrame(0.3, 0.1, -1.2)
    back = decanonicalize_pose(canonicalize_pose(standing, frame), frame)
    assert np.allclose(back.root_position, standing.root_position)
    assert np.allclose(rot6d_to_matrix(back.root_rot6d), rot6d_to_matrix(standing.root_rot6d))


def test_finite_velocities_of_linear_motion(walk_line):
    velocities = finite_velocities(walk_line)
    assert np.allclose(velocities.root, [1.5, 0.0, 0.0])
    assert np.allclose(velocities.joints, [1.5, 0.0, 0.0])
    assert np.allclose(velocities.yaw_rate, 0.0)


def test_finite_velocities_of_uniform_turn(skeleton, standing):
    frames = tuple(transform_pose(standing, np.radians(3.0 * i)) for i in range(5))
    velocities = finite_velocities(MotionSequence(skeleton, frames, 30.0))
    assert np.allclose(velocities.yaw_rate, np.radians(90.0))
    assert np.allclose(velocities.yaws, np.radians(3.0 * np.arange(5)))


def test_sequence_needs_two_frames(skeleton, standing):
    with pytest.raises(EmptySequenceError):
        MotionSequence(skeleton, (standing,))


def test_foot_contacts_follow_height(skeleton, standing):
    assert standing.foot_contact == (True, True)
    lifted = label_foot_contacts(standing.with_root_position(standing.root_position + [0.0, 0.0, 0.3]), skeleton)
    assert lifted.foot_contact == (False, False)


def test_standing_pose_reaches_standing_offsets(skeleton, standing):
    points = end_effector_points(standing, skeleton)
    offsets = standing_offsets(skeleton)
    assert points[0][2] == pytest.approx(standing_root_height(skeleton))
    for row, name in enumerate(("left_hand", "right_hand", "left_foot", "right_foot"), start=1):
        assert np.allclose(points[row], standing.root_position + offsets[name], atol=1e-6)


def test_realize_pose_places_reachable_hand(skeleton):
    root = np.array([0.0, 0.0, 1.0])
    hand = root + [0.35, 0.3, 0.35]
    pose = realize_pose(skeleton, root, 0.0, targets={"left_hand": hand})
    joints = forward_kinematics(pose, skeleton)
    assert np.allclose(joints[skeleton.index("left_hand")], hand, atol=1e-6)


def test_capsule_volume_matches_monte_carlo(rng):
    body = CapsuleBody([[0.0, 0.0, 0.0]], [[0.0, 0.0, 0.4]], [0.05])
    lo, hi = body.bounds()
    samples = rng.uniform(lo, hi, size=(200_000, 3))
    estimate = np.mean(point_in_body(samples, body)) * np.prod(hi - lo)
    assert estimate == pytest.approx(capsule_volume(body), rel=0.02)


def test_segment_distances_match_scalar_projection(rng):
    points = rng.normal(size=(50, 3))
    starts, ends = rng.normal(size=(4, 3)), rng.normal(size=(4, 3))
    distances = segment_distances(points, starts, ends)
    for n, p in enumerate(points):
        for m, (a, b) in enumerate(zip(starts, ends)):
            t = np.clip(np.dot(p - a, b - a) / np.dot(b - a, b - a), 0.0, 1.0)
            assert distances[n, m] == pytest.approx(np.linalg.norm(p - (a + t * (b - a))))


def test_body_samples_lie_on_the_body(skeleton, standing):
    body = body_geometry(standing, skeleton)
    samples = body_samples(body, 0.04)
    gaps = segment_distances(samples, body.starts, body.ends) - body.radii
    assert np.all(gaps.min(axis=1) <= 1e-9)


def test_body_samples_reject_bad_spacing(skeleton, standing):
    with pytest.raises(ValidationError):
        body_samples(body_geometry(standing, skeleton), 0.0)


def _tree(parents):
    j = len(parents)
    return Skeleton(parents=parents, offsets=np.zeros((j, 3)), radii=np.ones(j), landmarks={n: 0 for n in LANDMARKS})


def test_skeleton_accepts_parents_before_children():
    assert _tree([-1, 0, 1, 0]).chain(2) == [0, 1, 2]


@pytest.mark.parametrize(
    "parents, message",
    [
        ([1, -1, 1], "reorder the joints as [1, 0, 2]"),
        ([-1, 2, 0], "reorder the joints as [0, 2, 1]"),
        ([-1, 2, 1], "parent cycle"),
        ([-1, -1], "exactly one root"),
        ([-1, 5], "invalid parent"),
    ],
)
def test_skeleton_rejects_bad_joint_trees(parents, message):
    with pytest.raises(ValidationError) as info:
        _tree(parents)
    assert message in info.value.message

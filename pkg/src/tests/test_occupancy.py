import numpy as np
import pytest

from core.exceptions import DimensionMismatchError, NoFreeVoxelError, ValidationError
from domain.body import body_samples, segment_distances
from domain.metrics import penetrated_voxels, penetration_counts
from domain.occupancy import (
    BpsBasis,
    bps_encode,
    build_mob,
    crop_grid,
    hide_ceiling,
    lattice_cells,
    nearest_free_voxel,
    occupied_centers,
    occupied_centers_in,
    sample_canonical_occupancy,
    sample_spacing,
    sdf_to_occupancy,
    sequence_bodies,
    voxelize_motion,
)
from domain.providers import (
    BoxesProvider,
    EmptyProvider,
    FrozenProvider,
    HalfSpaceProvider,
    RevolvingDoor,
    ScheduledSwap,
    StaticGridProvider,
    TransformedProvider,
)
from domain.synthetic import generate_motion
from models.frame import CanonicalFrame
from models.grid import Lattice, OccupancyGrid, SdfGrid
from models.motion import MotionSequence
from models.params import CanonicalOccupancyConfig
from models.synthetic import MotionKind, SyntheticMotionSpec


def test_voxelized_motion_contains_every_body_sample(walk_line):
    grid = voxelize_motion(walk_line, 0.08)
    lattice = grid.lattice
    for body in sequence_bodies(walk_line):
        cells = lattice.cells(body_samples(body, sample_spacing(0.08)))
        assert np.all(grid.inside(cells))
        assert np.all(grid.voxels[cells[:, 0], cells[:, 1], cells[:, 2]])


def test_voxelized_cells_touch_the_body(walk_line):
    unit = 0.08
    grid = voxelize_motion(walk_line, unit, margin=2)
    centers = grid.occupied_centers()
    gaps = np.full(len(centers), np.inf)
    for body in sequence_bodies(walk_line):
        gaps = np.minimum(gaps, (segment_distances(centers, body.starts, body.ends) - body.radii).min(axis=1))
    assert np.all(gaps <= np.sqrt(3.0) / 2.0 * unit + 1e-9)


def test_voxelized_origin_is_snapped(walk_line):
    grid = voxelize_motion(walk_line, 0.1, margin=1)
    assert np.allclose(grid.origin / 0.1, np.round(grid.origin / 0.1))
    # the margin layer past the last marked cell stays free
    assert not grid.voxels[-1].any() and not grid.voxels[:, -1].any() and not grid.voxels[:, :, -1].any()


@pytest.mark.parametrize("kind", [MotionKind.WALK, MotionKind.TURN, MotionKind.CRAWL, MotionKind.SIT])
def test_motion_never_penetrates_its_own_pseudo_scene(skeleton, kind):
    seq = generate_motion(SyntheticMotionSpec(kind=kind, duration=0.4, seed=1), skeleton)
    mob = build_mob(seq, 0.08)
    counts = penetration_counts(seq.frames, skeleton, StaticGridProvider(mob), seq.fps)
    assert np.all(counts == 0)
    assert mob.occupied_count > 0


def test_pseudo_scene_is_the_complement(walk_line):
    occupied = voxelize_motion(walk_line, 0.08)
    mob = build_mob(walk_line, 0.08)
    assert mob.same_layout(occupied)
    assert np.array_equal(mob.voxels, ~occupied.voxels)
    assert mob.occupied_count + occupied.occupied_count == mob.total


def test_voxelization_is_thread_independent(walk_line):
    assert voxelize_motion(walk_line, 0.08, threads=1).equals(voxelize_motion(walk_line, 0.08, threads=3))


def test_voxelize_rejects_bad_unit(walk_line):
    with pytest.raises(ValidationError):
        voxelize_motion(walk_line, 0.0)


def _world_cells(grid: OccupancyGrid) -> set:
    shift = np.rint(grid.origin / grid.unit).astype(np.int64)
    return {tuple(cell) for cell in np.argwhere(grid.voxels) + shift}


def test_voxelized_motion_grows_with_the_sequence(walk_line):
    full = _world_cells(voxelize_motion(walk_line, 0.08))
    sizes = []
    for length in (1, 3, 5):
        prefix = MotionSequence(walk_line.skeleton, walk_line.frames[:length], walk_line.fps, walk_line.name)
        cells = _world_cells(voxelize_motion(prefix, 0.08))
        assert cells and cells <= full
        sizes.append(len(cells))
    assert sizes == sorted(sizes) and sizes[0] < len(full)


def test_nearest_free_voxel_matches_brute_force(make_grid, rng):
    for _ in range(10):
        grid = make_grid(side=6, fill=0.6)
        if grid.occupied_count == grid.total:
            continue
        free = np.argwhere(~grid.voxels)
        centers = grid.centers(free)
        linear = grid.linear_index(free)
        for point in rng.uniform(grid.origin - 0.2, grid.upper + 0.2, size=(20, 3)):
            d = np.linalg.norm(centers - point, axis=1)
            best = np.flatnonzero(d == d.min())
            expected = centers[best[np.argmin(linear[best])]]
            assert np.array_equal(nearest_free_voxel(point, grid), expected)


def test_nearest_free_voxel_prefers_lowest_index_on_ties():
    voxels = np.zeros((3, 1, 1), dtype=bool)
    voxels[1] = True
    grid = OccupancyGrid(voxels, (0.0, 0.0, 0.0), 1.0)
    assert np.allclose(nearest_free_voxel([1.5, 0.5, 0.5], grid), [0.5, 0.5, 0.5])


def test_full_grid_has_no_free_voxel():
    grid = OccupancyGrid(np.ones((2, 2, 2), dtype=bool), (0.0, 0.0, 0.0), 0.1)
    with pytest.raises(NoFreeVoxelError):
        nearest_free_voxel([0.0, 0.0, 0.0], grid)


def test_frozen_provider_ignores_time(rng):
    door = RevolvingDoor()
    frozen = FrozenProvider(door, at=2.0)
    points = rng.uniform([-2.0, -2.0, 0.0], [2.0, 2.0, 2.0], size=(500, 3))
    assert np.array_equal(frozen.is_occupied(points, 7.0), door.is_occupied(points, 2.0))
    assert not np.array_equal(door.is_occupied(points, 0.0), door.is_occupied(points, 2.0))


def test_swap_switches_providers_at_the_switch_time(rng):
    door = RevolvingDoor()
    swap = ScheduledSwap(EmptyProvider(), door, switch_time=1.0)
    points = rng.uniform([-2.0, -2.0, 0.0], [2.0, 2.0, 2.0], size=(500, 3))
    assert not swap.is_occupied(points, 0.99).any()
    assert np.array_equal(swap.is_occupied(points, 1.0), door.is_occupied(points, 1.0))
    assert np.array_equal(swap.is_occupied(points, 3.0), door.is_occupied(points, 3.0))
    assert len(swap.occupied_centers(0.5, (-2.0, -2.0, 0.0), (2.0, 2.0, 2.0))) == 0
    assert not swap.is_empty and not swap.is_static


def test_swap_counts_voxels_on_the_active_lattice(skeleton, standing):
    full = StaticGridProvider(OccupancyGrid(np.ones((40, 40, 48), dtype=bool), (-1.0, -1.0, -0.2), 0.05))
    swap = ScheduledSwap(EmptyProvider(), full, switch_time=0.0)
    assert swap.lattice_at(0.0).unit == 0.05
    assert swap.lattice_at(-1.0).unit == EmptyProvider().unit
    expected = penetrated_voxels(standing, skeleton, full, 0.0)
    assert expected > 0
    assert penetrated_voxels(standing, skeleton, swap, 0.0) == expected
    late = ScheduledSwap(EmptyProvider(), full, switch_time=1.0)
    assert penetrated_voxels(standing, skeleton, late, 0.5) == 0
    assert penetrated_voxels(standing, skeleton, late, 1.0) == expected
    assert late.snapshot(1.0, (0.0, 0.0, 0.0), (0.2, 0.2, 0.2)).unit == 0.05


def test_static_snapshot_reproduces_the_grid(make_grid):
    grid = make_grid()
    snapshot = StaticGridProvider(grid).snapshot(0.0, grid.origin + 0.5 * grid.unit, grid.upper - 0.5 * grid.unit)
    assert snapshot.equals(grid)


def test_empty_scene_gives_empty_canonical_occupancy():
    cfg = CanonicalOccupancyConfig()
    c_o = sample_canonical_occupancy(EmptyProvider(), CanonicalFrame(), 0.0, cfg, 0.9)
    assert c_o.bits.shape == (25, 25, 25)
    assert c_o.count == 0
    assert len(occupied_centers(c_o)) == 0


def test_ground_fills_the_bottom_layer():
    cfg = CanonicalOccupancyConfig()
    c_o = sample_canonical_occupancy(HalfSpaceProvider(), CanonicalFrame(3.0, -1.0, 0.7), 0.0, cfg, 0.9)
    assert c_o.bits[:, :, 0].all()
    assert c_o.count == 625
    assert np.allclose(occupied_centers(c_o)[:, 2], 0.9 - 12 * 0.08)


def test_canonical_occupancy_is_rotation_invariant():
    cfg = CanonicalOccupancyConfig()
    box = BoxesProvider((((0.3, -0.2, 0.0), (0.95, 0.5, 1.0)),))
    reference = sample_canonical_occupancy(box, CanonicalFrame(0.0, 0.0, 0.0), 0.0, cfg, 0.9)
    turned = sample_canonical_occupancy(
        TransformedProvider(box, yaw=np.pi / 2), CanonicalFrame(0.0, 0.0, np.pi / 2), 0.0, cfg, 0.9
    )
    assert reference.count > 0
    assert np.array_equal(reference.bits, turned.bits)
    assert reference.digest() == turned.digest()


def test_occupied_centers_map_back_to_occupied_points():
    cfg = CanonicalOccupancyConfig()
    box = BoxesProvider((((0.3, -0.2, 0.0), (0.95, 0.5, 1.0)),))
    frame = CanonicalFrame(0.0, 0.0, 0.0)
    c_o = sample_canonical_occupancy(box, frame, 0.0, cfg, 0.9)
    centers = occupied_centers(c_o, cfg)
    assert len(centers) == c_o.count
    assert box.is_occupied(frame.points_to_world(centers)).all()


def test_conservative_sampling_is_a_superset():
    box = BoxesProvider((((0.3, -0.2, 0.0), (0.95, 0.5, 1.0)),))
    frame = CanonicalFrame(0.0, 0.0, 0.3)
    plain = sample_canonical_occupancy(box, frame, 0.0, CanonicalOccupancyConfig(), 0.9)
    wide = sample_canonical_occupancy(box, frame, 0.0, CanonicalOccupancyConfig(conservative=True), 0.9)
    assert np.all(wide.bits[plain.bits])
    assert wide.count > plain.count


def test_sdf_threshold():
    values = np.ones((20, 20, 20), dtype=np.float32)
    values[5:15, 5:15, 5:15] = -0.5
    grid = sdf_to_occupancy(SdfGrid(values, (0.0, 0.0, 0.0), 0.05))
    assert grid.occupied_count == 1000
    assert grid.dims == (20, 20, 20)


@pytest.mark.parametrize("value, expected", [(1.0, 0), (0.0, 27), (-np.inf, 27), (np.inf, 0)])
def test_sdf_constant_volumes(value, expected):
    sdf = SdfGrid(np.full((3, 3, 3), value, dtype=np.float32), (0.0, 0.0, 0.0), 0.1)
    assert sdf_to_occupancy(sdf).occupied_count == expected


def test_sdf_dims_mismatch():
    sdf = SdfGrid(np.zeros((3, 3, 3), dtype=np.float32), (0.0, 0.0, 0.0), 0.1)
    with pytest.raises(DimensionMismatchError):
        sdf_to_occupancy(sdf, expected_dims=(3, 3, 4))


def test_bps_basis_is_reproducible():
    a, b = BpsBasis.sample(64, seed=3), BpsBasis.sample(64, seed=3)
    assert np.array_equal(a.points, b.points)
    assert np.all(np.linalg.norm(a.points, axis=1) <= 1.0)


def test_bps_of_empty_scene_is_capped():
    encoding = bps_encode(EmptyProvider(), CanonicalFrame(), 0.0, BpsBasis.sample(32), radius=1.0, height=1.0)
    assert np.allclose(encoding, 2.0)


def test_bps_distances_to_ground():
    basis = BpsBasis.sample(128, seed=5)
    height = 1.2
    encoding = bps_encode(HalfSpaceProvider(), CanonicalFrame(0.4, 0.2, 1.0), 0.0, basis, 1.0, height)
    clearance = basis.points[:, 2] + height + 0.04
    assert np.all(encoding >= np.minimum(clearance, 2.0) - 1e-9)
    assert np.all(encoding <= np.minimum(np.sqrt(clearance**2 + 2 * 0.04**2), 2.0) + 1e-9)


def test_crop_grid():
    rng = np.random.default_rng(11)
    grid = OccupancyGrid(rng.uniform(size=(6, 5, 4)) < 0.5, (0.0, 0.0, 0.0), 0.1)
    cropped = crop_grid(grid, (0.15, 0.05, 0.0), (0.35, 0.25, 0.15))
    assert np.array_equal(cropped.voxels, grid.voxels[1:4, 0:3, 0:2])
    assert np.allclose(cropped.origin, [0.1, 0.0, 0.0])
    with pytest.raises(ValidationError):
        crop_grid(grid, (5.0, 5.0, 5.0), (6.0, 6.0, 6.0))


def test_hide_ceiling():
    grid = OccupancyGrid(np.ones((4, 4, 4), dtype=bool), (0.0, 0.0, 0.0), 0.5)
    lowered = hide_ceiling(grid, 1.0)
    assert lowered.occupied_count == 32
    assert not lowered.voxels[:, :, 2:].any()


def test_lattice_cells_are_distinct():
    lattice = Lattice((0.0, 0.0, 0.0), 0.08)
    cells = lattice_cells([[0.01, 0.01, 0.01], [0.02, 0.03, 0.04], [0.09, 0.0, 0.0]], lattice)
    assert cells.tolist() == [[0, 0, 0], [1, 0, 0]]
    assert lattice_cells(np.zeros((0, 3)), lattice).shape == (0, 3)


def test_occupied_centers_in_box(make_grid):
    grid = make_grid(fill=0.5)
    centers = occupied_centers_in(StaticGridProvider(grid), 0.0, grid.origin, grid.upper)
    assert len(centers) == grid.occupied_count
    assert grid.is_occupied(centers).all()

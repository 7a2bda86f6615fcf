import json

import numpy as np
import pytest

from core.exceptions import ConfigError, GridFormatError, MotionFormatError, UnknownFormatError
from domain.controller import ZeroVelocityPolicy
from domain.providers import EmptyProvider
from domain.rollout import rollout
from domain.scenarios import standing_target
from infrastructure.storage.episode_io import (
    dump_episode,
    is_episode_file,
    parse_episode,
    parse_episode_config,
    read_episode,
    read_episode_config,
    write_episode,
)
from infrastructure.storage.export import (
    check_format,
    export_grid,
    export_tracks,
    render_obj,
    render_ply,
    voxel_mesh,
)
from infrastructure.storage.files import atomic_write_text, sha256_bytes, sha256_file
from infrastructure.storage.grid_codec import (
    GRID_MAGIC,
    SDF_MAGIC,
    decode_grid,
    encode_grid,
    read_grid,
    read_sdf,
    sniff_magic,
    write_grid,
    write_sdf,
)
from infrastructure.storage.motion_io import dump_motion, motion_from_dict, motion_to_dict, read_motion, write_motion
from models.control import TargetEvent
from models.grid import OccupancyGrid, SdfGrid

HEADER_BYTES = 50

EPISODE_TEXT = """\
# walk across the room
name = across
duration = 4
seed = 7
initial = 0.5, 1.0, 90
provider = static:room.mobg
target = 0; 3,1,0.9; -; -; 3,1.1,0.04; 3,0.9,0.04; 45
target_pose = 2.5; 1.0, 2.0, 180
"""


def test_grid_file_layout(tmp_path):
    grid = OccupancyGrid(np.array([True, False, True]).reshape(3, 1, 1), (1.0, -2.0, 0.5), 0.08)
    payload = encode_grid(grid)
    assert payload[:4] == GRID_MAGIC
    assert len(payload) == HEADER_BYTES + 1
    assert payload[-1] == 0b101
    path = write_grid(tmp_path / "g.mobg", grid)
    assert read_grid(path).equals(grid)
    assert sniff_magic(path) == GRID_MAGIC


def test_grid_linear_order_is_x_fastest(make_grid):
    grid = make_grid(side=9, fill=0.4)
    back = decode_grid(encode_grid(grid))
    assert back.equals(grid)
    bits = np.unpackbits(np.frombuffer(encode_grid(grid)[HEADER_BYTES:], dtype=np.uint8), bitorder="little")
    cells = grid.occupied_cells()
    assert np.array_equal(np.flatnonzero(bits[: grid.total]), grid.linear_index(cells))


@pytest.mark.parametrize(
    "corrupt",
    [
        lambda b: b"XXXX" + b[4:],
        lambda b: b[:4] + (9).to_bytes(2, "little") + b[6:],
        lambda b: b[:-1],
        lambda b: b[:20],
    ],
)
def test_corrupt_grid_files(tmp_path, make_grid, corrupt):
    path = tmp_path / "bad.mobg"
    path.write_bytes(corrupt(encode_grid(make_grid(side=9))))
    with pytest.raises(GridFormatError):
        read_grid(path)


def test_missing_grid_file(tmp_path):
    with pytest.raises(GridFormatError):
        read_grid(tmp_path / "absent.mobg")


def test_sdf_file(tmp_path, rng):
    sdf = SdfGrid(rng.normal(size=(4, 3, 2)).astype(np.float32), (0.0, 1.0, 2.0), 0.05)
    path = write_sdf(tmp_path / "s.msdf", sdf)
    back = read_sdf(path)
    assert sniff_magic(path) == SDF_MAGIC
    assert np.array_equal(back.values, sdf.values)
    assert back.dims == (4, 3, 2) and back.unit == 0.05
    with pytest.raises(GridFormatError):
        read_grid(path)


def test_motion_file(tmp_path, walk_line):
    path = write_motion(tmp_path / "m.json", walk_line)
    back = read_motion(path)
    assert back.name == "line" and back.fps == 30.0
    assert len(back) == len(walk_line)
    assert all(a.equals(b) for a, b in zip(back.frames, walk_line.frames))
    assert dump_motion(back) == dump_motion(walk_line)


def test_motion_without_contacts_or_name(tmp_path, walk_line):
    document = motion_to_dict(walk_line, include_skeleton=False)
    del document["name"]
    for frame in document["frames"]:
        del frame["foot_contact"]
    path = tmp_path / "unnamed.json"
    path.write_text(json.dumps(document))
    back = read_motion(path)
    assert back.name == "unnamed"
    assert [pose.foot_contact for pose in back.frames] == [pose.foot_contact for pose in walk_line.frames]


def test_motion_in_the_plain_layout(tmp_path, walk_line):
    skeleton = walk_line.skeleton.to_dict()
    del skeleton["names"]
    document = {
        "skeleton": skeleton,
        "fps": 30,
        "frames": [
            {"root_pos": p.root_position.tolist(), "root_rot6d": p.root_rot6d.tolist(), "joint_rot6d": p.joint_rot6d.tolist()}
            for p in walk_line.frames
        ],
    }
    path = tmp_path / "plain.json"
    path.write_text(json.dumps(document))
    back = read_motion(path)
    assert back.name == "plain" and back.fps == 30.0
    assert all(a.equals(b) for a, b in zip(back.frames, walk_line.frames))
    assert np.array_equal(back.skeleton.parents, walk_line.skeleton.parents)
    assert motion_to_dict(back)["frames"][0]["root_pos"] == walk_line.frames[0].root_position.tolist()


def test_motion_reads_the_long_root_key(walk_line):
    document = motion_to_dict(walk_line)
    for frame in document["frames"]:
        frame["root_position"] = frame.pop("root_pos")
    back = motion_from_dict(document)
    assert all(a.equals(b) for a, b in zip(back.frames, walk_line.frames))


@pytest.mark.parametrize(
    "text",
    [
        "{not json",
        '{"format": "other", "version": 1}',
        '{"version": 2, "frames": []}',
        "[1, 2, 3]",
        '{"format": "occu-motion", "version": 1, "fps": 30, "frames": [{"root_position": [0, 0, 0]}]}',
        '{"fps": 30, "frames": [{"root_pos": [0, 0, 0], "root_rot6d": [1, 0, 0, 0, 1, 0]}]}',
        '{"format": "occu-motion", "version": 1, "fps": 30, "frames": []}',
    ],
)
def test_malformed_motion_files(tmp_path, text):
    path = tmp_path / "bad.json"
    path.write_text(text)
    with pytest.raises(MotionFormatError):
        read_motion(path)


def test_episode_config_parsing():
    config = parse_episode_config(EPISODE_TEXT)
    assert config.name == "across" and config.duration == 4.0 and config.seed == 7
    assert (config.initial.x, config.initial.y, config.initial.yaw_deg) == (0.5, 1.0, 90.0)
    assert config.provider == "static:room.mobg"
    target = config.targets[0]
    assert target.points[1] is None and target.points[2] is None
    assert target.points[3] == (3.0, 1.1, 0.04)
    assert target.yaw_deg == 45.0
    assert config.target_poses[0].time == 2.5 and config.target_poses[0].yaw_deg == 180.0


@pytest.mark.parametrize(
    "text, line",
    [
        ("name = a\nspeed = 3\n", 2),
        ("name = a\nname = b\n", 2),
        ("duration = -1\n", 1),
        ("\n\ntarget = 0; 1,2,3; -; -\n", 3),
        ("name = a\ntarget_pose = -1; 0, 0, 0\n", 2),
        ("initial = 1, 2\n", 1),
        ("just words\n", 1),
    ],
)
def test_episode_config_errors_carry_line_numbers(text, line):
    with pytest.raises(ConfigError) as info:
        parse_episode_config(text, "ep.txt")
    assert info.value.line == line
    assert info.value.exit_code == 1


def test_episode_config_from_file(tmp_path):
    path = tmp_path / "ep.txt"
    path.write_text(EPISODE_TEXT)
    assert read_episode_config(path).name == "across"
    with pytest.raises(ConfigError):
        read_episode_config(tmp_path / "missing.txt")


def test_episode_result_file(tmp_path, skeleton, standing):
    schedule = [TargetEvent(0.0, standing_target(skeleton, 1.0, 0.0)), TargetEvent(0.2, None)]
    result = rollout(ZeroVelocityPolicy(), standing, EmptyProvider(), schedule, 0.4, seed=5, skeleton=skeleton)
    path = write_episode(tmp_path / "e.jsonl", result)
    assert is_episode_file(path)
    back = read_episode(path)
    assert back.seed == 5 and back.provider == "empty" and len(back) == 4
    assert back.schedule[1].target is None
    assert np.allclose(back.joint_positions(), result.joint_positions())
    assert dump_episode(back) == dump_episode(result)


def test_episode_frame_count_is_checked(skeleton, standing):
    result = rollout(ZeroVelocityPolicy(), standing, EmptyProvider(), [], 0.3, skeleton=skeleton)
    text = dump_episode(result)
    truncated = "\n".join(text.splitlines()[:-1]) + "\n"
    with pytest.raises(MotionFormatError):
        parse_episode(truncated)
    with pytest.raises(MotionFormatError):
        parse_episode("")


def test_other_files_are_not_episodes(tmp_path, walk_line):
    assert not is_episode_file(write_motion(tmp_path / "m.json", walk_line))
    assert not is_episode_file(tmp_path / "absent.jsonl")


def test_voxel_mesh_counts():
    voxels = np.zeros((3, 3, 3), dtype=bool)
    voxels[0, 0, 0] = voxels[2, 1, 0] = True
    grid = OccupancyGrid(voxels, (0.0, 0.0, 0.0), 0.5)
    mesh = voxel_mesh(grid)
    assert mesh.vertices.shape == (16, 3) and mesh.faces.shape == (24, 3)
    assert np.allclose(mesh.vertices.min(axis=0), [0.0, 0.0, 0.0])
    assert np.allclose(mesh.vertices.max(axis=0), [1.5, 1.0, 0.5])
    ply = render_ply(mesh)
    assert "element vertex 16" in ply and "element face 24" in ply
    obj = render_obj(mesh).splitlines()
    assert sum(line.startswith("v ") for line in obj) == 16
    assert sum(line.startswith("f ") for line in obj) == 24


def test_empty_grid_mesh():
    assert "element vertex 0" in render_ply(voxel_mesh(OccupancyGrid.empty((2, 2, 2))))


def test_exports(tmp_path, make_grid):
    grid = make_grid(fill=0.5)
    document = json.loads(export_grid(tmp_path / "g.json", grid, "JSON").read_text())
    assert document["dims"] == list(grid.dims)
    assert len(document["occupied"]) == grid.occupied_count
    tracks = {"root": np.zeros((4, 3)), "left_hand": np.ones((4, 3))}
    ply = export_tracks(tmp_path / "t.ply", tracks, 10.0, "ply").read_text()
    assert "element edge 6" in ply
    obj = export_tracks(tmp_path / "t.obj", tracks, 10.0, "obj").read_text()
    assert obj.count("\nl ") == 2


def test_unknown_export_format(tmp_path, make_grid):
    with pytest.raises(UnknownFormatError):
        check_format("stl")
    with pytest.raises(UnknownFormatError):
        export_grid(tmp_path / "g.stl", make_grid(), "stl")


def test_atomic_write_creates_directories(tmp_path):
    path = atomic_write_text(tmp_path / "a" / "b" / "c.txt", "hello\n")
    assert path.read_text() == "hello\n"
    assert sha256_file(path) == sha256_bytes(b"hello\n")
    assert [p.name for p in path.parent.iterdir()] == ["c.txt"]

"""
Episode configuration files and episode result files.

This module provides:
- parse_episode_config / read_episode_config: plain `key = value` episode files
- write_episode / read_episode: JSON-lines results (header line, then one line per frame)

Episode file keys: name, duration, seed, rate, initial (x, y, yaw_deg),
provider, grid, regulation, occupancy, occupancy_encoding, and the
repeatable `target = t; x,y,z; x,y,z; -; x,y,z; x,y,z[; yaw_deg]` and
`target_pose = t; x, y, yaw_deg`. A `-` marks an absent target point.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import ValidationError as PydanticValidationError

from core.config import read_key_values
from core.exceptions import ConfigError, MotionFormatError
from infrastructure.storage.files import atomic_write_text
from infrastructure.storage.motion_io import skeleton_from_dict
from models.control import TARGET_POINTS, TargetEvent, TargetSpec
from models.episode import EpisodeConfig, EpisodeResult, FrameRecord
from models.motion import Pose

logger = logging.getLogger(__name__)

EPISODE_FORMAT = "occu-episode"
EPISODE_VERSION = 1

_REPEATED = {"target": "targets", "target_pose": "target_poses"}
_SCALARS = {
    "name",
    "duration",
    "seed",
    "rate",
    "initial",
    "provider",
    "grid",
    "regulation",
    "occupancy",
    "occupancy_encoding",
}


def _floats(text: str, count: int, what: str, path: str, line: int) -> List[float]:
    parts = [part.strip() for part in text.split(",")]
    if len(parts) != count:
        raise ConfigError(f"{what} needs {count} comma-separated numbers, got '{text}'", path, line)
    try:
        return [float(part) for part in parts]
    except ValueError:
        raise ConfigError(f"{what} has a non-numeric entry: '{text}'", path, line)


def _target_entry(value: str, path: str, line: int) -> Dict[str, Any]:
    fields = [part.strip() for part in value.split(";")]
    if len(fields) not in (TARGET_POINTS + 1, TARGET_POINTS + 2):
        raise ConfigError(
            f"target needs 'time; {TARGET_POINTS} points[; yaw_deg]', got {len(fields)} fields", path, line
        )
    time = _floats(fields[0], 1, "target time", path, line)[0]
    points: List[Optional[List[float]]] = []
    for field in fields[1 : TARGET_POINTS + 1]:
        points.append(None if field == "-" else _floats(field, 3, "target point", path, line))
    entry: Dict[str, Any] = {"time": time, "points": points}
    if len(fields) == TARGET_POINTS + 2:
        entry["yaw_deg"] = _floats(fields[-1], 1, "target yaw", path, line)[0]
    return entry


def _target_pose_entry(value: str, path: str, line: int) -> Dict[str, Any]:
    fields = [part.strip() for part in value.split(";")]
    if len(fields) != 2:
        raise ConfigError(f"target_pose needs 'time; x, y, yaw_deg', got '{value}'", path, line)
    time = _floats(fields[0], 1, "target_pose time", path, line)[0]
    x, y, yaw_deg = _floats(fields[1], 3, "target_pose placement", path, line)
    return {"time": time, "x": x, "y": y, "yaw_deg": yaw_deg}


def parse_episode_config(text: str, path: str = "<string>") -> EpisodeConfig:
    """
    Raises:
        ConfigError: malformed line, unknown or duplicate key, invalid value
            (reported with its line number)
    """
    values: Dict[str, Any] = {"targets": [], "target_poses": []}
    lines: Dict[Tuple[str, ...], int] = {}
    for section, key, value, number in read_key_values(text, path):
        if section is not None:
            raise ConfigError(f"Episode files have no sections, found [{section}]", path, number)
        if key in _REPEATED:
            entries = values[_REPEATED[key]]
            lines[(_REPEATED[key], str(len(entries)))] = number
            parse = _target_entry if key == "target" else _target_pose_entry
            entries.append(parse(value, path, number))
            continue
        if key not in _SCALARS:
            raise ConfigError(f"Unknown key '{key}'", path, number)
        if (key,) in lines:
            raise ConfigError(f"Duplicate key '{key}' (first set on line {lines[(key,)]})", path, number)
        lines[(key,)] = number
        if key == "initial":
            x, y, yaw_deg = _floats(value, 3, "initial", path, number)
            values[key] = {"x": x, "y": y, "yaw_deg": yaw_deg}
        else:
            values[key] = value

    try:
        return EpisodeConfig(**values)
    except PydanticValidationError as e:
        first = e.errors()[0]
        loc = tuple(str(part) for part in first["loc"])
        line = lines.get(loc[:2]) or lines.get(loc[:1])
        if line is None and loc and loc[0] in ("targets", "target_poses"):
            line = max((n for k, n in lines.items() if k[0] == loc[0]), default=None)
        raise ConfigError(f"{'.'.join(loc) or 'episode'}: {first['msg']}", path, line) from e


def read_episode_config(path: Union[str, Path]) -> EpisodeConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read episode file: {e}", str(path)) from e
    config = parse_episode_config(text, str(path))
    logger.debug(f"Episode {config.name} from {path}: {len(config.targets) + len(config.target_poses)} target events")
    return config


def _nan_to_none(points: np.ndarray) -> List[Optional[List[float]]]:
    return [None if np.isnan(row[0]) else row.tolist() for row in points]


def _schedule_to_json(schedule: List[TargetEvent]) -> List[Dict[str, Any]]:
    return [
        {
            "time": event.time,
            "points": None if event.target is None else _nan_to_none(event.target.points),
            "yaw": None if event.target is None else event.target.yaw,
        }
        for event in schedule
    ]


def _frame_to_json(record: FrameRecord) -> Dict[str, Any]:
    return {
        "index": record.index,
        "time": record.time,
        "root_position": record.pose.root_position.tolist(),
        "root_rot6d": record.pose.root_rot6d.tolist(),
        "joint_rot6d": record.pose.joint_rot6d.tolist(),
        "foot_contact": list(record.pose.foot_contact),
        "joints": record.joints.tolist(),
        "root_velocity": record.root_velocity.tolist(),
        "joint_velocities": record.joint_velocities.tolist(),
        "yaw": record.yaw,
        "yaw_rate": record.yaw_rate,
        "delta_norms": record.delta_norms.tolist(),
        "penetration": record.penetration,
        "occupancy_digest": record.occupancy_digest,
    }


def dump_episode(result: EpisodeResult) -> str:
    header = {
        "format": EPISODE_FORMAT,
        "version": EPISODE_VERSION,
        "name": result.name,
        "rate": result.rate,
        "seed": result.seed,
        "provider": result.provider,
        "frames": len(result.frames),
        "skeleton": result.skeleton.to_dict(),
        "schedule": _schedule_to_json(result.schedule),
    }
    lines = [json.dumps(header, separators=(",", ":"))]
    lines.extend(json.dumps(_frame_to_json(record), separators=(",", ":")) for record in result.frames)
    return "\n".join(lines) + "\n"


def write_episode(path: Union[str, Path], result: EpisodeResult) -> Path:
    return atomic_write_text(path, dump_episode(result))


def _frame_from_json(row: Dict[str, Any]) -> FrameRecord:
    pose = Pose(row["root_position"], row["root_rot6d"], row["joint_rot6d"], tuple(row["foot_contact"]))
    return FrameRecord(
        index=int(row["index"]),
        time=float(row["time"]),
        pose=pose,
        joints=np.asarray(row["joints"], dtype=np.float64),
        root_velocity=np.asarray(row["root_velocity"], dtype=np.float64),
        joint_velocities=np.asarray(row["joint_velocities"], dtype=np.float64),
        yaw=float(row["yaw"]),
        yaw_rate=float(row["yaw_rate"]),
        delta_norms=np.asarray(row["delta_norms"], dtype=np.float64),
        penetration=int(row["penetration"]),
        occupancy_digest=row.get("occupancy_digest", ""),
    )


def _schedule_from_json(rows: List[Dict[str, Any]]) -> List[TargetEvent]:
    return [
        TargetEvent(
            float(row["time"]),
            None if row["points"] is None else TargetSpec.from_points(row["points"], row.get("yaw")),
        )
        for row in rows
    ]


def parse_episode(text: str, path: str = "<string>") -> EpisodeResult:
    """
    Raises:
        MotionFormatError: not an episode file, malformed line or frame count mismatch
    """
    rows = [line for line in text.splitlines() if line.strip()]
    if not rows:
        raise MotionFormatError("Empty episode file", path)
    try:
        header = json.loads(rows[0])
        if header.get("format") != EPISODE_FORMAT:
            raise MotionFormatError(f"Not an {EPISODE_FORMAT} file", path)
        if header.get("version") != EPISODE_VERSION:
            raise MotionFormatError(f"Unsupported version {header.get('version')}", path)
        frames = [_frame_from_json(json.loads(row)) for row in rows[1:]]
        result = EpisodeResult(
            name=header["name"],
            skeleton=skeleton_from_dict(header["skeleton"]),
            rate=float(header["rate"]),
            seed=int(header["seed"]),
            provider=header["provider"],
            schedule=_schedule_from_json(header["schedule"]),
            frames=frames,
        )
    except json.JSONDecodeError as e:
        raise MotionFormatError(f"Invalid JSON line: {e.msg}", path) from e
    except (KeyError, TypeError, ValueError) as e:
        raise MotionFormatError(f"Malformed episode: {e}", path) from e
    if len(frames) != header["frames"]:
        raise MotionFormatError(f"Header announces {header['frames']} frames, found {len(frames)}", path)
    return result


def read_episode(path: Union[str, Path]) -> EpisodeResult:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise MotionFormatError(f"Cannot read episode: {e}", str(path)) from e
    return parse_episode(text, str(path))


def is_episode_file(path: Union[str, Path]) -> bool:
    """True when the first line carries the episode format tag"""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            first = handle.readline()
        return json.loads(first).get("format") == EPISODE_FORMAT
    except (OSError, ValueError, AttributeError):
        return False

"""
Motion JSON files.

{"format": "occu-motion", "version": 1, "name": ..., "fps": ...,
 "skeleton": {...} (optional, default skeleton otherwise),
 "frames": [{"root_pos": [3], "root_rot6d": [6],
             "joint_rot6d": [[6] x joints], "foot_contact": [l, r]}, ...]}

Only "frames" is required. The format tag and version are checked when
present; fps defaults to 30; "root_position" is read as an alias of
"root_pos". Missing foot contact flags are recomputed from the joint heights.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Union

from core.exceptions import BaseOccuException, MotionFormatError
from domain.kinematics import label_foot_contacts
from infrastructure.storage.files import atomic_write_text
from models.motion import MotionSequence, Pose
from models.skeleton import Skeleton, default_skeleton

logger = logging.getLogger(__name__)

MOTION_FORMAT = "occu-motion"
MOTION_VERSION = 1
DEFAULT_FPS = 30.0


def motion_to_dict(seq: MotionSequence, include_skeleton: bool = True) -> Dict[str, Any]:
    document: Dict[str, Any] = {
        "format": MOTION_FORMAT,
        "version": MOTION_VERSION,
        "name": seq.name,
        "fps": seq.fps,
    }
    if include_skeleton:
        document["skeleton"] = seq.skeleton.to_dict()
    document["frames"] = [
        {
            "root_pos": pose.root_position.tolist(),
            "root_rot6d": pose.root_rot6d.tolist(),
            "joint_rot6d": pose.joint_rot6d.tolist(),
            "foot_contact": list(pose.foot_contact),
        }
        for pose in seq.frames
    ]
    return document


def skeleton_from_dict(data: Dict[str, Any]) -> Skeleton:
    return Skeleton(
        parents=data["parents"],
        offsets=data["offsets"],
        radii=data["radii"],
        landmarks=data["landmarks"],
        names=tuple(data.get("names", ())),
    )


def motion_from_dict(document: Dict[str, Any], path: str = "<dict>", contact_height: float = 0.05) -> MotionSequence:
    """
    Raises:
        MotionFormatError: wrong format tag, missing fields or invalid frames
    """
    if not isinstance(document, dict):
        raise MotionFormatError("Motion document must be a JSON object", path)
    if document.get("format", MOTION_FORMAT) != MOTION_FORMAT:
        raise MotionFormatError(f"Not a {MOTION_FORMAT} document", path)
    if document.get("version", MOTION_VERSION) != MOTION_VERSION:
        raise MotionFormatError(f"Unsupported version {document.get('version')}", path)
    try:
        skeleton = skeleton_from_dict(document["skeleton"]) if "skeleton" in document else default_skeleton()
        frames = []
        for frame in document["frames"]:
            root = frame["root_pos"] if "root_pos" in frame else frame["root_position"]
            pose = Pose(root, frame["root_rot6d"], frame["joint_rot6d"])
            if "foot_contact" in frame:
                pose = pose.with_contacts(tuple(frame["foot_contact"]))
            else:
                pose = label_foot_contacts(pose, skeleton, contact_height)
            frames.append(pose)
        return MotionSequence(skeleton, tuple(frames), float(document.get("fps", DEFAULT_FPS)), document.get("name"))
    except KeyError as e:
        raise MotionFormatError(f"Missing field {e}", path) from e
    except (TypeError, ValueError) as e:
        raise MotionFormatError(f"Malformed motion: {e}", path) from e
    except BaseOccuException as e:
        raise MotionFormatError(e.message, path) from e


def dump_motion(seq: MotionSequence) -> str:
    return json.dumps(motion_to_dict(seq), separators=(",", ":")) + "\n"


def write_motion(path: Union[str, Path], seq: MotionSequence) -> Path:
    return atomic_write_text(path, dump_motion(seq))


def read_motion(path: Union[str, Path], contact_height: float = 0.05) -> MotionSequence:
    try:
        document = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise MotionFormatError(f"Cannot read motion: {e}", str(path)) from e
    except json.JSONDecodeError as e:
        raise MotionFormatError(f"Invalid JSON at line {e.lineno}: {e.msg}", str(path)) from e
    seq = motion_from_dict(document, str(path), contact_height)
    if seq.name is None:
        seq = MotionSequence(seq.skeleton, seq.frames, seq.fps, Path(path).stem)
    logger.debug(f"Read motion {path}: {len(seq)} frames at {seq.fps} fps")
    return seq


"""
Capsule skeleton: joint tree, rest offsets, bone radii and named landmarks.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from core.exceptions import ValidationError


LANDMARKS: Tuple[str, ...] = (
    "root",
    "left_shoulder",
    "right_shoulder",
    "left_hip",
    "right_hip",
    "left_hand",
    "right_hand",
    "left_foot",
    "right_foot",
)

# Order of the 5 control points (targets, history end-effectors, success metric)
END_EFFECTORS: Tuple[str, ...] = ("root", "left_hand", "right_hand", "left_foot", "right_foot")

# History keeps only hands and feet
LIMB_ENDS: Tuple[str, ...] = ("left_hand", "right_hand", "left_foot", "right_foot")


def _check_joint_order(parents: np.ndarray) -> None:
    """
    Joints must be stored root first with every parent before its children.

    Raises:
        ValidationError: the parents do not form a single tree, or they do
            but in another order (the message then gives a valid order)
    """
    j = parents.shape[0]
    roots = np.flatnonzero(parents < 0)
    if roots.size != 1:
        raise ValidationError(f"skeleton needs exactly one root (parent -1), got {roots.size}")
    for k in range(j):
        if parents[k] >= j:
            raise ValidationError(f"joint {k} has invalid parent {parents[k]}")

    children: Dict[int, List[int]] = {}
    for k in range(j):
        if parents[k] >= 0:
            children.setdefault(int(parents[k]), []).append(k)
    order = [int(roots[0])]
    for joint in order:
        order.extend(children.get(joint, []))
    if len(order) != j:
        unreachable = sorted(set(range(j)) - set(order))
        raise ValidationError(f"joints {unreachable} are not connected to the root (parent cycle)")

    misplaced = [k for k in range(j) if k != 0 and not 0 <= parents[k] < k]
    if roots[0] != 0 or misplaced:
        raise ValidationError(
            "skeleton joints must be stored root first (joint 0) with every parent before its children; "
            f"reorder the joints as {order}"
        )


@dataclass(frozen=True, eq=False)
class Skeleton:
    """
    Joint tree with rest offsets (m) and a capsule radius per bone.

    Bone k connects parents[k] to joint k and uses radii[k]; the root entry
    of `radii` is unused but must still be positive.
    """

    parents: np.ndarray
    offsets: np.ndarray
    radii: np.ndarray
    landmarks: Dict[str, int]
    names: Tuple[str, ...] = field(default=())

    def __post_init__(self):
        parents = np.array(self.parents, dtype=np.int64)
        offsets = np.array(self.offsets, dtype=np.float64)
        radii = np.array(self.radii, dtype=np.float64)
        j = parents.shape[0]

        if offsets.shape != (j, 3):
            raise ValidationError(f"offsets must have shape ({j}, 3), got {offsets.shape}")
        if radii.shape != (j,):
            raise ValidationError(f"radii must have shape ({j},), got {radii.shape}")
        if not np.all(np.isfinite(offsets)):
            raise ValidationError("offsets must be finite")
        if not np.all(radii > 0):
            raise ValidationError("radii must be positive")

        _check_joint_order(parents)

        missing = [name for name in LANDMARKS if name not in self.landmarks]
        if missing:
            raise ValidationError(f"missing landmarks: {missing}")
        for name, index in self.landmarks.items():
            if not 0 <= int(index) < j:
                raise ValidationError(f"landmark '{name}' points to invalid joint {index}")
        if self.landmarks["root"] != 0:
            raise ValidationError("landmark 'root' must be joint 0")

        for name, value in (("parents", parents), ("offsets", offsets), ("radii", radii)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        object.__setattr__(self, "landmarks", {k: int(v) for k, v in self.landmarks.items()})
        if not self.names:
            object.__setattr__(self, "names", tuple(f"joint_{k}" for k in range(j)))

    @property
    def joint_count(self) -> int:
        return int(self.parents.shape[0])

    @property
    def bones(self) -> np.ndarray:
        """Child joint index of every bone"""
        return np.arange(1, self.joint_count)

    def index(self, landmark: str) -> int:
        return self.landmarks[landmark]

    def indices(self, landmarks: Sequence[str]) -> List[int]:
        return [self.landmarks[name] for name in landmarks]

    def chain(self, joint: int) -> List[int]:
        """Joints from the root down to `joint`"""
        path = [joint]
        while self.parents[path[-1]] >= 0:
            path.append(int(self.parents[path[-1]]))
        return path[::-1]

    def to_dict(self) -> Dict:
        return {
            "parents": self.parents.tolist(),
            "offsets": self.offsets.tolist(),
            "radii": self.radii.tolist(),
            "landmarks": dict(self.landmarks),
            "names": list(self.names),
        }


TORSO_RADIUS = 0.14
LIMB_RADIUS = 0.05
HEAD_RADIUS = 0.10

# name, parent, rest offset, radius of the bone ending at this joint
_DEFAULT_JOINTS = (
    ("pelvis", -1, (0.0, 0.0, 0.0), TORSO_RADIUS),
    ("spine", 0, (0.0, 0.0, 0.20), TORSO_RADIUS),
    ("chest", 1, (0.0, 0.0, 0.25), TORSO_RADIUS),
    ("neck", 2, (0.0, 0.0, 0.15), 0.06),
    ("head", 3, (0.0, 0.0, 0.12), HEAD_RADIUS),
    ("left_shoulder", 2, (0.0, 0.18, 0.10), 0.06),
    ("left_elbow", 5, (0.0, 0.28, 0.0), LIMB_RADIUS),
    ("left_hand", 6, (0.0, 0.25, 0.0), LIMB_RADIUS),
    ("right_shoulder", 2, (0.0, -0.18, 0.10), 0.06),
    ("right_elbow", 8, (0.0, -0.28, 0.0), LIMB_RADIUS),
    ("right_hand", 9, (0.0, -0.25, 0.0), LIMB_RADIUS),
    ("left_hip", 0, (0.0, 0.10, -0.05), 0.09),
    ("left_knee", 11, (0.0, 0.0, -0.42), LIMB_RADIUS),
    ("left_foot", 12, (0.0, 0.0, -0.42), LIMB_RADIUS),
    ("right_hip", 0, (0.0, -0.10, -0.05), 0.09),
    ("right_knee", 14, (0.0, 0.0, -0.42), LIMB_RADIUS),
    ("right_foot", 15, (0.0, 0.0, -0.42), LIMB_RADIUS),
)


def default_skeleton() -> Skeleton:
    """17-joint capsule humanoid, facing +X with its left side on +Y"""
    names = tuple(row[0] for row in _DEFAULT_JOINTS)
    landmarks = {name: names.index(name) for name in LANDMARKS if name != "root"}
    landmarks["root"] = 0
    return Skeleton(
        parents=np.array([row[1] for row in _DEFAULT_JOINTS]),
        offsets=np.array([row[2] for row in _DEFAULT_JOINTS]),
        radii=np.array([row[3] for row in _DEFAULT_JOINTS]),
        landmarks=landmarks,
        names=names,
    )

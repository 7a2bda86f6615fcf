"""
Capsule body volume.

This module provides:
- CapsuleBody built from forward kinematics (one capsule per bone)
- Point containment against the capsule union
- Surface/axis sampling shared by MOB construction and penetration counting
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from core.exceptions import ValidationError
from domain.kinematics import forward_kinematics
from models.motion import Pose
from models.skeleton import Skeleton

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class CapsuleBody:
    """Capsules in world coordinates: axis segment starts[i] -> ends[i], radius radii[i]"""

    starts: np.ndarray
    ends: np.ndarray
    radii: np.ndarray
    joints: Optional[np.ndarray] = None

    def __post_init__(self):
        starts = np.array(self.starts, dtype=np.float64).reshape(-1, 3)
        ends = np.array(self.ends, dtype=np.float64).reshape(-1, 3)
        radii = np.array(self.radii, dtype=np.float64).reshape(-1)
        if not (len(starts) == len(ends) == len(radii)):
            raise ValidationError("Capsule arrays must have equal length")
        if np.any(radii <= 0):
            raise ValidationError("Capsule radii must be positive")
        joints = starts[:0] if self.joints is None else np.array(self.joints, dtype=np.float64).reshape(-1, 3)
        for name, value in (("starts", starts), ("ends", ends), ("radii", radii), ("joints", joints)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    def __len__(self) -> int:
        return len(self.radii)

    @property
    def lengths(self) -> np.ndarray:
        return np.linalg.norm(self.ends - self.starts, axis=1)

    def bounds(self):
        """Axis-aligned (min, max) corners of the capsule union"""
        r = self.radii[:, None]
        lo = np.minimum(self.starts, self.ends) - r
        hi = np.maximum(self.starts, self.ends) + r
        return lo.min(axis=0), hi.max(axis=0)


def body_geometry(pose: Pose, skeleton: Skeleton, joints: Optional[np.ndarray] = None) -> CapsuleBody:
    """One capsule per bone at the forward-kinematics joint positions"""
    p = forward_kinematics(pose, skeleton) if joints is None else joints
    bones = skeleton.bones
    return CapsuleBody(p[skeleton.parents[bones]], p[bones], skeleton.radii[bones], joints=p)


def segment_distances(points, starts, ends) -> np.ndarray:
    """Distance of every point (n, 3) to every segment (m, 3)->(m, 3); shape (n, m)"""
    p = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    a = np.asarray(starts, dtype=np.float64)
    ab = np.asarray(ends, dtype=np.float64) - a
    denom = np.einsum("ij,ij->i", ab, ab)
    ap = p[:, None, :] - a[None, :, :]
    t = np.einsum("nmk,mk->nm", ap, ab)
    t = np.where(denom > 0, t / np.where(denom > 0, denom, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    closest = a[None, :, :] + t[..., None] * ab[None, :, :]
    return np.linalg.norm(p[:, None, :] - closest, axis=-1)


def point_in_body(points, body: CapsuleBody, chunk: int = 4096) -> np.ndarray:
    """True where a point lies within radius of some capsule axis"""
    p = np.asarray(points, dtype=np.float64)
    flat = p.reshape(-1, 3)
    inside = np.zeros(len(flat), dtype=bool)
    if len(body) == 0:
        return inside.reshape(p.shape[:-1])
    for start in range(0, len(flat), chunk):
        block = flat[start:start + chunk]
        d = segment_distances(block, body.starts, body.ends)
        inside[start:start + chunk] = np.any(d <= body.radii[None, :], axis=1)
    return inside.reshape(p.shape[:-1])


def _perpendicular_basis(axis: np.ndarray):
    helper = np.array([1.0, 0.0, 0.0]) if abs(axis[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(axis, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(axis, e1)
    return e1, e2


def _sphere_points(center: np.ndarray, radius: float, spacing: float) -> np.ndarray:
    """Latitude rings covering a sphere with neighbour spacing <= `spacing`"""
    n_lat = max(2, int(np.ceil(np.pi * radius / spacing)))
    points = [center + [0.0, 0.0, radius], center - [0.0, 0.0, radius]]
    for theta in np.linspace(0.0, np.pi, n_lat + 1)[1:-1]:
        ring_r = radius * np.sin(theta)
        n_ring = max(6, int(np.ceil(2.0 * np.pi * ring_r / spacing)))
        phi = np.arange(n_ring) * (2.0 * np.pi / n_ring)
        ring = np.stack(
            [ring_r * np.cos(phi), ring_r * np.sin(phi), np.full(n_ring, radius * np.cos(theta))], axis=1
        )
        points.extend(center + ring)
    return np.asarray(points)


def capsule_samples(start, end, radius: float, spacing: float) -> np.ndarray:
    """Axis points, cylinder rings and endpoint spheres of one capsule"""
    start = np.asarray(start, dtype=np.float64)
    end = np.asarray(end, dtype=np.float64)
    length = float(np.linalg.norm(end - start))
    n_axis = max(1, int(np.ceil(length / spacing)))
    t = np.linspace(0.0, 1.0, n_axis + 1)
    axis_points = start + t[:, None] * (end - start)

    parts = [axis_points, _sphere_points(start, radius, spacing), _sphere_points(end, radius, spacing)]
    if length > 0:
        direction = (end - start) / length
        e1, e2 = _perpendicular_basis(direction)
        n_ring = max(6, int(np.ceil(2.0 * np.pi * radius / spacing)))
        phi = np.arange(n_ring) * (2.0 * np.pi / n_ring)
        ring = radius * (np.cos(phi)[:, None] * e1 + np.sin(phi)[:, None] * e2)
        parts.append((axis_points[:, None, :] + ring[None, :, :]).reshape(-1, 3))
    return np.concatenate(parts, axis=0)


def body_samples(body: CapsuleBody, spacing: float) -> np.ndarray:
    """
    Sample points of the whole body: joints, capsule axes and capsule
    surfaces, with neighbouring samples at most `spacing` apart.
    """
    if spacing <= 0:
        raise ValidationError(f"Sampling spacing must be positive, got {spacing}")
    parts = [body.joints] if len(body.joints) else []
    parts.extend(
        capsule_samples(s, e, r, spacing) for s, e, r in zip(body.starts, body.ends, body.radii)
    )
    if not parts:
        return np.zeros((0, 3))
    return np.concatenate(parts, axis=0)


def capsule_volume(body: CapsuleBody) -> float:
    """Sum of analytic capsule volumes (overlaps counted twice)"""
    r = body.radii
    return float(np.sum(np.pi * r**2 * body.lengths + 4.0 / 3.0 * np.pi * r**3))

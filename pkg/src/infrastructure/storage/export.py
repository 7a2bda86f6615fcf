"""
Mesh and JSON export of grids and trajectories.

Occupied voxels become axis-aligned cubes (8 vertices, 12 triangles each);
voxel (i, j, k) spans origin + [i, i+1) * unit on every axis. Trajectories
become polylines, one per joint track.
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from core.exceptions import UnknownFormatError
from infrastructure.storage.files import atomic_write_text
from models.grid import OccupancyGrid

logger = logging.getLogger(__name__)

EXPORT_FORMATS = ("ply", "obj", "json")

_CORNERS = np.array(
    [[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0], [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]],
    dtype=np.float64,
)
# Outward-facing triangles over _CORNERS
_FACES = np.array(
    [
        [0, 2, 1], [0, 3, 2],
        [4, 5, 6], [4, 6, 7],
        [0, 1, 5], [0, 5, 4],
        [1, 2, 6], [1, 6, 5],
        [2, 3, 7], [2, 7, 6],
        [3, 0, 4], [3, 4, 7],
    ],
    dtype=np.int64,
)  # fmt: skip


class Mesh:
    """Triangle soup plus optional polylines"""

    def __init__(
        self,
        vertices: Optional[np.ndarray] = None,
        faces: Optional[np.ndarray] = None,
        polylines: Optional[List[np.ndarray]] = None,
    ):
        self.vertices = np.zeros((0, 3)) if vertices is None else np.asarray(vertices, dtype=np.float64)
        self.faces = np.zeros((0, 3), dtype=np.int64) if faces is None else np.asarray(faces, dtype=np.int64)
        self.polylines = list(polylines or [])

    def all_vertices(self) -> np.ndarray:
        return np.concatenate([self.vertices, *self.polylines]) if self.polylines else self.vertices

    def edges(self) -> List[Tuple[int, int]]:
        """Consecutive vertex pairs of every polyline, indexed into all_vertices()"""
        edges = []
        start = len(self.vertices)
        for line in self.polylines:
            edges.extend((start + i, start + i + 1) for i in range(len(line) - 1))
            start += len(line)
        return edges


def voxel_mesh(grid: OccupancyGrid) -> Mesh:
    cells = grid.occupied_cells().astype(np.float64)
    if len(cells) == 0:
        return Mesh()
    vertices = grid.origin + (cells[:, None, :] + _CORNERS[None, :, :]) * grid.unit
    faces = _FACES[None, :, :] + 8 * np.arange(len(cells))[:, None, None]
    return Mesh(vertices.reshape(-1, 3), faces.reshape(-1, 3))


def trajectory_mesh(tracks: Sequence[np.ndarray]) -> Mesh:
    return Mesh(polylines=[np.asarray(track, dtype=np.float64) for track in tracks if len(track) > 0])


def _fmt(value: float) -> str:
    return repr(float(value))


def render_ply(mesh: Mesh) -> str:
    vertices = mesh.all_vertices()
    edges = mesh.edges()
    lines = [
        "ply",
        "format ascii 1.0",
        f"element vertex {len(vertices)}",
        "property double x",
        "property double y",
        "property double z",
        f"element face {len(mesh.faces)}",
        "property list uchar int vertex_indices",
    ]
    if edges:
        lines += [f"element edge {len(edges)}", "property int vertex1", "property int vertex2"]
    lines.append("end_header")
    lines.extend(" ".join(_fmt(c) for c in v) for v in vertices)
    lines.extend("3 " + " ".join(str(int(i)) for i in face) for face in mesh.faces)
    lines.extend(f"{a} {b}" for a, b in edges)
    return "\n".join(lines) + "\n"


def render_obj(mesh: Mesh) -> str:
    lines = ["# occumotion export"]
    lines.extend("v " + " ".join(_fmt(c) for c in v) for v in mesh.all_vertices())
    lines.extend("f " + " ".join(str(int(i) + 1) for i in face) for face in mesh.faces)
    start = len(mesh.vertices) + 1
    for line in mesh.polylines:
        lines.append("l " + " ".join(str(start + i) for i in range(len(line))))
        start += len(line)
    return "\n".join(lines) + "\n"


def grid_document(grid: OccupancyGrid) -> Dict:
    return {
        "dims": list(grid.dims),
        "origin": grid.origin.tolist(),
        "unit": grid.unit,
        "occupied": grid.occupied_cells().tolist(),
    }


def trajectory_document(tracks: Dict[str, np.ndarray], rate: float) -> Dict:
    return {"rate": rate, "tracks": {name: np.asarray(track).tolist() for name, track in tracks.items()}}


def check_format(fmt: str) -> str:
    fmt = fmt.lower()
    if fmt not in EXPORT_FORMATS:
        raise UnknownFormatError(fmt, list(EXPORT_FORMATS))
    return fmt


def export_grid(path: Union[str, Path], grid: OccupancyGrid, fmt: str) -> Path:
    """
    Raises:
        UnknownFormatError: format is not ply, obj or json
    """
    fmt = check_format(fmt)
    if fmt == "json":
        text = json.dumps(grid_document(grid), separators=(",", ":")) + "\n"
    else:
        mesh = voxel_mesh(grid)
        text = render_ply(mesh) if fmt == "ply" else render_obj(mesh)
    logger.debug(f"Exporting {grid.occupied_count} voxels as {fmt} to {path}")
    return atomic_write_text(path, text)


def export_tracks(path: Union[str, Path], tracks: Dict[str, np.ndarray], rate: float, fmt: str) -> Path:
    """Polylines per named track (frames x 3)"""
    fmt = check_format(fmt)
    if fmt == "json":
        text = json.dumps(trajectory_document(tracks, rate), separators=(",", ":")) + "\n"
    else:
        mesh = trajectory_mesh(list(tracks.values()))
        text = render_ply(mesh) if fmt == "ply" else render_obj(mesh)
    return atomic_write_text(path, text)

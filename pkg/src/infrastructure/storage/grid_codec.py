"""
Binary grid files.

Layout (little-endian): 4-byte magic, u16 version, 3 x u32 dims,
3 x f64 origin, f64 unit, then the payload in linear-index order
(x fastest). "MOBG" files carry LSB-first packed occupancy bits, "MSDF"
files carry f32 signed distances.
"""

import logging
import struct
from pathlib import Path
from typing import Union

import numpy as np

from core.exceptions import GridFormatError
from infrastructure.storage.files import atomic_write_bytes
from models.grid import OccupancyGrid, SdfGrid

logger = logging.getLogger(__name__)

GRID_MAGIC = b"MOBG"
SDF_MAGIC = b"MSDF"
FORMAT_VERSION = 1

_HEADER = struct.Struct("<4sH3I3dd")


def _header(magic: bytes, dims, origin, unit: float) -> bytes:
    return _HEADER.pack(magic, FORMAT_VERSION, *(int(d) for d in dims), *(float(o) for o in origin), float(unit))


def _read_header(payload: bytes, magic: bytes, path: str):
    if len(payload) < _HEADER.size:
        raise GridFormatError(f"File too short for a header ({len(payload)} bytes)", path)
    found, version, dx, dy, dz, ox, oy, oz, unit = _HEADER.unpack_from(payload)
    if found != magic:
        raise GridFormatError(f"Bad magic {found!r}, expected {magic!r}", path)
    if version != FORMAT_VERSION:
        raise GridFormatError(f"Unsupported version {version}", path)
    if min(dx, dy, dz) < 1 or not unit > 0:
        raise GridFormatError(f"Invalid layout dims=({dx}, {dy}, {dz}) unit={unit}", path)
    return (dx, dy, dz), (ox, oy, oz), unit, payload[_HEADER.size :]


def encode_grid(grid: OccupancyGrid) -> bytes:
    return _header(GRID_MAGIC, grid.dims, grid.origin, grid.unit) + grid.packed()


def decode_grid(payload: bytes, path: str = "<bytes>") -> OccupancyGrid:
    dims, origin, unit, body = _read_header(payload, GRID_MAGIC, path)
    expected = (int(np.prod(dims)) + 7) // 8
    if len(body) != expected:
        raise GridFormatError(f"Payload has {len(body)} bytes, expected {expected}", path)
    return OccupancyGrid.from_packed(dims, origin, unit, body)


def encode_sdf(sdf: SdfGrid) -> bytes:
    values = np.asarray(sdf.values, dtype="<f4").ravel(order="F")
    return _header(SDF_MAGIC, sdf.values.shape, sdf.origin, sdf.unit) + values.tobytes()


def decode_sdf(payload: bytes, path: str = "<bytes>") -> SdfGrid:
    dims, origin, unit, body = _read_header(payload, SDF_MAGIC, path)
    expected = int(np.prod(dims)) * 4
    if len(body) != expected:
        raise GridFormatError(f"Payload has {len(body)} bytes, expected {expected}", path)
    values = np.frombuffer(body, dtype="<f4").reshape(dims, order="F")
    return SdfGrid(values, np.asarray(origin), unit)


def write_grid(path: Union[str, Path], grid: OccupancyGrid) -> Path:
    return atomic_write_bytes(path, encode_grid(grid))


def _read(path: Union[str, Path]) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as e:
        raise GridFormatError(f"Cannot read grid: {e}", str(path)) from e


def read_grid(path: Union[str, Path]) -> OccupancyGrid:
    """
    Raises:
        GridFormatError: unreadable file, wrong magic or version, truncated payload
    """
    grid = decode_grid(_read(path), str(path))
    logger.debug(f"Read grid {path}: dims={grid.dims} unit={grid.unit}")
    return grid


def write_sdf(path: Union[str, Path], sdf: SdfGrid) -> Path:
    return atomic_write_bytes(path, encode_sdf(sdf))


def read_sdf(path: Union[str, Path]) -> SdfGrid:
    return decode_sdf(_read(path), str(path))


def sniff_magic(path: Union[str, Path]) -> bytes:
    """First four bytes of a file"""
    with open(path, "rb") as handle:
        return handle.read(4)

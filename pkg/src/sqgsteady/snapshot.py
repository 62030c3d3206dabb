"""Binary field snapshots.

Layout (little-endian): magic ``SQGF``, u32 version, u32 n, f64 box_length,
u8 kind (0 physical float64 n*n row-major, 1 spectral complex128 stored as
interleaved re/im over the full lattice in FFT order), then the payload.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import SnapshotError
from .spectral import Grid, PhysicalField, SpectralField

MAGIC = b"SQGF"
VERSION = 1
_HEADER = struct.Struct("<4sIIdB")


def encode_snapshot(f: PhysicalField | SpectralField) -> bytes:
    g = f.grid
    if isinstance(f, PhysicalField):
        kind, payload = 0, np.ascontiguousarray(f.values, dtype="<f8")
    else:
        kind, payload = 1, np.ascontiguousarray(f.coeffs, dtype="<c16")
    return _HEADER.pack(MAGIC, VERSION, g.n, g.box_length, kind) + payload.tobytes()


def decode_snapshot(data: bytes, dealias_fraction: float = 2.0 / 3.0):
    if len(data) < _HEADER.size:
        raise SnapshotError(f"truncated header: {len(data)} bytes < {_HEADER.size}")
    magic, version, n, box_length, kind = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise SnapshotError(f"bad magic {magic!r} at offset 0 (expected {MAGIC!r})")
    if version != VERSION:
        raise SnapshotError(
            f"unsupported snapshot version {version} (reader supports {VERSION})")
    if kind not in (0, 1):
        raise SnapshotError(f"unknown field kind {kind} at offset 20")
    itemsize = 8 if kind == 0 else 16
    expected = _HEADER.size + n * n * itemsize
    if len(data) != expected:
        raise SnapshotError(
            f"payload length mismatch: file has {len(data)} bytes, expected {expected}")
    try:
        grid = Grid(n, box_length, dealias_fraction)
    except ValueError as exc:
        raise SnapshotError(f"invalid grid in header: {exc}") from exc
    dtype = "<f8" if kind == 0 else "<c16"
    arr = np.frombuffer(data, dtype=dtype, offset=_HEADER.size).reshape(n, n)
    if kind == 0:
        return PhysicalField(arr.astype(float), grid)
    return SpectralField(arr.astype(complex), grid)


def write_snapshot(f: PhysicalField | SpectralField, path) -> Path:
    path = Path(path)
    try:
        path.write_bytes(encode_snapshot(f))
    except OSError as exc:
        raise SnapshotError(f"cannot write {path}: {exc}") from exc
    return path


def read_snapshot(path, dealias_fraction: float = 2.0 / 3.0):
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise SnapshotError(f"cannot read {path}: {exc}") from exc
    return decode_snapshot(data, dealias_fraction)

import struct

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_coeffs
from sqgsteady.errors import SnapshotError
from sqgsteady.snapshot import decode_snapshot, encode_snapshot, read_snapshot, write_snapshot
from sqgsteady.spectral import PhysicalField, SpectralField, make_grid


@given(seed=st.integers(0, 2 ** 32 - 1), n=st.sampled_from([8, 16, 32]))
def test_spectral_round_trip(seed, n):
    g = make_grid(n)
    f = SpectralField(random_coeffs(g, seed), g)
    back = decode_snapshot(encode_snapshot(f))
    assert isinstance(back, SpectralField)
    np.testing.assert_array_equal(back.coeffs, f.coeffs)
    assert back.grid.n == n and back.grid.box_length == g.box_length


def test_physical_round_trip(tmp_path, grid16):
    v = np.random.default_rng(0).standard_normal((16, 16))
    path = write_snapshot(PhysicalField(v, grid16), tmp_path / "f.sqgf")
    back = read_snapshot(path)
    assert isinstance(back, PhysicalField)
    np.testing.assert_array_equal(back.values, v)


def test_header_layout(grid16):
    data = encode_snapshot(SpectralField.zeros(grid16))
    magic, version, n, L, kind = struct.unpack_from("<4sIIdB", data)
    assert (magic, version, n, kind) == (b"SQGF", 1, 16, 1)
    assert len(data) == 21 + 16 * 16 * 16


@pytest.mark.parametrize("mutate,match", [
    (lambda d: d[:10], "truncated header"),
    (lambda d: b"XXXX" + d[4:], "bad magic"),
    (lambda d: d[:4] + struct.pack("<I", 9) + d[8:], "version 9"),
    (lambda d: d[:20] + b"\x07" + d[21:], "unknown field kind"),
    (lambda d: d[:-8], "payload length mismatch"),
    (lambda d: d[:8] + struct.pack("<I", 12) + d[12:], "payload length mismatch"),
])
def test_corruption_detected(grid16, mutate, match):
    data = encode_snapshot(SpectralField.zeros(grid16))
    with pytest.raises(SnapshotError, match=match) as exc:
        decode_snapshot(mutate(data))
    assert exc.value.exit_code == 4


def test_invalid_grid_in_header():
    data = struct.pack("<4sIIdB", b"SQGF", 1, 6, 1.0, 0) + bytes(6 * 6 * 8)
    with pytest.raises(SnapshotError, match="invalid grid"):
        decode_snapshot(data)


def test_missing_file(tmp_path):
    with pytest.raises(SnapshotError, match="cannot read"):
        read_snapshot(tmp_path / "missing.sqgf")

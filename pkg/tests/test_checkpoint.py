"""Checkpoint format: byte layout and bitwise round trip."""

import struct

import numpy as np
import pytest

from anidiff.checkpoint import CheckpointError, read_checkpoint, write_checkpoint


def test_round_trip_bitwise(tmp_path):
    rng = np.random.default_rng(0)
    dims = (4, 6, 8)
    fields = [
        rng.standard_normal(dims) + 1j * rng.standard_normal(dims)
        for _ in range(3)
    ]
    path = tmp_path / "state.ckpt"
    write_checkpoint(path, dims, 2 * np.pi, 0.125, fields)
    rdims, L, t, rfields = read_checkpoint(path)
    assert rdims == dims
    assert L == 2 * np.pi
    assert t == 0.125
    for a, b in zip(fields, rfields):
        assert a.tobytes() == b.tobytes()


def test_header_bytes(tmp_path):
    dims = (4, 4, 4)
    field = np.zeros(dims, dtype=complex)
    field[1, 2, 3] = 1.0 - 2.0j
    path = tmp_path / "h.ckpt"
    write_checkpoint(path, dims, 1.0, 2.0, [field])
    raw = path.read_bytes()
    assert raw[:4] == b"ADMH"
    assert raw[4] == 1  # version
    assert raw[5] == 1  # field count
    assert struct.unpack("<III", raw[6:18]) == (4, 4, 4)
    assert struct.unpack("<dd", raw[18:34]) == (1.0, 2.0)
    # first-axis-major ordering: flat offset of [1,2,3] is 1*16 + 2*4 + 3
    offset = 34 + 16 * (1 * 16 + 2 * 4 + 3)
    re, im = struct.unpack("<dd", raw[offset:offset + 16])
    assert (re, im) == (1.0, -2.0)
    assert len(raw) == 34 + 16 * 64


def test_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.ckpt"
    path.write_bytes(b"XXXX" + b"\x00" * 40)
    with pytest.raises(CheckpointError):
        read_checkpoint(path)


def test_rejects_truncation(tmp_path):
    dims = (4, 4, 4)
    path = tmp_path / "t.ckpt"
    write_checkpoint(path, dims, 1.0, 0.0, [np.zeros(dims, dtype=complex)])
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(CheckpointError):
        read_checkpoint(path)


def test_rejects_shape_mismatch(tmp_path):
    with pytest.raises(CheckpointError):
        write_checkpoint(tmp_path / "m.ckpt", (4, 4, 4), 1.0, 0.0,
                         [np.zeros((4, 4, 2), dtype=complex)])

"""Binary checkpoint format shared by the field layer and the solver.

Layout: magic "ADMH", u8 version=1, u8 field count, three little-endian u32
dims, f64 box_length, f64 time, then per field n1*n2*n3 complex values as
interleaved little-endian f64 (re, im) in first-axis-major (C) ordering.
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"ADMH"
VERSION = 1
_HEADER = struct.Struct("<4sBBIIIdd")

__all__ = ["write_checkpoint", "read_checkpoint", "CheckpointError"]


class CheckpointError(ValueError):
    """Malformed or inconsistent checkpoint data."""


def write_checkpoint(path, dims, box_length: float, time: float, fields) -> None:
    """Write coefficient cubes to a checkpoint file.

    fields is a sequence of complex arrays, each shaped dims.
    """
    n1, n2, n3 = (int(d) for d in dims)
    fields = list(fields)
    if not 1 <= len(fields) <= 255:
        raise CheckpointError(f"field count {len(fields)} out of range")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, len(fields), n1, n2, n3,
                              float(box_length), float(time)))
        for arr in fields:
            if arr.shape != (n1, n2, n3):
                raise CheckpointError(
                    f"field shape {arr.shape} does not match dims {(n1, n2, n3)}"
                )
            fh.write(np.ascontiguousarray(arr, dtype="<c16").tobytes())


def read_checkpoint(path):
    """Read a checkpoint; returns (dims, box_length, time, list of arrays)."""
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise CheckpointError("truncated header")
        magic, version, nfields, n1, n2, n3, box_length, time = _HEADER.unpack(head)
        if magic != MAGIC:
            raise CheckpointError(f"bad magic {magic!r}")
        if version != VERSION:
            raise CheckpointError(f"unsupported version {version}")
        count = n1 * n2 * n3
        fields = []
        for _ in range(nfields):
            raw = fh.read(16 * count)
            if len(raw) < 16 * count:
                raise CheckpointError("truncated field data")
            arr = np.frombuffer(raw, dtype="<c16").astype(complex).reshape(n1, n2, n3)
            fields.append(arr)
        if fh.read(1):
            raise CheckpointError("trailing bytes after field data")
    return (n1, n2, n3), box_length, time, fields

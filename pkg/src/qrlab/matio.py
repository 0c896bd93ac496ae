"""Matrix import/export: CSV and the QRLB binary format.

QRLB layout: magic ``QRLB`` (4 bytes), u32 n, u32 d, then n*d float64
values, all little-endian, row major.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError

_MAGIC = b"QRLB"
_HEADER = struct.Struct("<4sII")


def write_qrlb(matrix: np.ndarray, path: str | Path) -> None:
    m = np.ascontiguousarray(np.asarray(matrix, dtype=np.float64))
    if m.ndim != 2:
        raise InvalidArgumentError("QRLB stores 2-D matrices, got ndim=%d" % m.ndim)
    n, d = m.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, n, d))
        fh.write(m.astype("<f8").tobytes(order="C"))


def read_qrlb(path: str | Path) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise InvalidArgumentError("truncated QRLB header")
        magic, n, d = _HEADER.unpack(head)
        if magic != _MAGIC:
            raise InvalidArgumentError("bad magic %r, expected %r" % (magic, _MAGIC))
        payload = fh.read(8 * n * d)
    if len(payload) != 8 * n * d:
        raise InvalidArgumentError("truncated QRLB payload")
    return np.frombuffer(payload, dtype="<f8").reshape(n, d).copy()


def write_matrix_csv(matrix: np.ndarray, path: str | Path, header: str | None = None) -> None:
    """Write a matrix as CSV. Default header is ``x1..xd``."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim == 1:
        m = m[:, None]
    if header is None:
        header = ",".join("x%d" % (j + 1) for j in range(m.shape[1]))
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in m:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")

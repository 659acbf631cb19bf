"""Binary checkpoint format for spectral fields.

Layout (little-endian)::

    magic   8 bytes  b"BLWLAB01"
    n_modes u32
    count   u64
    count x { xi: 3 x i32, coeff: 6 x f64 (re, im per component) }

Only lexicographically positive wavevectors are written; the reader fills
in the conjugate partners. Coefficients follow the ``exp(+i xi.x)``
convention of :class:`~blowlab.spectral.SpectralField`.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .spectral import Grid, SpectralField

MAGIC = b"BLWLAB01"
_HEADER = struct.Struct("<8sIQ")
_RECORD = np.dtype([("xi", "<i4", (3,)), ("c", "<f8", (6,))])


class CheckpointError(ValueError):
    pass


def _positive_indices(K: int) -> np.ndarray:
    k = np.arange(-K, K + 1)
    xi = np.stack(np.meshgrid(k, k, k, indexing="ij"), axis=-1).reshape(-1, 3)
    pos = (xi[:, 0] > 0) | ((xi[:, 0] == 0) & (xi[:, 1] > 0)) | (
        (xi[:, 0] == 0) & (xi[:, 1] == 0) & (xi[:, 2] > 0))
    return xi[pos]


def dumps(f: SpectralField) -> bytes:
    K = f.grid.dealias_cutoff
    xi = _positive_indices(K)
    c = f.coeffs[:, xi[:, 0] + K, xi[:, 1] + K, xi[:, 2] + K].T  # (count, 3)
    rec = np.empty(len(xi), dtype=_RECORD)
    rec["xi"] = xi
    rec["c"][:, 0::2] = c.real
    rec["c"][:, 1::2] = c.imag
    return _HEADER.pack(MAGIC, f.grid.n_modes, len(xi)) + rec.tobytes()


def loads(data: bytes) -> SpectralField:
    if len(data) < _HEADER.size:
        raise CheckpointError("truncated checkpoint header")
    magic, n_modes, count = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError(f"bad magic {magic!r}")
    body = data[_HEADER.size:]
    if len(body) != count * _RECORD.itemsize:
        raise CheckpointError(f"expected {count} mode records, found {len(body) / _RECORD.itemsize:g}")
    try:
        grid = Grid(int(n_modes))
    except ValueError as exc:
        raise CheckpointError(f"bad grid size in header: {exc}") from None
    K = grid.dealias_cutoff
    rec = np.frombuffer(body, dtype=_RECORD)
    xi = rec["xi"].astype(np.int64)
    if count and (np.abs(xi).max() > K):
        raise CheckpointError("mode outside the dealias cutoff")
    c = rec["c"][:, 0::2] + 1j * rec["c"][:, 1::2]
    M = grid.cube_size
    cube = np.zeros((3, M, M, M), dtype=np.complex128)
    cube[:, xi[:, 0] + K, xi[:, 1] + K, xi[:, 2] + K] = c.T
    cube[:, -xi[:, 0] + K, -xi[:, 1] + K, -xi[:, 2] + K] = np.conj(c.T)
    return SpectralField(grid, cube)


def write_checkpoint(path, f: SpectralField) -> None:
    Path(path).write_bytes(dumps(f))


def read_checkpoint(path) -> SpectralField:
    return loads(Path(path).read_bytes())

"""Binary checkpoints: a fixed little-endian header followed by the raw
half-spectrum coefficients of theta, u1, u2 (layout in docs/checkpoint.md)."""

from __future__ import annotations

import struct

import numpy as np

from . import spectral as sp
from .solver import MU_PROFILES, FlowState, PhysParams

MAGIC = b"FBSQ1"
HEADER = struct.Struct("<5sIddddqBB")
_DTYPES = {8: np.dtype("<c8"), 16: np.dtype("<c16")}


def write_checkpoint(path, state, params, seed=0, itemsize=16):
    if itemsize not in _DTYPES:
        raise ValueError("itemsize must be 8 (complex64) or 16 (complex128)")
    g = state.grid
    head = HEADER.pack(MAGIC, g.N, g.L, params.alpha, params.epsilon, state.t,
                       int(seed), MU_PROFILES.index(params.mu_profile), itemsize)
    with open(path, "wb") as fh:
        fh.write(head)
        for c in state.arrays():
            fh.write(np.ascontiguousarray(c, dtype=_DTYPES[itemsize]).tobytes())


def read_checkpoint(path):
    """Return (state, params, seed).  kappa is not stored and reads back as 1."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < HEADER.size:
        raise ValueError("truncated checkpoint header")
    magic, n, L, alpha, eps, t, seed, mu_id, itemsize = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    if itemsize not in _DTYPES or mu_id >= len(MU_PROFILES):
        raise ValueError("corrupt checkpoint header")
    grid = sp.Grid(n, L)
    count = grid.shape[0] * grid.shape[1]
    expected = HEADER.size + 3 * count * itemsize
    if len(raw) != expected:
        raise ValueError(f"checkpoint has {len(raw)} bytes, expected {expected}")
    arrs = []
    for i in range(3):
        off = HEADER.size + i * count * itemsize
        a = np.frombuffer(raw, dtype=_DTYPES[itemsize], count=count, offset=off)
        arrs.append(a.astype(np.complex128).reshape(grid.shape))
    params = PhysParams(alpha=alpha, epsilon=eps, mu_profile=MU_PROFILES[mu_id])
    return FlowState.from_arrays(grid, *arrs, t), params, seed

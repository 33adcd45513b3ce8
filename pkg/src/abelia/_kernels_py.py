"""Pure-numpy implementations of the hot kernels (reference and fallback)."""

from __future__ import annotations

import numpy as np


def apply_axes(T: np.ndarray, mats) -> np.ndarray:
    """Apply ``mats[i]`` along axis ``i`` of ``T``: out[..a..] = Σ_b M[a,b] T[..b..]."""
    out = np.asarray(T, dtype=complex)
    for axis, M in enumerate(mats):
        if M is None:
            continue
        out = np.moveaxis(np.tensordot(np.asarray(M, dtype=complex), out, axes=([1], [axis])), 0, axis)
    return np.array(out, order="C")


def count_mismatches(a: np.ndarray, b: np.ndarray, ia: np.ndarray, ib: np.ndarray) -> int:
    """Number of positions k with a[ia[k]] != b[ib[k]]."""
    return int(np.count_nonzero(a[ia] != b[ib]))


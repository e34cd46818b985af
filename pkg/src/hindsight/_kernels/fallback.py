"""Pure-Python / numpy implementations of the hot kernels."""

from __future__ import annotations

import numpy as np

_FNV_OFFSET = 14695981039346656037
_FNV_PRIME = 1099511628211
_MASK64 = (1 << 64) - 1


def fnv1a_counts(tokens: list[bytes], dims: int) -> np.ndarray:
    out = np.zeros(dims, dtype=np.float64)
    for token in tokens:
        h = _FNV_OFFSET
        for byte in token:
            h = ((h ^ byte) * _FNV_PRIME) & _MASK64
        out[h % dims] += 1.0
    return out


def dot_scores(matrix: np.ndarray, query: np.ndarray) -> np.ndarray:
    return matrix @ query

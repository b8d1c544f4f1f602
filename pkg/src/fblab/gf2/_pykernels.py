"""Reference (numpy) implementations of the enumeration kernels.

Each kernel works on a linear map ``{0,1}^n -> {0,1}^k`` given by its
columns packed as integers: ``cols[j]`` has bit ``i`` set iff ``H[i][j] = 1``.
Inputs ``y`` are integers whose bit ``j`` is coordinate ``j``.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def syndrome_table(cols: np.ndarray, n: int) -> np.ndarray:
    """``out[y] = H y`` for every ``y`` in ``[0, 2^n)``."""
    out = np.zeros(1, dtype=np.uint64)
    for j in range(n):
        out = np.concatenate((out, out ^ np.uint64(cols[j])))
    return out


def syndrome_weight_counts(syn: np.ndarray, n: int, k: int) -> np.ndarray:
    """``out[s, w]`` = number of inputs of Hamming weight ``w`` with syndrome ``s``."""
    wt = np.bitwise_count(np.arange(1 << n, dtype=np.uint64)).astype(np.int64)
    flat = syn.astype(np.int64) * (n + 1) + wt
    return np.bincount(flat, minlength=(1 << k) * (n + 1)).reshape(1 << k, n + 1)


def coset_leader_weights(syn: np.ndarray, n: int, k: int) -> np.ndarray:
    """Minimum Hamming weight per syndrome; ``n + 1`` marks an empty coset."""
    wt = np.bitwise_count(np.arange(1 << n, dtype=np.uint64)).astype(np.int32)
    out = np.full(1 << k, n + 1, dtype=np.int32)
    np.minimum.at(out, syn.astype(np.int64), wt)
    return out

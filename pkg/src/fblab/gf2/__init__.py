"""GF(2) matrices and the exhaustive-enumeration kernels used by linear PA.

The kernels come from the compiled ``_kernels`` extension when it was built
and from ``_pykernels`` otherwise; set ``FBLAB_PURE=1`` to force the
fallback. Both produce identical arrays.
"""

from __future__ import annotations

import os

import numpy as np

from .._numeric import GuardError, InputError
from .matrix import (
    BitMatrix,
    dump_bitmatrix,
    inverse,
    load_bitmatrix,
    parse_bitmatrix,
    rref,
    solve_affine,
)

if os.environ.get("FBLAB_PURE") == "1":
    from . import _pykernels as kernels
else:
    try:
        from . import _kernels as kernels
    except ImportError:
        from . import _pykernels as kernels

BACKEND = kernels.BACKEND
MAX_ENUM_BITS = 26


def _check_enum(n: int, k: int):
    if n > MAX_ENUM_BITS:
        raise GuardError(f"enumerating 2^{n} inputs exceeds the limit 2^{MAX_ENUM_BITS}")
    if k > 62:
        raise InputError("kernels support at most 62 output bits")


def syndrome_table(h: BitMatrix) -> np.ndarray:
    """``H y`` for every ``y`` in ``{0,1}^n``, indexed by ``y``."""
    _check_enum(h.cols, h.rows)
    return kernels.syndrome_table(np.array(h.col_ints(), dtype=np.uint64), h.cols)


def syndrome_weight_counts(h: BitMatrix, syn: np.ndarray | None = None) -> np.ndarray:
    """``counts[s, w]``: inputs of weight ``w`` with syndrome ``s``."""
    syn = syndrome_table(h) if syn is None else syn
    return kernels.syndrome_weight_counts(syn, h.cols, h.rows)


def coset_leader_weights(h: BitMatrix, syn: np.ndarray | None = None) -> np.ndarray:
    """Minimum weight in each coset ``{y : H y = s}``."""
    syn = syndrome_table(h) if syn is None else syn
    return kernels.coset_leader_weights(syn, h.cols, h.rows)


__all__ = [
    "BACKEND",
    "BitMatrix",
    "coset_leader_weights",
    "dump_bitmatrix",
    "inverse",
    "kernels",
    "load_bitmatrix",
    "parse_bitmatrix",
    "rref",
    "solve_affine",
    "syndrome_table",
    "syndrome_weight_counts",
]

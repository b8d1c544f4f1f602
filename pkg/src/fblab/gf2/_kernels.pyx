# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled enumeration kernels; same contracts as ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t, int32_t

cnp.import_array()

BACKEND = "compiled"


cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil
    int __builtin_ctzll(unsigned long long) nogil


cdef inline int _popcount(uint64_t x) nogil:
    return __builtin_popcountll(x)


def syndrome_table(cnp.ndarray cols_in, int n):
    """Gray-code walk: each step flips one coordinate, so one XOR per input."""
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] cols = np.ascontiguousarray(cols_in, dtype=np.uint64)
    cdef Py_ssize_t size = (<Py_ssize_t>1) << n
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] out = np.empty(size, dtype=np.uint64)
    cdef uint64_t s = 0, g
    cdef Py_ssize_t i
    cdef int j
    with nogil:
        out[0] = 0
        for i in range(1, size):
            j = __builtin_ctzll(<unsigned long long>i)
            s ^= cols[j]
            g = <uint64_t>(i ^ (i >> 1))
            out[g] = s
    return out


def syndrome_weight_counts(cnp.ndarray syn_in, int n, int k):
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] syn = np.ascontiguousarray(syn_in, dtype=np.uint64)
    cdef cnp.ndarray[cnp.int64_t, ndim=2] out = np.zeros(((<Py_ssize_t>1) << k, n + 1), dtype=np.int64)
    cdef Py_ssize_t size = (<Py_ssize_t>1) << n, y
    with nogil:
        for y in range(size):
            out[<Py_ssize_t>syn[y], _popcount(<uint64_t>y)] += 1
    return out


def coset_leader_weights(cnp.ndarray syn_in, int n, int k):
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] syn = np.ascontiguousarray(syn_in, dtype=np.uint64)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] out = np.full((<Py_ssize_t>1) << k, n + 1, dtype=np.int32)
    cdef Py_ssize_t size = (<Py_ssize_t>1) << n, y, s
    cdef int w
    with nogil:
        for y in range(size):
            s = <Py_ssize_t>syn[y]
            w = _popcount(<uint64_t>y)
            if w < out[s]:
                out[s] = w
    return out

# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: token-hash accumulation and the score scan.

Both functions have numpy twins in `fallback.py`; the package selects the
backend at import time. Integer hashing is bit-identical across backends;
dot products may differ from BLAS by rounding only.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

cdef unsigned long long FNV_OFFSET = 14695981039346656037ULL
cdef unsigned long long FNV_PRIME = 1099511628211ULL


def fnv1a_counts(list tokens, Py_ssize_t dims):
    """Accumulate 64-bit FNV-1a token hashes into ``dims`` buckets."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(dims, dtype=np.float64)
    cdef double[::1] view = out
    cdef unsigned long long h
    cdef bytes token
    cdef const unsigned char* data
    cdef Py_ssize_t i, n
    for token in tokens:
        data = token
        n = len(token)
        h = FNV_OFFSET
        for i in range(n):
            h ^= <unsigned long long>data[i]
            h *= FNV_PRIME
        view[h % <unsigned long long>dims] += 1.0
    return out


def dot_scores(double[:, ::1] matrix, double[::1] query):
    """Row-wise dot products of a C-contiguous matrix against a query."""
    cdef Py_ssize_t n = matrix.shape[0]
    cdef Py_ssize_t d = matrix.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double[::1] view = out
    cdef Py_ssize_t i, j
    cdef double acc
    for i in range(n):
        acc = 0.0
        for j in range(d):
            acc += matrix[i, j] * query[j]
        view[i] = acc
    return out

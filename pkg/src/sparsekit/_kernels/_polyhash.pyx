# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loop: Horner evaluation of hash polynomials over a Mersenne
prime field, reduced into a bucket range.

All arithmetic is exact (128-bit intermediates), so results are bit-identical
to the pure backend.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

ctypedef unsigned long long u64
cdef extern from *:
    ctypedef unsigned long long u128 "unsigned __int128"

BACKEND_NAME = "compiled"


cdef inline u64 _reduce(u128 v, u64 p, int e) noexcept nogil:
    # v < 2^(2e); two folds bring it below p.
    cdef u64 r = <u64> (v & p) + <u64> (v >> e)
    r = (r & p) + (r >> e)
    if r >= p:
        r -= p
    return r


def poly_bucket_batch(cnp.ndarray[cnp.uint64_t, ndim=1] coeffs,
                      cnp.ndarray[cnp.uint64_t, ndim=1] keys,
                      u64 prime, int exp, u64 bucket_range):
    """Evaluate sum_j coeffs[j] * key^(d-1-j) mod prime, then mod bucket_range."""
    cdef Py_ssize_t d = coeffs.shape[0]
    cdef Py_ssize_t m = keys.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.empty(m, dtype=np.int64)
    cdef Py_ssize_t i, j
    cdef u64 acc, x
    cdef u128 v
    with nogil:
        for i in range(m):
            x = keys[i] % prime
            acc = coeffs[0]
            for j in range(1, d):
                v = (<u128> acc) * x + coeffs[j]
                acc = _reduce(v, prime, exp)
            out[i] = <long long> (acc % bucket_range)
    return out


def poly_eval_batch(cnp.ndarray[cnp.uint64_t, ndim=1] coeffs,
                    cnp.ndarray[cnp.uint64_t, ndim=1] keys,
                    u64 prime, int exp):
    """Polynomial evaluation mod prime without the bucket reduction."""
    cdef Py_ssize_t d = coeffs.shape[0]
    cdef Py_ssize_t m = keys.shape[0]
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] out = np.empty(m, dtype=np.uint64)
    cdef Py_ssize_t i, j
    cdef u64 acc, x
    cdef u128 v
    with nogil:
        for i in range(m):
            x = keys[i] % prime
            acc = coeffs[0]
            for j in range(1, d):
                v = (<u128> acc) * x + coeffs[j]
                acc = _reduce(v, prime, exp)
            out[i] = acc
    return out

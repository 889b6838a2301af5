"""Pure backend for the polynomial-hash kernels.

Vectorized over keys with numpy uint64 words. Products of two field elements
would overflow 64 bits for the 61-bit prime, so the multiply is done in
32-bit limbs and folded with the Mersenne identity 2^e = 1 (mod 2^e - 1).
Results are bit-identical to the compiled backend.
"""

import numpy as np

BACKEND_NAME = "pure"

_MASK32 = np.uint64(0xFFFFFFFF)


def mulmod(a, b, prime, exp):
    """(a * b) mod prime for a Mersenne prime 2^exp - 1, exp <= 61.

    Accepts scalars or broadcastable uint64 arrays with entries < prime.
    """
    a = np.asarray(a, dtype=np.uint64)
    b = np.asarray(b, dtype=np.uint64)
    p = np.uint64(prime)
    if exp <= 32:
        # products fit in 64 bits directly
        v = a * b
        r = (v & p) + (v >> np.uint64(exp))
        r = (r & p) + (r >> np.uint64(exp))
        return r - (r >= p).astype(np.uint64) * p
    ah, al = a >> np.uint64(32), a & _MASK32
    bh, bl = b >> np.uint64(32), b & _MASK32
    hi = ah * bh                      # < 2^(2*exp - 64)
    mid = ah * bl + al * bh           # < 2^(exp + 1)
    lo = al * bl                      # < 2^64, exact in uint64
    # a*b = hi*2^64 + mid*2^32 + lo; fold each power of two through 2^exp = 1.
    sh64 = np.uint64(64 - exp)
    shm = np.uint64(exp - 32)
    mask_m = np.uint64((1 << (exp - 32)) - 1)
    r = (hi << sh64) + (mid >> shm) + ((mid & mask_m) << np.uint64(32))
    r += (lo >> np.uint64(exp)) + (lo & p)
    r = (r & p) + (r >> np.uint64(exp))
    r = (r & p) + (r >> np.uint64(exp))
    return r - (r >= p).astype(np.uint64) * p


def _addmod(a, b, prime, exp):
    p = np.uint64(prime)
    r = a + b
    r = (r & p) + (r >> np.uint64(exp))
    return r - (r >= p).astype(np.uint64) * p


def poly_eval_batch(coeffs, keys, prime, exp):
    keys = np.ascontiguousarray(keys, dtype=np.uint64) % np.uint64(prime)
    acc = np.broadcast_to(np.uint64(coeffs[0]), keys.shape).copy()
    for c in coeffs[1:]:
        acc = _addmod(mulmod(acc, keys, prime, exp), np.uint64(c), prime, exp)
    return acc


def poly_bucket_batch(coeffs, keys, prime, exp, bucket_range):
    acc = poly_eval_batch(coeffs, keys, prime, exp)
    return (acc % np.uint64(bucket_range)).astype(np.int64)

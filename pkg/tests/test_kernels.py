"""Backend cross-checks against an independent big-int oracle."""

import numpy as np
import pytest

from sparsekit._kernels import _fallback
from sparsekit import _kernels

M61 = (1 << 61) - 1
M31 = (1 << 31) - 1


def horner_ref(coeffs, key, prime):
    # plain Python integers: the independent oracle for both backends
    acc = 0
    for c in coeffs:
        acc = (acc * int(key) + int(c)) % prime
    return acc


@pytest.mark.parametrize("prime,exp", [(M61, 61), (M31, 31)])
def test_poly_eval_matches_bigint_oracle(prime, exp):
    rng = np.random.default_rng(0)
    coeffs = rng.integers(0, prime, size=17, dtype=np.uint64)
    keys = rng.integers(0, min(prime, 1 << 60), size=200, dtype=np.uint64)
    got = _kernels.poly_eval_batch(coeffs, keys, np.uint64(prime), exp)
    want = [horner_ref(coeffs, k, prime) for k in keys]
    assert [int(v) for v in got] == want


@pytest.mark.parametrize("prime,exp", [(M61, 61), (M31, 31)])
def test_bucket_reduction_matches_oracle(prime, exp):
    rng = np.random.default_rng(1)
    coeffs = rng.integers(0, prime, size=5, dtype=np.uint64)
    keys = rng.integers(0, 1 << 40, size=500, dtype=np.uint64)
    got = _kernels.poly_bucket_batch(coeffs, keys, np.uint64(prime), exp,
                                     np.uint64(1000))
    want = [horner_ref(coeffs, k, prime) % 1000 for k in keys]
    assert got.tolist() == want


@pytest.mark.parametrize("exp,prime", [(61, M61), (31, M31)])
def test_fallback_mulmod_exact(exp, prime):
    rng = np.random.default_rng(2)
    a = rng.integers(0, prime, size=1000, dtype=np.uint64)
    b = rng.integers(0, prime, size=1000, dtype=np.uint64)
    got = _fallback.mulmod(a, b, prime, exp)
    want = (a.astype(object) * b.astype(object)) % prime
    assert got.astype(object).tolist() == want.tolist()


def test_fallback_mulmod_extremes():
    for a in (0, 1, M61 - 1, M61 // 2, (1 << 32) - 1, 1 << 32):
        for b in (0, 1, M61 - 1, M61 // 2, 1 << 60):
            got = int(_fallback.mulmod(a, b, M61, 61))
            assert got == (a * b) % M61


def test_backends_agree():
    if _kernels.BACKEND != "compiled":
        pytest.skip("compiled backend unavailable")
    rng = np.random.default_rng(3)
    coeffs = rng.integers(0, M61, size=33, dtype=np.uint64)
    keys = rng.integers(0, 1 << 50, size=2048, dtype=np.uint64)
    fast = _kernels.poly_bucket_batch(coeffs, keys, np.uint64(M61), 61,
                                      np.uint64(4096))
    pure = _fallback.poly_bucket_batch(coeffs, keys, np.uint64(M61), 61,
                                       np.uint64(4096))
    assert np.array_equal(fast, pure)

"""Classical sparse test designs and their exhaustive verification oracles.

Designs are stored as per-column sorted row supports (all three kinds have
uniform column sparsity, so the supports form an (n, s) array). The naive
decoder and point queries work on any of them.
"""

from __future__ import annotations

import json
import math
import struct

import numpy as np

from .hashing import seed_stream

KIND_RANDOM_LIST_DISJUNCT = "random-list-disjunct"
KIND_RANDOM_CODE_DISJUNCT = "random-code-disjunct"
KIND_KAUTZ_SINGLETON = "kautz-singleton"

_KIND_CODES = {KIND_RANDOM_LIST_DISJUNCT: 1, KIND_RANDOM_CODE_DISJUNCT: 2,
               KIND_KAUTZ_SINGLETON: 3}
_CODE_KINDS = {v: k for k, v in _KIND_CODES.items()}

_MAGIC = b"SKD1"

# Kautz-Singleton alphabets are prime fields only; extension fields are out
# of scope at desk scale.
_PRIME_LIMIT = 1 << 16


class VerificationBudgetError(RuntimeError):
    """Requested brute-force enumeration exceeds the configured budget."""


class PrimeTableError(ValueError):
    """No tabulated prime is large enough for the requested construction."""


def _sieve(limit: int) -> np.ndarray:
    mask = np.ones(limit, dtype=bool)
    mask[:2] = False
    for p in range(2, int(limit ** 0.5) + 1):
        if mask[p]:
            mask[p * p::p] = False
    return np.flatnonzero(mask)


_PRIMES = _sieve(_PRIME_LIMIT)


class SparseDesign:
    """Sparse binary test matrix given by per-column row supports."""

    __slots__ = ("kind", "m", "n", "supports", "params")

    def __init__(self, kind, m, n, supports, params):
        self.kind = kind
        self.m = m
        self.n = n
        self.supports = supports  # (n, s) sorted rows per column
        self.params = params

    @property
    def col_sparsity(self) -> int:
        return self.supports.shape[1]

    def column_support(self, i: int) -> np.ndarray:
        return self.supports[i]


def banded_design(n: int, bands: int, width: int, seed: int, kind: str,
                  params: dict) -> SparseDesign:
    """One uniform row per band per column; rows of band b live in
    [b*width, (b+1)*width)."""
    rng = seed_stream(seed, "bands")
    pos = rng.integers(0, width, size=(bands, n), dtype=np.int64)
    pos += (np.arange(bands, dtype=np.int64) * width)[:, None]
    return SparseDesign(kind, bands * width, n, pos.T.copy(), params)


def random_list_disjunct(k: int, n: int, seed: int = 0,
                         c1: int = 12) -> SparseDesign:
    """log2(n/k) bands of c1*k rows; column sparsity exactly log2(n/k)."""
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    bands = max(0, (n // k).bit_length() - 1)
    return banded_design(n, bands, c1 * k, seed, KIND_RANDOM_LIST_DISJUNCT,
                         {"k": k, "c1": c1, "seed": seed})


def random_code_disjunct(k: int, n: int, seed: int = 0, c2: int = 4,
                         c3: int = 4) -> SparseDesign:
    """c2*k*log2(n) bands of c3*k buckets (random-code disjunct matrix)."""
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    bands = c2 * k * max(1, (n - 1).bit_length())
    return banded_design(n, bands, c3 * k, seed, KIND_RANDOM_CODE_DISJUNCT,
                         {"k": k, "c2": c2, "c3": c3, "seed": seed})


def _log_ceil(base: int, x: int) -> int:
    t, v = 0, 1
    while v < x:
        v *= base
        t += 1
    return t


def kautz_singleton(k: int, n: int) -> SparseDesign:
    """Reed-Solomon columns over GF(q) with the identity concatenation:
    row (position, symbol) -> position*q + symbol; m = q^2, deterministic."""
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    q_min = 2 * k * max(1, _log_ceil(k + 1, n)) + 1
    pos_idx = np.searchsorted(_PRIMES, q_min)
    if pos_idx == len(_PRIMES):
        raise PrimeTableError(f"no tabulated prime >= {q_min}")
    q = int(_PRIMES[pos_idx])
    t = max(1, _log_ceil(q, n))
    # column i <-> polynomial with base-q digits of i as coefficients
    digits = np.empty((t, n), dtype=np.int64)
    rem = np.arange(n, dtype=np.int64)
    for j in range(t):
        digits[j] = rem % q
        rem //= q
    points = np.arange(q, dtype=np.int64)[:, None]
    vals = np.zeros((q, n), dtype=np.int64)
    for j in range(t - 1, -1, -1):
        vals = (vals * points + digits[j]) % q
    rows = points * q + vals  # (q, n), sorted along axis 0
    return SparseDesign(KIND_KAUTZ_SINGLETON, q * q, n, rows.T.copy(),
                        {"k": k, "q": q, "t": t, "seed": 0})


def measure_sparse(design: SparseDesign, support) -> np.ndarray:
    """Flat boolean outcome y = M (or) x for the indicator of ``support``."""
    idx = np.asarray(sorted(set(int(i) for i in support)), dtype=np.int64)
    if idx.size and (idx[0] < 0 or idx[-1] >= design.n):
        raise ValueError("support index out of range")
    bits = np.zeros(design.m, dtype=bool)
    if idx.size:
        bits[design.supports[idx].ravel()] = True
    return bits


def _check_outcome(design: SparseDesign, outcome: np.ndarray) -> np.ndarray:
    outcome = np.asarray(outcome, dtype=bool)
    if outcome.shape != (design.m,):
        raise ValueError("outcome length does not match the design")
    return outcome


def naive_decode(design: SparseDesign, outcome) -> np.ndarray:
    """All columns covered by the positive tests, sorted."""
    outcome = _check_outcome(design, outcome)
    covered = outcome[design.supports].all(axis=1)
    return np.flatnonzero(covered).astype(np.int64)


def point_query(design: SparseDesign, outcome, i: int) -> bool:
    """Is column i covered by the positive tests? O(column sparsity)."""
    outcome = _check_outcome(design, outcome)
    if not 0 <= i < design.n:
        raise ValueError("index out of range")
    return bool(outcome[design.supports[i]].all())


def noisy_point_query(design: SparseDesign, outcome, i: int,
                      fn_slack: int) -> bool:
    """Covered up to ``fn_slack`` missing tests (false-negative tolerance)."""
    if fn_slack < 0:
        raise ValueError("fn_slack must be non-negative")
    outcome = _check_outcome(design, outcome)
    if not 0 <= i < design.n:
        raise ValueError("index out of range")
    return int((~outcome[design.supports[i]]).sum()) <= fn_slack


def covered_filter(design: SparseDesign, outcome,
                   candidates: np.ndarray) -> np.ndarray:
    """Vectorized point_query over a candidate list."""
    outcome = _check_outcome(design, outcome)
    if candidates.size == 0 or design.col_sparsity == 0:
        return candidates
    keep = outcome[design.supports[candidates]].all(axis=1)
    return candidates[keep]


def verify_list_disjunct(design: SparseDesign, k: int, ell: int,
                         budget: int = 50_000_000) -> bool:
    """Exact brute-force check of (k, ell)-list-disjunctness.

    Equivalent to the two-set definition: for every size-k set S, at most
    ``ell`` columns outside S may be covered by the union of S's supports.
    """
    n = design.n
    if k >= n:
        return True
    work = math.comb(n, k) * n
    if work > budget:
        raise VerificationBudgetError(
            f"enumeration needs ~{work} column checks > budget {budget}")
    from itertools import combinations

    for S in combinations(range(n), k):
        mask = np.zeros(design.m, dtype=bool)
        mask[design.supports[list(S)].ravel()] = True
        covered = mask[design.supports].all(axis=1)
        if int(covered.sum()) - k > ell:
            return False
    return True


def verify_disjunct(design: SparseDesign, k: int,
                    budget: int = 50_000_000) -> bool:
    """Exact brute-force check of k-disjunctness (list-disjunct with ell=0)."""
    return verify_list_disjunct(design, k, 0, budget)


def flip_bits(bits: np.ndarray, n_fp: int, n_fn: int, rng) -> np.ndarray:
    """Copy of a flat outcome with n_fp zero bits and n_fn one bits flipped."""
    out = bits.copy()
    if n_fp:
        zeros = np.flatnonzero(~out)
        if zeros.size < n_fp:
            raise ValueError("not enough zero bits to flip")
        out[rng.choice(zeros, n_fp, replace=False)] = True
    if n_fn:
        ones = np.flatnonzero(out)
        if ones.size < n_fn:
            raise ValueError("not enough one bits to flip")
        out[rng.choice(ones, n_fn, replace=False)] = False
    return out


def save_design(design: SparseDesign, path):
    """Versioned binary dump: header (kind, k, n, m, seed, params) plus
    delta-encoded column supports."""
    header = json.dumps(design.params, sort_keys=True).encode()
    s = design.col_sparsity
    deltas = np.diff(design.supports, axis=1, prepend=0).astype(np.uint32)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<BIQQQ", _KIND_CODES[design.kind], len(header),
                             design.m, design.n, s))
        fh.write(header)
        fh.write(deltas.tobytes())


def load_design(path) -> SparseDesign:
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError("not a sparsekit design file")
        code, hlen, m, n, s = struct.unpack("<BIQQQ", fh.read(29))
        params = json.loads(fh.read(hlen).decode())
        deltas = np.frombuffer(fh.read(4 * n * s), dtype=np.uint32)
    supports = np.cumsum(deltas.reshape(n, s).astype(np.int64), axis=1)
    return SparseDesign(_CODE_KINDS[code], int(m), int(n), supports, params)

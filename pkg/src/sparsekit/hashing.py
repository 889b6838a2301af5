"""Seeded k-wise independent hashing over Mersenne prime fields.

Every randomized structure in the package derives its layout from a 64-bit
master seed through two facilities defined here:

* ``seed_stream`` / ``split_seed`` — a splittable generator tree built on
  numpy's SeedSequence, keyed by (seed, purpose tag, index...). Used for
  one-shot draws such as hash coefficients and band positions.
* ``stream_base`` / ``mixed_*`` — a counter-based stream (splitmix64 finalizer
  over a keyed base) giving random access to individual values. Used where
  single entries must be regenerable on demand, e.g. per-entry Gaussians.
"""

from __future__ import annotations

import hashlib

import numpy as np

from . import _kernels

# (max domain bits, Mersenne exponent); a b-bit domain needs p >= 2^(b+1).
MERSENNE_TABLE = ((29, 31), (59, 61))

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


class DomainError(ValueError):
    """Key domain too large for the configured prime table, or key outside it."""


def prime_for_domain(domain_bits: int) -> tuple[int, int]:
    """Smallest tabulated Mersenne prime with p >= 2^(domain_bits + 1).

    Returns (prime, exponent); raises DomainError past the table.
    """
    for max_bits, exp in MERSENNE_TABLE:
        if domain_bits <= max_bits:
            return (1 << exp) - 1, exp
    raise DomainError(f"no configured prime covers a {domain_bits}-bit domain")


def _key_words(part) -> tuple[int, ...]:
    if isinstance(part, str):
        digest = hashlib.sha256(part.encode()).digest()
        return tuple(int.from_bytes(digest[i:i + 4], "little") for i in (0, 4))
    value = int(part)
    if value < 0:
        raise ValueError("stream path integers must be non-negative")
    return (value & 0xFFFFFFFF, (value >> 32) & 0xFFFFFFFF)


def seed_stream(seed: int, *path) -> np.random.Generator:
    """Deterministic generator for (seed, *path); path parts are strs or ints."""
    spawn = tuple(w for part in path for w in _key_words(part))
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=spawn))


def split_seed(seed: int, *path) -> int:
    """Derive an independent 63-bit child seed."""
    return int(seed_stream(seed, *path).integers(0, 1 << 63, dtype=np.uint64))


def stream_base(seed: int, *path) -> np.uint64:
    """64-bit base key for the counter-based stream at (seed, *path)."""
    return np.uint64(seed_stream(seed, *path).integers(0, 1 << 64, dtype=np.uint64))


def mixed_uint64(base: np.uint64, counters) -> np.ndarray:
    """splitmix64 of base + golden*(counter+1); vectorized random access."""
    z = np.asarray(counters, dtype=np.uint64) + np.uint64(1)
    z = np.uint64(base) + _GOLDEN * z
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def mixed_normals(base: np.uint64, start: int, count: int) -> np.ndarray:
    """Standard normals at counter positions [start, start+count), Box-Muller.

    Entry i consumes words 2i and 2i+1 of the stream, so any sub-range is
    regenerable independently.
    """
    idx = np.arange(start, start + count, dtype=np.uint64)
    w1 = mixed_uint64(base, idx * np.uint64(2))
    w2 = mixed_uint64(base, idx * np.uint64(2) + np.uint64(1))
    u1 = ((w1 >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0 ** -53  # (0, 1]
    u2 = (w2 >> np.uint64(11)).astype(np.float64) * 2.0 ** -53          # [0, 1)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


class KWiseHash:
    """Degree-kappa polynomial hash over GF(p), reduced into [0, range).

    Immutable after construction; evaluation is pure and thread-safe.
    """

    __slots__ = ("degree", "prime", "mersenne_exp", "range", "domain_bits",
                 "coefficients")

    def __init__(self, degree, prime, mersenne_exp, range_, domain_bits,
                 coefficients):
        self.degree = degree
        self.prime = prime
        self.mersenne_exp = mersenne_exp
        self.range = range_
        self.domain_bits = domain_bits
        self.coefficients = coefficients

    def _check_keys(self, keys: np.ndarray):
        if keys.size and (int(keys.min()) < 0 or
                          int(keys.max()) >> self.domain_bits):
            raise DomainError(
                f"key outside the {self.domain_bits}-bit domain")

    def eval(self, key: int) -> int:
        return int(self.eval_batch(np.asarray([key]))[0])

    def eval_batch(self, keys) -> np.ndarray:
        keys = np.asarray(keys, dtype=np.int64)
        self._check_keys(keys)
        return _kernels.poly_bucket_batch(
            self.coefficients, keys.astype(np.uint64), np.uint64(self.prime),
            self.mersenne_exp, np.uint64(self.range))


class LevelHash:
    """Restriction of a packed parent hash to length-``level`` prefixes.

    Prefix p is evaluated at parent key 2^level + p, so disjoint levels use
    disjoint key sets of one polynomial.
    """

    __slots__ = ("parent", "level")

    def __init__(self, parent: KWiseHash, level: int):
        if level >= parent.domain_bits:
            raise DomainError("level does not fit the parent domain")
        self.parent = parent
        self.level = level

    @property
    def range(self) -> int:
        return self.parent.range

    def eval(self, prefix: int) -> int:
        return int(self.eval_batch(np.asarray([prefix]))[0])

    def eval_batch(self, prefixes) -> np.ndarray:
        prefixes = np.asarray(prefixes, dtype=np.int64)
        if prefixes.size and (int(prefixes.min()) < 0 or
                              int(prefixes.max()) >> self.level):
            raise DomainError(f"prefix longer than {self.level} bits")
        return self.parent.eval_batch(prefixes + (np.int64(1) << self.level))


def new_kwise(degree: int, range_: int, domain_bits: int, seed: int,
              *path) -> KWiseHash:
    """Seeded hash; identical (degree, range, domain_bits, seed, path) give
    bit-identical functions."""
    if degree < 1 or range_ < 1 or domain_bits < 0:
        raise ValueError("degree and range must be positive")
    prime, exp = prime_for_domain(domain_bits)
    rng = seed_stream(seed, "kwise-coeffs", *path)
    coeffs = rng.integers(0, prime, size=degree, dtype=np.uint64)
    return KWiseHash(degree, prime, exp, range_, domain_bits, coeffs)

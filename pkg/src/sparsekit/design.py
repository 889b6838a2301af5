"""Prefix-tree identification design and its level-by-level decoder.

The design hashes every prefix length from log2(k) to log2(n) into C*k
buckets; decoding walks surviving prefixes down the tree, discarding any
prefix that lands in a negative test and splitting the rest one bit at a
time. False positives can only keep dead prefixes alive, so the true support
always survives.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hashing import KWiseHash, LevelHash, new_kwise, seed_stream

DEFAULT_C = 16        # buckets-per-k multiplier
DEFAULT_CL = 4        # list-size multiplier, fixed by Monte-Carlo calibration
KAPPA_CAP = 4096


class DesignMismatchError(ValueError):
    """Outcome produced by a different design than the decoder was given."""


def round_up_pow2(x: int) -> int:
    if x < 1:
        raise ValueError("expected a positive integer")
    return 1 << (x - 1).bit_length()


def is_pow2(x: int) -> bool:
    return x >= 1 and (x & (x - 1)) == 0


def bprefix(value: int, total_bits: int, ell: int) -> int:
    """Top ``ell`` bits of the total_bits-wide binary representation."""
    if not 0 <= ell <= total_bits:
        raise ValueError("prefix length out of range")
    if value < 0 or value >> total_bits:
        raise ValueError("value does not fit in total_bits")
    return value >> (total_bits - ell)


def default_kappa(k: int, n: int, cl: int = DEFAULT_CL) -> int:
    """Independence degree (C_L + 1) * k * log2(n/k), capped for tractability."""
    logr = (n // k).bit_length() - 1
    return max(1, min((cl + 1) * k * logr, KAPPA_CAP))


class IdentificationDesign:
    """Hash-defined test design: levels log2(k)..log2(n), C*k rows each,
    one nonzero per column at h_l(bprefix_l(column))."""

    __slots__ = ("k", "n", "C", "seed", "kappa", "log_k", "log_n", "parent")

    def __init__(self, k, n, C, seed, kappa, parent):
        self.k = k
        self.n = n
        self.C = C
        self.seed = seed
        self.kappa = kappa
        self.log_k = k.bit_length() - 1
        self.log_n = n.bit_length() - 1
        self.parent = parent

    @property
    def levels(self) -> range:
        return range(self.log_k, self.log_n + 1)

    @property
    def num_levels(self) -> int:
        return self.log_n - self.log_k + 1

    @property
    def rows_per_level(self) -> int:
        return self.C * self.k

    @property
    def rows(self) -> int:
        return self.rows_per_level * self.num_levels

    @property
    def meta(self) -> tuple:
        return (self.k, self.n, self.C, self.seed)

    def level_hash(self, ell: int) -> LevelHash:
        return LevelHash(self.parent, ell)

    def locate(self, ell: int, prefixes) -> np.ndarray:
        """Rows hit by length-``ell`` prefixes in level ``ell``."""
        return self.level_hash(ell).eval_batch(prefixes)


def build_identification(k: int, n: int, C: int = DEFAULT_C, seed: int = 0,
                         kappa: int | None = None) -> IdentificationDesign:
    if not (is_pow2(k) and is_pow2(n) and k <= n):
        raise ValueError("k and n must be powers of two with k <= n "
                         "(round_up_pow2 first)")
    if C < 2:
        raise ValueError("C must be at least 2")
    if kappa is None:
        kappa = default_kappa(k, n)
    log_n = n.bit_length() - 1
    parent = new_kwise(kappa, C * k, log_n + 1, seed, "ident-hash", 0)
    return IdentificationDesign(k, n, C, seed, kappa, parent)


class Outcome:
    """Per-level boolean test results, tagged with the design metadata."""

    __slots__ = ("bits", "meta", "log_k")

    def __init__(self, bits: list[np.ndarray], meta: tuple, log_k: int):
        self.bits = bits
        self.meta = meta
        self.log_k = log_k

    def level(self, ell: int) -> np.ndarray:
        return self.bits[ell - self.log_k]

    def copy(self) -> "Outcome":
        return Outcome([b.copy() for b in self.bits], self.meta, self.log_k)

    def popcount(self) -> int:
        return int(sum(int(b.sum()) for b in self.bits))


def _check_support(support, n):
    idx = np.asarray(sorted(set(int(i) for i in support)), dtype=np.int64)
    if idx.size and (idx[0] < 0 or idx[-1] >= n):
        raise ValueError("support index out of range")
    return idx


def measure(design: IdentificationDesign, support) -> Outcome:
    """Disjunctive measurement of the indicator vector of ``support``."""
    idx = _check_support(support, design.n)
    bits = []
    for ell in design.levels:
        level_bits = np.zeros(design.rows_per_level, dtype=bool)
        if idx.size:
            prefixes = idx >> (design.log_n - ell)
            level_bits[design.locate(ell, prefixes)] = True
        bits.append(level_bits)
    return Outcome(bits, design.meta, design.log_k)


@dataclass
class NoisePolicy:
    """Test corruption: ``fp_per_level`` 0->1 flips in every level segment and
    ``fn_total`` 1->0 flips overall."""

    fp_per_level: int = 0
    fn_total: int = 0
    placement: str = "uniform-random"   # or "adversarial-near-defectives"
    seed: int = 0


def inject_noise(outcome: Outcome, policy: NoisePolicy,
                 support=None) -> Outcome:
    """Corrupted copy of ``outcome``; the input is untouched.

    Adversarial placement targets rows hashed to by siblings of defective
    prefixes and needs the true ``support``; the design is rebuilt from the
    outcome metadata.
    """
    if policy.placement not in ("uniform-random", "adversarial-near-defectives"):
        raise ValueError(f"unknown placement {policy.placement!r}")
    adversarial = policy.placement == "adversarial-near-defectives"
    if adversarial and support is None:
        raise ValueError("adversarial placement needs the true support")
    noisy = outcome.copy()
    rng = seed_stream(policy.seed, "outcome-noise")
    design = build_identification(*outcome.meta) if adversarial else None
    if design is not None:
        sup = _check_support(support, design.n)
    for li, level_bits in enumerate(noisy.bits):
        if policy.fp_per_level == 0:
            continue
        zeros = np.flatnonzero(~level_bits)
        if zeros.size < policy.fp_per_level:
            raise ValueError("not enough zero bits to flip at level "
                             f"{outcome.log_k + li}")
        if adversarial:
            ell = outcome.log_k + li
            siblings = np.unique((sup >> (design.log_n - ell)) ^ 1)
            rows = np.unique(design.locate(ell, siblings))
            target = rows[~level_bits[rows]]
            rng.shuffle(target)
            picked = target[:policy.fp_per_level]
            if picked.size < policy.fp_per_level:
                rest = np.setdiff1d(zeros, picked, assume_unique=False)
                extra = rng.choice(rest, policy.fp_per_level - picked.size,
                                   replace=False)
                picked = np.concatenate([picked, extra])
        else:
            picked = rng.choice(zeros, policy.fp_per_level, replace=False)
        level_bits[picked] = True
    if policy.fn_total:
        widths = [b.size for b in noisy.bits]
        flat = np.concatenate(noisy.bits)
        ones = np.flatnonzero(flat)
        if ones.size < policy.fn_total:
            raise ValueError("not enough one bits to flip")
        flat[rng.choice(ones, policy.fn_total, replace=False)] = False
        noisy.bits = list(np.split(flat, np.cumsum(widths)[:-1]))
    return noisy


@dataclass
class DecodeStats:
    """Work instrumentation: prefixes ever inserted into the candidate list
    and test bits read."""

    inserted: int = 0
    tests_read: int = 0

    def merge(self, other: "DecodeStats"):
        self.inserted += other.inserted
        self.tests_read += other.tests_read


def identify(design: IdentificationDesign, outcome: Outcome,
             stats: DecodeStats | None = None) -> np.ndarray:
    """Decode to a sorted index list that contains every defective.

    A prefix survives level l iff its bucket tested positive; survivors are
    extended by one bit until full length.
    """
    if outcome.meta != design.meta:
        raise DesignMismatchError("outcome metadata does not match the design")
    live = np.arange(design.k, dtype=np.int64)
    if stats is not None:
        stats.inserted += live.size
    for ell in design.levels:
        if live.size == 0:
            break
        rows = design.locate(ell, live)
        if stats is not None:
            stats.tests_read += live.size
        live = live[outcome.level(ell)[rows]]
        if ell == design.log_n:
            break
        live = np.concatenate([live << 1, (live << 1) | 1])
        if stats is not None:
            stats.inserted += live.size
    return np.sort(live)


def locate_batch(design: IdentificationDesign, ell: int,
                 prefixes) -> np.ndarray:
    """Batch row location for length-``ell`` prefixes (delegates to the
    packed hash)."""
    if ell not in design.levels:
        raise ValueError(f"level {ell} not in design")
    return design.locate(ell, prefixes)

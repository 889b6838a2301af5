"""Noise-tolerant identification.

False positives: a repetition-voting variant of the prefix decoder (learn d
bits at a time, discard a prefix only when a majority of its R repeated
tests are negative), plus a splitting reduction that races independent
copies so a noise budget concentrated on one copy cannot stall decoding.

False negatives: a bucket-voting reduction — hash the universe into small
sub-universes, decode an error-tolerant inner design per bucket with slack,
keep indices returned in at least half the repetitions, then confirm with a
slack-tolerant disjunct filter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import combinatorial as comb
from .design import (DEFAULT_C, DEFAULT_CL, DecodeStats, DesignMismatchError,
                     default_kappa, is_pow2)
from .hashing import new_kwise, seed_stream, split_seed

DEFAULT_CR = 6    # repetitions per level = C_R * log2(k)
DEFAULT_CV = 4    # voting repetitions = C_v * k


class RaceOverloadError(RuntimeError):
    """Every split copy exhausted its work budget (adversarial overload)."""


class RegimeError(ValueError):
    """Parameters outside the voting reduction's k > log2(n) regime."""


class NoisyDesign:
    """Levels of prefix lengths log2(k), log2(k)+d, ... log2(n); R repeated
    hash rows per level, C*k buckets each."""

    __slots__ = ("k", "n", "alpha", "seed", "C", "kappa", "d", "D", "reps",
                 "lens", "parents", "log_k", "log_n")

    def __init__(self, k, n, alpha, seed, C, kappa, d, reps, lens, parents):
        self.k = k
        self.n = n
        self.alpha = alpha
        self.seed = seed
        self.C = C
        self.kappa = kappa
        self.d = d
        self.D = 1 << d
        self.reps = reps
        self.lens = lens
        self.parents = parents
        self.log_k = k.bit_length() - 1
        self.log_n = n.bit_length() - 1

    @property
    def H(self) -> int:
        return len(self.lens)

    @property
    def rows_per_rep(self) -> int:
        return self.C * self.k

    @property
    def rows(self) -> int:
        return self.H * self.reps * self.rows_per_rep

    @property
    def meta(self) -> tuple:
        return (self.k, self.n, self.alpha, self.seed, self.C, self.reps)

    def locate(self, level_idx: int, r: int, prefixes) -> np.ndarray:
        length = self.lens[level_idx]
        keys = np.asarray(prefixes, dtype=np.int64) + (np.int64(1) << length)
        return self.parents[r].eval_batch(keys)


def build_noisy(k: int, n: int, alpha: float, seed: int = 0,
                C: int = DEFAULT_C, C_R: int = DEFAULT_CR,
                reps: int | None = None, kappa: int | None = None) -> NoisyDesign:
    if not (is_pow2(k) and is_pow2(n) and k <= n):
        raise ValueError("k and n must be powers of two with k <= n")
    if not 0 < alpha <= 1:
        raise ValueError("alpha must be in (0, 1]")
    log_k = k.bit_length() - 1
    log_n = n.bit_length() - 1
    # k = 1 falls back to binary branching and constant repetitions
    d = max(1, math.ceil(alpha * log_k))
    if reps is None:
        reps = C_R * log_k if log_k >= 1 else C_R
    if kappa is None:
        kappa = default_kappa(k, n)
    lens = []
    length = log_k
    while True:
        lens.append(length)
        if length >= log_n:
            break
        length = min(length + d, log_n)
    parents = [new_kwise(kappa, C * k, log_n + 1, seed, "ident-hash", r)
               for r in range(reps)]
    return NoisyDesign(k, n, alpha, seed, C, kappa, d, reps, tuple(lens),
                       parents)


class NoisyOutcome:
    """Boolean tests, shape (levels, repetitions, C*k)."""

    __slots__ = ("bits", "meta")

    def __init__(self, bits, meta):
        self.bits = bits
        self.meta = meta

    def copy(self) -> "NoisyOutcome":
        return NoisyOutcome(self.bits.copy(), self.meta)


def measure_noisy(design: NoisyDesign, support) -> NoisyOutcome:
    idx = np.asarray(sorted(set(int(i) for i in support)), dtype=np.int64)
    if idx.size and (idx[0] < 0 or idx[-1] >= design.n):
        raise ValueError("support index out of range")
    bits = np.zeros((design.H, design.reps, design.rows_per_rep), dtype=bool)
    for li, length in enumerate(design.lens):
        if not idx.size:
            break
        prefixes = idx >> (design.log_n - length)
        for r in range(design.reps):
            bits[li, r][design.locate(li, r, prefixes)] = True
    return NoisyOutcome(bits, design.meta)


def inject_noisy_noise(outcome: NoisyOutcome, fp_total: int = 0,
                       fn_total: int = 0, seed: int = 0) -> NoisyOutcome:
    """Uniform 0->1 / 1->0 flips across all level/repetition segments."""
    noisy = outcome.copy()
    rng = seed_stream(seed, "noisy-outcome-noise")
    flat = noisy.bits.ravel()
    if fp_total:
        zeros = np.flatnonzero(~flat)
        if zeros.size < fp_total:
            raise ValueError("not enough zero bits to flip")
        flat[rng.choice(zeros, fp_total, replace=False)] = True
    if fn_total:
        ones = np.flatnonzero(flat)
        if ones.size < fn_total:
            raise ValueError("not enough one bits to flip")
        flat[rng.choice(ones, fn_total, replace=False)] = False
    return noisy


def identify_under_errors(design: NoisyDesign, outcome: NoisyOutcome,
                          stats: DecodeStats | None = None) -> np.ndarray:
    """Majority-vote prefix decoding: a prefix is discarded only when more
    than half of its repeated tests are negative (ties survive)."""
    if outcome.meta != design.meta:
        raise DesignMismatchError("outcome does not match the design")
    live = np.arange(design.k, dtype=np.int64)
    if stats is not None:
        stats.inserted += live.size
    for li, length in enumerate(design.lens):
        if live.size == 0:
            break
        negatives = np.zeros(live.size, dtype=np.int64)
        for r in range(design.reps):
            rows = design.locate(li, r, live)
            negatives += ~outcome.bits[li, r][rows]
        if stats is not None:
            stats.tests_read += live.size * design.reps
        live = live[2 * negatives <= design.reps]
        if li == design.H - 1:
            break
        shift = design.lens[li + 1] - length
        live = ((live << shift)[:, None]
                | np.arange(1 << shift, dtype=np.int64)).ravel()
        if stats is not None:
            stats.inserted += live.size
    return np.sort(live)


def candidate_bound(k: int, n: int, alpha: float,
                    C_L: int = DEFAULT_CL) -> int:
    """Calibrated clean-instance bound on inserted candidates,
    C_L * k^(1+alpha) * log2(n/k) + k."""
    logr = max(1, (n // k).bit_length() - 1)
    return int(C_L * (k ** (1.0 + alpha)) * logr) + k


@dataclass
class SplitDesign:
    """1 + ceil(e0 / (k log2 k)) independent copies raced at decode time."""

    k: int
    n: int
    alpha: float
    e0: int
    seed: int
    copies: list[NoisyDesign]

    @property
    def rows(self) -> int:
        return sum(c.rows for c in self.copies)


def split_e0(k: int, n: int, e0: int, alpha: float, seed: int = 0,
             **kwargs) -> SplitDesign:
    if e0 < 0:
        raise ValueError("e0 must be non-negative")
    log_k = max(1, k.bit_length() - 1)
    ncopies = 1 + -(-e0 // (k * log_k))
    copies = [build_noisy(k, n, alpha, split_seed(seed, "copy", c), **kwargs)
              for c in range(ncopies)]
    return SplitDesign(k, n, alpha, e0, seed, copies)


def measure_split(split: SplitDesign, support) -> list[NoisyOutcome]:
    return [measure_noisy(c, support) for c in split.copies]


class _RaceCopy:
    """Stepwise decoder for one split copy; one advance() = one level."""

    def __init__(self, design, outcome, budget):
        self.design = design
        self.outcome = outcome
        self.budget = budget
        self.stats = DecodeStats()
        self.live = np.arange(design.k, dtype=np.int64)
        self.stats.inserted = self.live.size
        self.level = 0
        self.result = None
        self.dead = self.stats.inserted > budget

    def advance(self):
        d = self.design
        li = self.level
        negatives = np.zeros(self.live.size, dtype=np.int64)
        for r in range(d.reps):
            rows = d.locate(li, r, self.live)
            negatives += ~self.outcome.bits[li, r][rows]
        self.stats.tests_read += self.live.size * d.reps
        self.live = self.live[2 * negatives <= d.reps]
        if li == d.H - 1:
            self.result = np.sort(self.live)
            return
        shift = d.lens[li + 1] - d.lens[li]
        self.live = ((self.live << shift)[:, None]
                     | np.arange(1 << shift, dtype=np.int64)).ravel()
        self.stats.inserted += self.live.size
        if self.stats.inserted > self.budget:
            self.dead = True
        self.level += 1


def decode_race(split: SplitDesign, outcomes: list[NoisyOutcome],
                budget_factor: int = 8,
                stats: DecodeStats | None = None) -> np.ndarray:
    """Round-robin race over the copies with a per-copy work budget.

    Returns the first finished list within the certified size bound; within
    a round the lowest copy index wins, so the result does not depend on
    scheduling. Raises RaceOverloadError if every copy is exhausted.
    """
    if len(outcomes) != len(split.copies):
        raise DesignMismatchError("one outcome per copy required")
    bound = candidate_bound(split.k, split.n, split.alpha)
    runners = [_RaceCopy(c, o, budget_factor * bound)
               for c, o in zip(split.copies, outcomes)]
    while any(not r.dead and r.result is None for r in runners):
        for runner in runners:
            if runner.dead or runner.result is not None:
                continue
            runner.advance()
            if runner.result is not None:
                if runner.result.size <= bound:
                    if stats is not None:
                        for other in runners:
                            stats.merge(other.stats)
                    return runner.result
                runner.dead = True
    raise RaceOverloadError("all split copies exceeded their work budget")


# --- false negatives: bucket-voting reduction ---------------------------


class _InnerDesign:
    """Error-tolerant band design over one bucket's sub-universe."""

    __slots__ = ("members", "positions", "rows")

    def __init__(self, members, positions, rows):
        self.members = members      # sorted sub-universe indices
        self.positions = positions  # (bands, len(members)) rows within bucket
        self.rows = rows


@dataclass
class VotingReduction:
    k: int
    n: int
    e1: int
    seed: int
    C_v: int
    buckets: int
    assign: np.ndarray                 # (reps, n) bucket of each index
    inner: list[list[_InnerDesign]]    # [rep][bucket]
    filt: comb.SparseDesign
    slack_inner: int
    slack_filter: int

    @property
    def reps(self) -> int:
        return self.C_v * self.k

    @property
    def rows(self) -> int:
        inner_rows = sum(d.rows for per_rep in self.inner for d in per_rep)
        return inner_rows + self.filt.m


def build_voting_reduction(k: int, n: int, e1: int, seed: int = 0,
                           C_v: int = DEFAULT_CV, c_bands: int = 2,
                           c_width: int = 2, regime_c: int = 1) -> VotingReduction:
    log_n = max(1, (n - 1).bit_length())
    if k <= regime_c * log_n:
        raise RegimeError(
            f"voting reduction needs k > {regime_c}*log2(n) = {regime_c * log_n}; "
            "use the splitting construction for small k")
    reps = C_v * k
    buckets = max(1, (10 * k) // log_n)
    slack_inner = -(-e1 // k)
    rng = seed_stream(seed, "voting-buckets")
    assign = rng.integers(0, buckets, size=(reps, n), dtype=np.int64)
    width = c_width * log_n
    inner: list[list[_InnerDesign]] = []
    for rho in range(reps):
        per_rep = []
        order = np.argsort(assign[rho], kind="stable")
        bounds = np.searchsorted(assign[rho][order], np.arange(buckets + 1))
        for b in range(buckets):
            members = order[bounds[b]:bounds[b + 1]]
            members.sort()
            sub = members.size
            bands = c_bands * (max(1, int(sub - 1).bit_length() if sub > 1 else 1)
                               + slack_inner)
            pos = rng.integers(0, width, size=(bands, sub), dtype=np.int64)
            pos += (np.arange(bands, dtype=np.int64) * width)[:, None]
            per_rep.append(_InnerDesign(members, pos, bands * width))
        inner.append(per_rep)
    filt = comb.random_code_disjunct(k, n, split_seed(seed, "voting-filter"))
    return VotingReduction(k, n, e1, seed, C_v, buckets, assign, inner, filt,
                           slack_inner, k * e1)


class VotingOutcome:
    __slots__ = ("inner_bits", "filter_bits", "meta")

    def __init__(self, inner_bits, filter_bits, meta):
        self.inner_bits = inner_bits   # [rep][bucket] flat bool arrays
        self.filter_bits = filter_bits
        self.meta = meta

    def copy(self) -> "VotingOutcome":
        return VotingOutcome([[b.copy() for b in per] for per in self.inner_bits],
                             self.filter_bits.copy(), self.meta)


def measure_voting(red: VotingReduction, support) -> VotingOutcome:
    idx = np.asarray(sorted(set(int(i) for i in support)), dtype=np.int64)
    if idx.size and (idx[0] < 0 or idx[-1] >= red.n):
        raise ValueError("support index out of range")
    inner_bits = []
    for rho in range(red.reps):
        per = []
        for b, inner in enumerate(red.inner[rho]):
            bits = np.zeros(inner.rows, dtype=bool)
            if idx.size:
                local = np.searchsorted(inner.members, idx)
                hit = (local < inner.members.size)
                hit[hit] = inner.members[local[hit]] == idx[hit]
                if hit.any():
                    bits[inner.positions[:, local[hit]].ravel()] = True
            per.append(bits)
        inner_bits.append(per)
    return VotingOutcome(inner_bits, comb.measure_sparse(red.filt, idx),
                         (red.k, red.n, red.e1, red.seed))


def inject_voting_noise(outcome: VotingOutcome, fn_total: int,
                        seed: int = 0) -> VotingOutcome:
    """Uniform 1->0 flips across the whole structure (inner + filter)."""
    noisy = outcome.copy()
    rng = seed_stream(seed, "voting-noise")
    chunks = [b for per in noisy.inner_bits for b in per] + [noisy.filter_bits]
    sizes = np.array([c.size for c in chunks])
    flat = np.concatenate(chunks)
    ones = np.flatnonzero(flat)
    if ones.size < fn_total:
        raise ValueError("not enough one bits to flip")
    flat[rng.choice(ones, fn_total, replace=False)] = False
    parts = np.split(flat, np.cumsum(sizes)[:-1])
    it = iter(parts)
    for per in noisy.inner_bits:
        for b in range(len(per)):
            per[b] = next(it)
    noisy.filter_bits = next(it)
    return noisy


def decode_voting(red: VotingReduction, outcome: VotingOutcome) -> np.ndarray:
    """Slack naive decode per bucket, majority vote, disjunct confirmation."""
    if outcome.meta != (red.k, red.n, red.e1, red.seed):
        raise DesignMismatchError("outcome does not match the reduction")
    votes = np.zeros(red.n, dtype=np.int64)
    for rho in range(red.reps):
        for b, inner in enumerate(red.inner[rho]):
            if inner.members.size == 0:
                continue
            bits = outcome.inner_bits[rho][b]
            missing = (~bits[inner.positions]).sum(axis=0)
            votes[inner.members[missing <= red.slack_inner]] += 1
    shortlist = np.flatnonzero(2 * votes >= red.reps).astype(np.int64)
    keep = [i for i in shortlist
            if comb.noisy_point_query(red.filt, outcome.filter_bits, int(i),
                                      red.slack_filter)]
    return np.asarray(keep, dtype=np.int64)

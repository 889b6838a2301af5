"""l2/l2 weak identification system and CountSketch pruning.

The weak design hashes prefixes into buckets per (level, repetition) block
and multiplies each coordinate by a per-entry Gaussian; decoding walks the
prefix tree keeping the candidates with the largest median-of-|block value|
estimates. A CountSketch stage then turns the candidate list into a 2k-sparse
approximation by median signed estimates.

Gaussian entries are regenerated on demand from a counter-based stream keyed
by (seed, level, repetition), so the measurement matrix is never stored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .design import DecodeStats, DesignMismatchError, is_pow2
from .hashing import mixed_normals, new_kwise, seed_stream, stream_base

DEFAULT_C = 8
DEFAULT_CT = 8
DEFAULT_KAPPA = 32


def _closest_pow2(x: float) -> int:
    if x <= 2.0:
        return 2
    return 1 << round(math.log2(x))


class GaussianDesign:
    """(level, repetition)-indexed Gaussian bucket scheme.

    Levels use prefix lengths log2(k), log2(k)+d, ..., log2(n) with
    D = 2^d branching; each level carries R repetitions of ceil(C*k/eps)
    buckets. Prefix-to-bucket tables are precomputed per (level, rep); the
    Gaussian coefficients are implicit.
    """

    __slots__ = ("k", "n", "eps", "delta", "seed", "C", "CT", "kappa",
                 "d", "D", "R", "width", "lens", "log_k", "log_n",
                 "tables", "_bases")

    def __init__(self, k, n, eps, delta, seed, C, CT, kappa):
        self.k = k
        self.n = n
        self.eps = eps
        self.delta = delta
        self.seed = seed
        self.C = C
        self.CT = CT
        self.kappa = kappa
        self.log_k = k.bit_length() - 1
        self.log_n = n.bit_length() - 1
        logr = self.log_n - self.log_k
        ratio = logr / math.log2(logr) if logr > 2 else 2.0
        self.D = _closest_pow2(ratio)
        self.d = self.D.bit_length() - 1
        self.R = max(1, math.ceil(C * (ratio + math.log2(1.0 / delta) / k)))
        self.width = math.ceil(C * k / eps)
        lens = []
        length = self.log_k
        while True:
            lens.append(length)
            if length >= self.log_n:
                break
            length = min(length + self.d, self.log_n)
        self.lens = tuple(lens)
        self.tables = []
        for li, length in enumerate(self.lens):
            per_rep = np.empty((self.R, 1 << length), dtype=np.int32)
            prefixes = np.arange(1 << length, dtype=np.int64)
            keys = prefixes + (np.int64(1) << length)
            for r in range(self.R):
                h = new_kwise(kappa, self.width, self.log_n + 1, seed,
                              "l2-hash", li, r)
                per_rep[r] = h.eval_batch(keys)
            self.tables.append(per_rep)
        self._bases = np.array(
            [[stream_base(seed, "l2-gauss", li, r) for r in range(self.R)]
             for li in range(self.H)], dtype=np.uint64)

    @property
    def H(self) -> int:
        return len(self.lens)

    @property
    def rows(self) -> int:
        return self.H * self.R * self.width

    @property
    def meta(self) -> tuple:
        return (self.k, self.n, self.eps, self.delta, self.seed)

    def gaussian_block(self, level_idx: int, r: int) -> np.ndarray:
        """All n Gaussian coefficients of block (level, rep)."""
        return mixed_normals(self._bases[level_idx, r], 0, self.n)

    def gaussian_entry(self, level_idx: int, r: int, i: int) -> float:
        """Coefficient of column i in block (level, rep); bit-identical on
        every regeneration."""
        return float(mixed_normals(self._bases[level_idx, r], i, 1)[0])

    def bucket_of(self, level_idx: int, prefixes) -> np.ndarray:
        """(R, len(prefixes)) bucket positions at one level."""
        return self.tables[level_idx][:, prefixes]


def build_weak(k: int, n: int, eps: float, delta: float, seed: int = 0,
               C: int = DEFAULT_C, CT: int = DEFAULT_CT,
               kappa: int = DEFAULT_KAPPA) -> GaussianDesign:
    if not (is_pow2(k) and is_pow2(n) and k <= n):
        raise ValueError("k and n must be powers of two with k <= n")
    if not 0 < eps <= 1:
        raise ValueError("eps must be in (0, 1]")
    if not 0 < delta < 1:
        raise ValueError("delta must be in (0, 1)")
    return GaussianDesign(k, n, eps, delta, seed, C, CT, kappa)


def weak_measure(design: GaussianDesign, x) -> np.ndarray:
    """y = M x; blocks ordered (level, rep), each of ``width`` buckets."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (design.n,):
        raise ValueError("vector length does not match the design")
    y = np.empty((design.H, design.R, design.width), dtype=np.float64)
    idx = np.arange(design.n, dtype=np.int64)
    for li, length in enumerate(design.lens):
        pos = design.tables[li][:, idx >> (design.log_n - length)]
        for r in range(design.R):
            g = design.gaussian_block(li, r)
            y[li, r] = np.bincount(pos[r], weights=g * x,
                                   minlength=design.width)
    return y.ravel()


def _top_candidates(live, est, keep):
    if live.size <= keep:
        return live
    order = np.lexsort((live, -est))
    return live[order[:keep]]


def weak_identify(design: GaussianDesign, y,
                  stats: DecodeStats | None = None) -> np.ndarray:
    """Candidate list of at most CT*(k/eps)*log2(n/k) indices.

    Per level: est_p = median over reps of |y at p's bucket|; keep the
    largest estimates (ties to the smaller prefix), expand by d bits.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (design.rows,):
        raise DesignMismatchError("measurement length does not match")
    y3 = y.reshape(design.H, design.R, design.width)
    logr = max(1, design.log_n - design.log_k)
    keep = max(design.k, math.ceil(design.CT * (design.k / design.eps) * logr))
    live = np.arange(design.k, dtype=np.int64)
    if stats is not None:
        stats.inserted += live.size
    for li in range(design.H):
        pos = design.bucket_of(li, live)
        vals = np.abs(y3[li][np.arange(design.R)[:, None], pos])
        est = np.median(vals, axis=0)
        if stats is not None:
            stats.tests_read += pos.size
        live = _top_candidates(live, est, keep)
        if li == design.H - 1:
            break
        shift = design.lens[li + 1] - design.lens[li]
        live = ((live << shift)[:, None]
                | np.arange(1 << shift, dtype=np.int64)).ravel()
        if stats is not None:
            stats.inserted += live.size
    return np.sort(live)


@dataclass
class CountSketchState:
    k: int
    n: int
    eps: float
    delta: float
    seed: int
    width: int
    positions: np.ndarray  # (R', n)
    signs: np.ndarray      # (R', n), +1/-1

    @property
    def reps(self) -> int:
        return self.positions.shape[0]

    @property
    def rows(self) -> int:
        return self.reps * self.width


def cs_build(k: int, n: int, eps: float, delta: float, seed: int = 0,
             c: int = 2, cprime: int = 8) -> CountSketchState:
    """R' = ceil(c*(log2(n/k) + log2(1/delta)/k)) bands of cprime*k buckets,
    one signed position per column per band."""
    if not (is_pow2(k) and is_pow2(n) and k <= n):
        raise ValueError("k and n must be powers of two with k <= n")
    logr = max(1, (n // k).bit_length() - 1)
    reps = math.ceil(c * (logr + math.log2(1.0 / delta) / k))
    width = cprime * k
    rng = seed_stream(seed, "countsketch")
    positions = rng.integers(0, width, size=(reps, n), dtype=np.int64)
    signs = (rng.integers(0, 2, size=(reps, n), dtype=np.int64) * 2 - 1)
    return CountSketchState(k, n, eps, delta, seed, width, positions, signs)


def cs_measure(state: CountSketchState, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (state.n,):
        raise ValueError("vector length does not match the sketch")
    y = np.empty((state.reps, state.width), dtype=np.float64)
    for r in range(state.reps):
        y[r] = np.bincount(state.positions[r], weights=state.signs[r] * x,
                           minlength=state.width)
    return y.ravel()


def cs_estimate(state: CountSketchState, y_cs, candidates) -> np.ndarray:
    """Median over bands of sign * bucket value, per candidate."""
    y = np.asarray(y_cs, dtype=np.float64)
    if y.shape != (state.rows,):
        raise ValueError("measurement length does not match the sketch")
    cand = np.asarray(candidates, dtype=np.int64)
    y2 = y.reshape(state.reps, state.width)
    vals = (y2[np.arange(state.reps)[:, None], state.positions[:, cand]]
            * state.signs[:, cand])
    return np.median(vals, axis=0)


def cs_estimate_and_prune(state: CountSketchState, y_cs,
                          candidates) -> np.ndarray:
    """2k-sparse vector: candidate estimates, keeping the 2k largest in
    magnitude (ties to the smaller index), zero elsewhere."""
    cand = np.unique(np.asarray(candidates, dtype=np.int64))
    out = np.zeros(state.n, dtype=np.float64)
    if cand.size == 0:
        return out
    est = cs_estimate(state, y_cs, cand)
    top = min(2 * state.k, cand.size)
    order = np.lexsort((cand, -np.abs(est)))[:top]
    out[cand[order]] = est[order]
    return out

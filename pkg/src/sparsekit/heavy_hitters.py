"""Strict-turnstile l1 heavy-hitters sketch.

Counters mirror the identification design's rows plus a norm accumulator, a
thresholded band filter, and (optionally) a random-code estimate table. An
update is buffered on arrival; each arrival also applies one pending update
from the other buffer, so worst-case per-update work is a constant number of
counter increments (de-amortization via two alternating buffers).

At query time the counters are binarized at norm/k (ties count as heavy) and
decoded with the prefix-tree decoder, then survivors must clear the same
threshold in every filter band.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from . import design as dsg
from ._kernels import mulmod
from .hashing import prime_for_domain, seed_stream, split_seed

_MAGIC = b"SKHH"
_VERSION = 1


class EstimatesDisabledError(RuntimeError):
    pass


@dataclass
class HHConfig:
    C: int = dsg.DEFAULT_C      # identification buckets per k
    c_f: int = 2                # filter bands per log2(n/k)
    c_fw: int = 4               # filter buckets per k
    kappa_b: int = 1            # buffer capacity per k*log2(n/k)
    estimates: bool = False
    c2: int = 4                 # estimate bands per k*log2(n)
    c3: int = 4                 # estimate buckets per k
    c_out: int = 4              # empirical output-size multiplier
    kappa: int | None = None


def _pairwise_bank(seed, path, bands, prime):
    rng = seed_stream(seed, *path)
    a = rng.integers(0, prime, size=bands, dtype=np.uint64)
    b = rng.integers(0, prime, size=bands, dtype=np.uint64)
    return a, b


class HHSketch:
    def __init__(self, k: int, n: int, seed: int = 0,
                 config: HHConfig | None = None):
        cfg = config or HHConfig()
        self.k = dsg.round_up_pow2(k)
        self.n = dsg.round_up_pow2(n)
        self.seed = seed
        self.config = cfg
        self.ident = dsg.build_identification(
            self.k, self.n, cfg.C, split_seed(seed, "hh-ident"), cfg.kappa)
        log_n = self.ident.log_n
        logr = max(1, (self.n // self.k).bit_length() - 1)

        # per-level prefix -> row lookup tables (cache of the hash layout;
        # the matrix itself is never materialized)
        tables, offsets, off = [], [], 0
        for ell in self.ident.levels:
            tables.append(self.ident.locate(
                ell, np.arange(1 << ell, dtype=np.int64)).astype(np.int64))
            offsets.append(off)
            off += 1 << ell
        self._tables = np.concatenate(tables)
        self._shifts = np.array([log_n - ell for ell in self.ident.levels],
                                dtype=np.int64)
        self._table_off = np.asarray(offsets, dtype=np.int64)
        self._row_off = (np.arange(self.ident.num_levels, dtype=np.int64)
                         * self.ident.rows_per_level)

        self.norm = 0.0

        self._prime, self._exp = prime_for_domain(log_n)
        self.filter_bands = cfg.c_f * logr
        self.filter_width = cfg.c_fw * self.k
        self._fa, self._fb = _pairwise_bank(seed, ("hh-filter",),
                                            self.filter_bands, self._prime)
        self._f_base = (np.arange(self.filter_bands, dtype=np.int64)
                        * self.filter_width)
        self._f_postab = self._maybe_table(self._fa, self._fb, self._f_base,
                                           self.filter_width)

        if cfg.estimates:
            self.est_bands = cfg.c2 * self.k * max(1, (self.n - 1).bit_length())
            self.est_width = cfg.c3 * self.k
            self._ea, self._eb = _pairwise_bank(seed, ("hh-est",),
                                                self.est_bands, self._prime)
            self._e_base = (np.arange(self.est_bands, dtype=np.int64)
                            * self.est_width)
            self._e_postab = self._maybe_table(self._ea, self._eb,
                                               self._e_base, self.est_width)
        else:
            self.est_bands = 0
            self._e_postab = None

        # one flat counter buffer; the named arrays are views into it so a
        # buffered update can apply with a single gather + scatter
        n_level = self.ident.rows
        n_filter = self.filter_bands * self.filter_width
        n_est = self.est_bands * (self.est_width if cfg.estimates else 0)
        self._counters = np.zeros(n_level + n_filter + n_est, dtype=np.float64)
        self.level_counters = self._counters[:n_level]
        self.filter_counters = self._counters[n_level:n_level + n_filter]
        self.est_counters = (self._counters[n_level + n_filter:]
                             if cfg.estimates else None)
        self._postab = None
        if self._f_postab is not None and (cfg.estimates is False
                                           or self._e_postab is not None):
            idx = np.arange(self.n, dtype=np.int64)
            level_tab = (self._row_off[:, None]
                         + self._tables[self._table_off[:, None]
                                        + (idx[None, :] >> self._shifts[:, None])])
            parts = [level_tab, self._f_postab + n_level]
            if cfg.estimates:
                parts.append(self._e_postab + (n_level + n_filter))
            self._postab = np.concatenate(parts, axis=0).astype(np.int64)

        self.buffer_size = max(1, cfg.kappa_b * self.k * logr)
        self._buf_idx = np.zeros((2, self.buffer_size), dtype=np.int64)
        self._buf_delta = np.zeros((2, self.buffer_size), dtype=np.float64)
        self._counts = [0, 0]
        self._applied = [0, 0]
        self._active = 0

        # instrumentation
        self.work_per_applied_update = (self.ident.num_levels
                                        + self.filter_bands + self.est_bands
                                        + 1)
        self.last_update_steps = 0
        self.max_update_steps = 0
        self.total_steps = 0
        self.updates_received = 0

    # --- internals -----------------------------------------------------

    _POSTAB_LIMIT = 1 << 25  # entries; larger tables recompute per update

    def _band_positions(self, keys, a, b, base, width):
        keys = np.atleast_1d(np.asarray(keys, dtype=np.uint64))
        h = mulmod(a[:, None], keys[None, :], self._prime, self._exp)
        h = (h + b[:, None]) % np.uint64(self._prime)
        pos = base[:, None] + (h % np.uint64(width)).astype(np.int64)
        return pos  # (bands, len(keys))

    def _maybe_table(self, a, b, base, width):
        if a.size * self.n > self._POSTAB_LIMIT:
            return None
        return self._band_positions(np.arange(self.n), a, b, base,
                                    width).astype(np.int32)

    def _filter_positions(self, keys):
        if self._f_postab is not None:
            return self._f_postab[:, keys]
        return self._band_positions(keys, self._fa, self._fb, self._f_base,
                                    self.filter_width)

    def _est_positions(self, keys):
        if self._e_postab is not None:
            return self._e_postab[:, keys]
        return self._band_positions(keys, self._ea, self._eb, self._e_base,
                                    self.est_width)

    def _apply_one(self, i: int, delta: float) -> int:
        if self._postab is not None:
            self._counters[self._postab[:, i]] += delta
            self.norm += delta
            return self._postab.shape[0] + 1
        rows = self._row_off + self._tables[self._table_off + (i >> self._shifts)]
        self.level_counters[rows] += delta
        steps = self.ident.num_levels
        fpos = self._filter_positions(np.asarray([i]))[:, 0]
        self.filter_counters[fpos] += delta
        steps += self.filter_bands
        if self.est_counters is not None:
            epos = self._est_positions(np.asarray([i]))[:, 0]
            self.est_counters[epos] += delta
            steps += self.est_bands
        self.norm += delta
        return steps + 1

    def _drain_one(self, which: int) -> int:
        pos = self._applied[which]
        if pos >= self._counts[which]:
            return 0
        steps = self._apply_one(int(self._buf_idx[which, pos]),
                                float(self._buf_delta[which, pos]))
        self._applied[which] = pos + 1
        return steps

    def _drain_all(self, which: int):
        while self._applied[which] < self._counts[which]:
            self.total_steps += self._drain_one(which)
        self._counts[which] = 0
        self._applied[which] = 0

    # --- stream interface ----------------------------------------------

    def update(self, index: int, delta: float):
        """Buffer (index, delta) and run one pending application from the
        inactive buffer."""
        if not 0 <= index < self.n:
            raise ValueError("index out of range")
        self.updates_received += 1
        active = self._active
        if self._counts[active] == self.buffer_size:
            other = 1 - active
            # equal fill/drain rates guarantee the other side is empty
            assert self._applied[other] >= self._counts[other]
            self._counts[other] = 0
            self._applied[other] = 0
            self._active = active = other
        slot = self._counts[active]
        self._buf_idx[active, slot] = index
        self._buf_delta[active, slot] = delta
        self._counts[active] = slot + 1
        steps = self._drain_one(1 - active)
        self.last_update_steps = steps
        self.max_update_steps = max(self.max_update_steps, steps)
        self.total_steps += steps

    def flush(self):
        """Apply everything pending in both buffers."""
        self._drain_all(1 - self._active)
        self._drain_all(self._active)

    # --- queries ---------------------------------------------------------

    def _threshold(self) -> float:
        return self.norm / self.k

    def query(self) -> np.ndarray:
        """Sorted list containing every index with x_i >= norm/k; empirically
        at most c_out*k entries. Caller guarantees x >= 0 entrywise."""
        self.flush()
        if self.norm <= 0:
            return np.empty(0, dtype=np.int64)
        thresh = self._threshold()
        per_level = self.level_counters.reshape(self.ident.num_levels, -1)
        bits = [row >= thresh for row in per_level]
        outcome = dsg.Outcome(bits, self.ident.meta, self.ident.log_k)
        cands = dsg.identify(self.ident, outcome)
        if cands.size == 0:
            return cands
        pos = self._filter_positions(cands)
        keep = (self.filter_counters[pos] >= thresh).all(axis=0)
        return cands[keep]

    def point_estimate(self, i: int) -> float:
        """Upper-bound estimate of x_i: minimum estimate-table bucket holding
        i (x_i <= estimate always, in the strict turnstile)."""
        if self.est_counters is None:
            raise EstimatesDisabledError("sketch built without estimates")
        if not 0 <= i < self.n:
            raise ValueError("index out of range")
        self.flush()
        epos = self._est_positions(np.asarray([i]))[:, 0]
        return float(self.est_counters[epos].min())

    def query_with_estimates(self) -> list[tuple[int, float]]:
        """query() annotated with point estimates; entries estimated below
        norm/k are dropped."""
        if self.est_counters is None:
            raise EstimatesDisabledError("sketch built without estimates")
        cands = self.query()
        if cands.size == 0:
            return []
        thresh = self._threshold()
        ests = self.est_counters[self._est_positions(cands)].min(axis=0)
        return [(int(i), float(e)) for i, e in zip(cands, ests) if e >= thresh]

    # --- snapshots -------------------------------------------------------

    def save(self, path):
        header = json.dumps({
            "k": self.k, "n": self.n, "seed": self.seed,
            "config": vars(self.config), "norm": self.norm,
            "counts": self._counts, "applied": self._applied,
            "active": self._active,
        }, sort_keys=True).encode()
        arrays = [self.level_counters, self.filter_counters,
                  self._buf_idx.ravel(), self._buf_delta.ravel()]
        if self.est_counters is not None:
            arrays.append(self.est_counters)
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<II", _VERSION, len(header)))
            fh.write(header)
            for arr in arrays:
                fh.write(arr.tobytes())

    @classmethod
    def load(cls, path) -> "HHSketch":
        with open(path, "rb") as fh:
            if fh.read(4) != _MAGIC:
                raise ValueError("not a sparsekit sketch snapshot")
            version, hlen = struct.unpack("<II", fh.read(8))
            if version != _VERSION:
                raise ValueError(f"unsupported snapshot version {version}")
            head = json.loads(fh.read(hlen).decode())
            cfg = HHConfig(**head["config"])
            sketch = cls(head["k"], head["n"], head["seed"], cfg)

            def read_into(arr):
                buf = fh.read(arr.size * 8)
                arr[...] = np.frombuffer(buf, dtype=arr.dtype).reshape(arr.shape)

            read_into(sketch.level_counters)
            read_into(sketch.filter_counters)
            read_into(sketch._buf_idx)
            read_into(sketch._buf_delta)
            if sketch.est_counters is not None:
                read_into(sketch.est_counters)
        sketch.norm = head["norm"]
        sketch._counts = list(head["counts"])
        sketch._applied = list(head["applied"])
        sketch._active = head["active"]
        return sketch


def hh_new(k: int, n: int, seed: int = 0,
           config: HHConfig | None = None) -> HHSketch:
    return HHSketch(k, n, seed, config)

"""Seeded experiment harness.

Each scheme maps a trial seed to a TrialRecord; trial seeds are split from
the master seed up front, so runs are deterministic even with a worker pool.
Per-trial CSV output contains only deterministic fields (wall-clock stats go
to the JSON summary), which keeps reruns byte-identical.
"""

from __future__ import annotations

import io
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from . import combinatorial as comb
from . import design as dsg
from . import l2
from . import noise
from . import pipelines as pipe
from .hashing import seed_stream, split_seed
from .heavy_hitters import HHConfig, HHSketch

SCHEMES = ("gt-list", "gt-exact", "gt-noisy-fp", "gt-voting-fn", "gt-foreach",
           "hh", "hh-est", "l2-weak", "verify")

DISTRIBUTIONS = ("spikes+flat", "zipf", "adversarial-fn")

CSV_SCHEMA_VERSION = 1
_CSV_COLUMNS = ("trial", "seed", "success", "output_size", "rows",
                "inserted", "tests_read", "max_update_steps")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    scheme: str
    n: int
    k: int
    trials: int = 100
    seed: int = 0
    e0: int = 0
    e1: int = 0
    placement: str = "uniform-random"
    eps: float = 0.5
    delta: float = 0.1
    alpha: float = 0.5
    consts: dict = field(default_factory=dict)
    out: str | None = None
    fmt: str = "both"
    stream_file: str | None = None
    workers: int = 1
    min_success: float = 0.0
    n_orig: int = 0
    k_orig: int = 0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; "
                              f"choose from {', '.join(SCHEMES)}")
        if self.n < 1 or self.k < 1 or self.k > self.n:
            raise ConfigError("need 1 <= k <= n")
        if self.trials < 1:
            raise ConfigError("trials must be positive")
        self.n_orig = self.n_orig or self.n
        self.k_orig = self.k_orig or self.k
        self.n = dsg.round_up_pow2(self.n)
        self.k = dsg.round_up_pow2(self.k)

    def const(self, key, default):
        return type(default)(self.consts.get(key, default))


@dataclass
class TrialRecord:
    trial: int
    seed: int
    success: bool
    output_size: int
    rows: int
    inserted: int = 0
    tests_read: int = 0
    max_update_steps: int = 0
    wall_us: int = 0
    detail: str = ""


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list[TrialRecord]
    summary: dict


def _random_support(rng, n, k):
    return np.sort(rng.choice(n, size=k, replace=False)).astype(np.int64)


def _is_superset(output, support):
    return bool(np.isin(support, output).all())


def _exact(output, support):
    return output.size == support.size and bool((output == support).all())


# --- stream generation ----------------------------------------------------


def generate_stream(n: int, k: int, distribution: str, seed: int,
                    path=None, ref_path=None, *, spike_base: float = 10.0,
                    tail_frac: float = 0.1, skew: float = 1.1):
    """Update stream plus its dense ground truth.

    spikes+flat  — k spikes with graded masses spike_base*(1 + j/k) on top of
                   a flat tail of total mass tail_frac*spike_base (graded so
                   the heavy-hitter threshold splits them non-trivially).
    zipf         — mass rank^-skew assigned to a random index permutation.
    adversarial-fn — inserts followed by deletions that demote half of the
                   spikes below the heavy threshold (stresses strict
                   turnstile with negative deltas).
    """
    if distribution not in DISTRIBUTIONS:
        raise ConfigError(f"unknown distribution {distribution!r}")
    rng = seed_stream(seed, "stream", distribution)
    dense = np.zeros(n, dtype=np.float64)
    updates: list[tuple[int, float]] = []
    if distribution == "spikes+flat":
        spikes = rng.choice(n, size=k, replace=False)
        masses = spike_base * (1.0 + (1.0 + np.arange(k)) / k)
        tail = tail_frac * spike_base / n
        for i in range(n):
            updates.append((i, tail))
        for i, m in zip(spikes, masses):
            updates.append((int(i), float(m)))
        rng.shuffle(updates)
    elif distribution == "zipf":
        perm = rng.permutation(n)
        weights = (1.0 + np.arange(n)) ** -skew
        updates = [(int(perm[r]), float(w)) for r, w in enumerate(weights)]
        rng.shuffle(updates)
    else:  # adversarial-fn
        spikes = rng.choice(n, size=k, replace=False)
        tail = tail_frac * spike_base / n
        inserts = [(i, tail) for i in range(n)]
        inserts += [(int(i), 2.0 * spike_base) for i in spikes]
        rng.shuffle(inserts)
        deletions = [(int(i), -1.9 * spike_base) for i in spikes[: k // 2]]
        rng.shuffle(deletions)
        updates = inserts + deletions
    for i, delta in updates:
        dense[i] += delta
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            for i, delta in updates:
                fh.write(f"{i},{delta!r}\n")
    if ref_path is not None:
        np.save(ref_path, dense)
    return updates, dense


def read_stream(path) -> list[tuple[int, float]]:
    updates = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            idx, delta = line.split(",")
            updates.append((int(idx), float(delta)))
    return updates


def true_heavy_hitters(dense: np.ndarray, k: int) -> np.ndarray:
    norm = float(np.abs(dense).sum())
    if norm <= 0:
        return np.empty(0, dtype=np.int64)
    return np.flatnonzero(dense >= norm / k).astype(np.int64)


def tail_norm(x: np.ndarray, k: int) -> float:
    """l2 norm after zeroing the k largest-magnitude entries."""
    if k <= 0:
        return float(np.linalg.norm(x))
    mags = np.sort(np.abs(x))[::-1]
    return float(np.linalg.norm(mags[k:]))


# --- per-scheme trials ------------------------------------------------------


def _trial_gt_list(cfg, trial, seed):
    rng = seed_stream(seed, "trial")
    p = pipe.build_list_pipeline(cfg.k, cfg.n, seed, C=cfg.const("C", 16),
                                 c1=cfg.const("c1", 12))
    support = _random_support(rng, cfg.n, cfg.k)
    stats = dsg.DecodeStats()
    out = pipe.decode_list(p, *pipe.measure_list(p, support), stats=stats)
    ok = _is_superset(out, support) and out.size <= 2 * cfg.k
    return TrialRecord(trial, seed, ok, out.size, p.rows, stats.inserted,
                       stats.tests_read)


def _trial_gt_exact(cfg, trial, seed):
    rng = seed_stream(seed, "trial")
    p = pipe.build_exact_pipeline(cfg.k, cfg.n, seed, C=cfg.const("C", 16),
                                  c1=cfg.const("c1", 12))
    support = _random_support(rng, cfg.n, cfg.k)
    stats = dsg.DecodeStats()
    out = pipe.decode_exact(p, *pipe.measure_exact(p, support), stats=stats)
    return TrialRecord(trial, seed, _exact(out, support), out.size, p.rows,
                       stats.inserted, stats.tests_read)


def _inject_split_noise(outcomes, e0, placement, seed):
    """Spread e0 false positives uniformly over the copies, or dump them all
    into copy 0 (the adversarial overload pattern)."""
    if e0 <= 0:
        return outcomes
    if placement == "adversarial-near-defectives":
        outcomes[0] = noise.inject_noisy_noise(outcomes[0], fp_total=e0,
                                               seed=seed)
        return outcomes
    rng = seed_stream(seed, "split-noise")
    shares = np.bincount(rng.integers(0, len(outcomes), size=e0),
                         minlength=len(outcomes))
    return [noise.inject_noisy_noise(o, fp_total=int(s), seed=split_seed(seed, c))
            if s else o
            for c, (o, s) in enumerate(zip(outcomes, shares))]


def _trial_gt_noisy_fp(cfg, trial, seed):
    rng = seed_stream(seed, "trial")
    split = noise.split_e0(cfg.k, cfg.n, cfg.e0, cfg.alpha, seed,
                           C=cfg.const("C", 16), C_R=cfg.const("C_R", 6))
    support = _random_support(rng, cfg.n, cfg.k)
    outcomes = noise.measure_split(split, support)
    outcomes = _inject_split_noise(outcomes, cfg.e0, cfg.placement, seed)
    stats = dsg.DecodeStats()
    bound = noise.candidate_bound(cfg.k, cfg.n, cfg.alpha)
    try:
        out = noise.decode_race(split, outcomes,
                                budget_factor=cfg.const("budget_factor", 8),
                                stats=stats)
    except noise.RaceOverloadError:
        return TrialRecord(trial, seed, False, 0, split.rows, stats.inserted,
                           stats.tests_read, detail="overload")
    ok = _is_superset(out, support) and out.size <= bound
    return TrialRecord(trial, seed, ok, out.size, split.rows, stats.inserted,
                       stats.tests_read)


def _trial_gt_voting_fn(cfg, trial, seed):
    rng = seed_stream(seed, "trial")
    red = noise.build_voting_reduction(cfg.k, cfg.n, cfg.e1, seed,
                                       C_v=cfg.const("C_v", 4))
    support = _random_support(rng, cfg.n, cfg.k)
    outcome = noise.measure_voting(red, support)
    fn_total = cfg.k * cfg.e1
    if fn_total:
        outcome = noise.inject_voting_noise(outcome, fn_total,
                                            split_seed(seed, "fn"))
    out = noise.decode_voting(red, outcome)
    return TrialRecord(trial, seed, _exact(out, support), out.size, red.rows)


def _trial_gt_foreach(cfg, trial, seed):
    rng = seed_stream(seed, "trial")
    d = pipe.build_foreach(cfg.k, cfg.n, seed, C=cfg.const("C", 16),
                           c=cfg.const("c", 4), cprime=cfg.const("cprime", 2),
                           cdouble=cfg.const("cdouble", 4))
    support = _random_support(rng, cfg.n, cfg.k)
    stats = dsg.DecodeStats()
    out = pipe.decode_foreach(d, *pipe.measure_foreach(d, support), stats=stats)
    return TrialRecord(trial, seed, _exact(out, support), out.size, d.rows,
                       stats.inserted, stats.tests_read)


def _hh_stream(cfg, seed):
    if cfg.stream_file:
        updates = read_stream(cfg.stream_file)
        dense = np.zeros(cfg.n, dtype=np.float64)
        for i, delta in updates:
            dense[i] += delta
        return updates, dense
    dist = cfg.consts.get("dist", "spikes+flat")
    return generate_stream(cfg.n, cfg.k, dist, seed,
                           spike_base=cfg.const("spike_base", 10.0),
                           tail_frac=cfg.const("tail_frac", 0.1),
                           skew=cfg.const("skew", 1.1))


def _trial_hh(cfg, trial, seed, with_estimates=False):
    updates, dense = _hh_stream(cfg, split_seed(seed, "stream"))
    hcfg = HHConfig(C=cfg.const("C", 16), c_f=cfg.const("c_f", 2),
                    c_fw=cfg.const("c_fw", 4), estimates=with_estimates,
                    c_out=cfg.const("c_out", 4))
    sketch = HHSketch(cfg.k, cfg.n, split_seed(seed, "sketch"), hcfg)
    for i, delta in updates:
        sketch.update(i, delta)
    truth = true_heavy_hitters(dense, cfg.k)
    norm = float(dense.sum())
    if with_estimates:
        pairs = sketch.query_with_estimates()
        out = np.asarray(sorted(i for i, _ in pairs), dtype=np.int64)
        no_light = all(dense[i] > norm / (2 * cfg.k) for i, _ in pairs)
    else:
        out = sketch.query()
        no_light = True
    ok = (_is_superset(out, truth) and out.size <= hcfg.c_out * cfg.k
          and no_light)
    return TrialRecord(trial, seed, ok, out.size,
                       sketch.ident.rows + sketch.filter_counters.size
                       + (0 if sketch.est_counters is None
                          else sketch.est_counters.size) + 1,
                       max_update_steps=sketch.max_update_steps)


def l2_signal(n: int, k: int, eps: float, seed: int, amp: float = 5.0):
    """Gaussian tail plus k signed spikes of magnitude
    amp * sqrt(eps * n / k) (comfortably above the weak-system threshold)."""
    rng = seed_stream(seed, "l2-signal")
    x = rng.standard_normal(n)
    spikes = rng.choice(n, size=k, replace=False)
    signs = rng.integers(0, 2, size=k) * 2 - 1
    x[spikes] = signs * amp * np.sqrt(eps * n / k)
    return x, np.sort(spikes)


def _trial_l2_weak(cfg, trial, seed):
    design = l2.build_weak(cfg.k, cfg.n, cfg.eps, cfg.delta,
                           split_seed(seed, "weak"),
                           C=cfg.const("l2_C", 8), CT=cfg.const("l2_CT", 8))
    cs = l2.cs_build(cfg.k, cfg.n, cfg.eps, cfg.delta, split_seed(seed, "cs"))
    x, _ = l2_signal(cfg.n, cfg.k, cfg.eps, seed, amp=cfg.const("amp", 5.0))
    stats = dsg.DecodeStats()
    cands = l2.weak_identify(design, l2.weak_measure(design, x), stats)
    x_hat = l2.cs_estimate_and_prune(cs, l2.cs_measure(cs, x), cands)
    resid = tail_norm(x - x_hat, max(1, cfg.k // 2))
    ok = resid <= (1.0 + cfg.eps) * tail_norm(x, cfg.k)
    return TrialRecord(trial, seed, ok, int((x_hat != 0).sum()),
                       design.rows + cs.rows, stats.inserted,
                       stats.tests_read)


def _trial_verify(cfg, trial, seed):
    if "design_file" in cfg.consts:
        d = comb.load_design(cfg.consts["design_file"])
        if d.kind == comb.KIND_RANDOM_LIST_DISJUNCT:
            ok = comb.verify_list_disjunct(d, cfg.k,
                                           cfg.const("ell", 2 * cfg.k))
        else:
            ok = comb.verify_disjunct(d, cfg.k)
        return TrialRecord(trial, seed, bool(ok), d.n, d.m)
    kind = cfg.consts.get("design", comb.KIND_RANDOM_LIST_DISJUNCT)
    if kind == comb.KIND_RANDOM_LIST_DISJUNCT:
        d = comb.random_list_disjunct(cfg.k, cfg.n, seed,
                                      c1=cfg.const("c1", 12))
        ok = comb.verify_list_disjunct(d, cfg.k, cfg.const("ell", 2 * cfg.k))
    elif kind == comb.KIND_RANDOM_CODE_DISJUNCT:
        d = comb.random_code_disjunct(cfg.k, cfg.n, seed,
                                      c2=cfg.const("c2", 4),
                                      c3=cfg.const("c3", 4))
        ok = comb.verify_disjunct(d, cfg.k)
    elif kind == comb.KIND_KAUTZ_SINGLETON:
        d = comb.kautz_singleton(cfg.k, cfg.n)
        ok = comb.verify_disjunct(d, cfg.k)
    else:
        raise ConfigError(f"unknown design kind {kind!r}")
    return TrialRecord(trial, seed, bool(ok), d.n, d.m)


_TRIALS = {
    "gt-list": _trial_gt_list,
    "gt-exact": _trial_gt_exact,
    "gt-noisy-fp": _trial_gt_noisy_fp,
    "gt-voting-fn": _trial_gt_voting_fn,
    "gt-foreach": _trial_gt_foreach,
    "hh": lambda cfg, t, s: _trial_hh(cfg, t, s, with_estimates=False),
    "hh-est": lambda cfg, t, s: _trial_hh(cfg, t, s, with_estimates=True),
    "l2-weak": _trial_l2_weak,
    "verify": _trial_verify,
}


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run all trials; deterministic given the master seed (trial seeds are
    pre-split, results are ordered by trial index)."""
    runner = _TRIALS[config.scheme]
    seeds = [split_seed(config.seed, "trial", t) for t in range(config.trials)]

    def one(t):
        t0 = time.perf_counter_ns()
        rec = runner(config, t, seeds[t])
        rec.wall_us = (time.perf_counter_ns() - t0) // 1000
        return rec

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            records = list(pool.map(one, range(config.trials)))
    else:
        records = [one(t) for t in range(config.trials)]
    records.sort(key=lambda r: r.trial)
    return ExperimentResult(config, records, summarize(config, records))


def summarize(config: ExperimentConfig, records: list[TrialRecord]) -> dict:
    sizes = sorted(r.output_size for r in records)
    inserted = sorted(r.inserted for r in records)
    walls = sorted(r.wall_us for r in records)

    def q(values, frac):
        return values[min(len(values) - 1, int(frac * len(values)))]

    return {
        "schema_version": CSV_SCHEMA_VERSION,
        "backend": _kernels.BACKEND,
        "scheme": config.scheme,
        "n": config.n,
        "k": config.k,
        "n_orig": config.n_orig,
        "k_orig": config.k_orig,
        "trials": config.trials,
        "seed": config.seed,
        "success_rate": sum(r.success for r in records) / len(records),
        "rows": max(r.rows for r in records),
        "output_size": {"p50": q(sizes, 0.5), "p90": q(sizes, 0.9),
                        "max": sizes[-1]},
        "decode_work": {"median_inserted": q(inserted, 0.5),
                        "max_inserted": inserted[-1]},
        "max_update_steps": max(r.max_update_steps for r in records),
        "wall_us": {"p50": q(walls, 0.5), "max": walls[-1]},
    }


def records_csv(records: list[TrialRecord]) -> str:
    """Stable, versioned per-trial CSV (deterministic fields only)."""
    buf = io.StringIO()
    buf.write(f"# sparsekit-trials schema={CSV_SCHEMA_VERSION}\n")
    buf.write(",".join(_CSV_COLUMNS) + "\n")
    for r in records:
        buf.write(f"{r.trial},{r.seed},{int(r.success)},{r.output_size},"
                  f"{r.rows},{r.inserted},{r.tests_read},"
                  f"{r.max_update_steps}\n")
    return buf.getvalue()


def write_outputs(result: ExperimentResult):
    cfg = result.config
    if cfg.out is None:
        return []
    written = []
    if cfg.fmt in ("csv", "both"):
        path = cfg.out if cfg.fmt == "csv" else cfg.out + ".csv"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(records_csv(result.records))
        written.append(path)
    if cfg.fmt in ("json", "both"):
        path = cfg.out if cfg.fmt == "json" else cfg.out + ".json"
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(result.summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
        written.append(path)
    return written

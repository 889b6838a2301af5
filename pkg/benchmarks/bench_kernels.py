#!/usr/bin/env python3
"""Benchmark the compiled polynomial-hash kernel against the pure backend.

The kernel is the hot loop of every design build and decode: Horner
evaluation of a degree-(kappa-1) polynomial mod 2^61 - 1, reduced into a
bucket range. Run:

    python benchmarks/bench_kernels.py [--degrees 64,512,4096] [--keys 20000]

Both backends compute identical buckets; the table reports throughput and
the relative speedup, plus an end-to-end decode comparison.
"""

import argparse
import time

import numpy as np

from sparsekit._kernels import _fallback
from sparsekit import _kernels

M61 = (1 << 61) - 1


def bench_kernel(degree, n_keys, repeats=5):
    rng = np.random.default_rng(degree)
    coeffs = rng.integers(0, M61, size=degree, dtype=np.uint64)
    keys = rng.integers(0, 1 << 40, size=n_keys, dtype=np.uint64)
    rows = {}
    impls = {"pure": _fallback.poly_bucket_batch}
    if _kernels.BACKEND == "compiled":
        impls["compiled"] = _kernels.poly_bucket_batch
    ref = None
    for name, fn in impls.items():
        best = float("inf")
        for _ in range(repeats):
            t0 = time.perf_counter()
            out = fn(coeffs, keys, np.uint64(M61), 61, np.uint64(4096))
            best = min(best, time.perf_counter() - t0)
        if ref is None:
            ref = out
        elif not np.array_equal(ref, out):
            raise AssertionError("backends disagree")
        rows[name] = best
    return rows


def bench_decode(n_trials=30):
    """End-to-end identification decode at (k=16, n=2^14)."""
    import os
    import subprocess
    import sys

    code = (
        "import time, numpy as np, sparsekit as sk\n"
        "t0 = time.perf_counter()\n"
        "rng = sk.seed_stream(0, 'bench')\n"
        f"for t in range({n_trials}):\n"
        "    d = sk.build_identification(16, 1 << 14, seed=t)\n"
        "    s = np.sort(rng.choice(1 << 14, 16, replace=False))\n"
        "    sk.identify(d, sk.measure(d, s))\n"
        "print(time.perf_counter() - t0)\n"
    )
    out = {}
    for name, env_extra in (("compiled", {}), ("pure", {"SPARSEKIT_PURE": "1"})):
        env = dict(os.environ, **env_extra)
        res = subprocess.run([sys.executable, "-c", code], env=env,
                             capture_output=True, text=True, check=True)
        out[name] = float(res.stdout.strip()) / n_trials
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--degrees", default="64,512,4096")
    ap.add_argument("--keys", type=int, default=20_000)
    ap.add_argument("--skip-decode", action="store_true")
    args = ap.parse_args()

    print(f"active backend: {_kernels.BACKEND}")
    print(f"{'degree':>8} {'keys':>8} {'pure ms':>10} {'compiled ms':>12} "
          f"{'speedup':>8}")
    for deg in (int(d) for d in args.degrees.split(",")):
        rows = bench_kernel(deg, args.keys)
        pure_ms = rows["pure"] * 1e3
        if "compiled" in rows:
            comp_ms = rows["compiled"] * 1e3
            print(f"{deg:>8} {args.keys:>8} {pure_ms:>10.2f} {comp_ms:>12.2f} "
                  f"{pure_ms / comp_ms:>8.1f}x")
        else:
            print(f"{deg:>8} {args.keys:>8} {pure_ms:>10.2f} {'-':>12} "
                  f"{'-':>8}")

    if not args.skip_decode:
        per = bench_decode()
        print("\nend-to-end identify (k=16, n=2^14), per trial:")
        for name, secs in per.items():
            print(f"  {name:>8}: {secs * 1e3:.2f} ms")
        if "compiled" in per:
            print(f"  speedup: {per['pure'] / per['compiled']:.1f}x")


if __name__ == "__main__":
    main()

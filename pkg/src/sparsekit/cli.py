"""Command-line entry point.

``sparsekit run``        — seeded experiment harness for every scheme
``sparsekit gen-stream`` — write an "index,delta" update stream file

Exit codes: 0 when the success rate meets --min-success, 1 below it,
2 on usage or configuration errors.
"""

from __future__ import annotations

import argparse
import sys

from . import _kernels
from . import experiments as xp


def _parse_const(items):
    consts = {}
    for item in items or []:
        if "=" not in item:
            raise xp.ConfigError(f"--const expects KEY=VAL, got {item!r}")
        key, val = item.split("=", 1)
        try:
            consts[key] = int(val)
        except ValueError:
            try:
                consts[key] = float(val)
            except ValueError:
                consts[key] = val
    return consts


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparsekit",
        description="Sparse-recovery experiment harness "
                    f"(kernel backend: {_kernels.BACKEND})")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run seeded trials for one scheme")
    run.add_argument("--scheme", required=True, choices=xp.SCHEMES)
    run.add_argument("--n", type=int, required=True,
                     help="universe size (rounded up to a power of two)")
    run.add_argument("--k", type=int, required=True,
                     help="sparsity (rounded up to a power of two)")
    run.add_argument("--trials", type=int, default=100)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--e0", type=int, default=0,
                     help="false positives injected per trial (gt-noisy-fp)")
    run.add_argument("--e1", type=int, default=0,
                     help="per-defective false-negative budget (gt-voting-fn "
                          "injects k*e1 flips)")
    run.add_argument("--placement", default="uniform-random",
                     choices=["uniform-random", "adversarial-near-defectives"])
    run.add_argument("--eps", type=float, default=0.5)
    run.add_argument("--delta", type=float, default=0.1)
    run.add_argument("--alpha", type=float, default=0.5)
    run.add_argument("--const", action="append", metavar="KEY=VAL",
                     help="override a scheme constant (repeatable)")
    run.add_argument("--out", help="output path stem")
    run.add_argument("--format", default="both", choices=["csv", "json", "both"])
    run.add_argument("--stream-file", help="stream updates from this file "
                                           "(hh / hh-est)")
    run.add_argument("--design-file", help="verify a saved design snapshot "
                                           "instead of building one (verify)")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--min-success", type=float, default=0.0,
                     help="exit 1 if the success rate falls below this")

    gen = sub.add_parser("gen-stream", help="generate an update stream file")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--k", type=int, required=True)
    gen.add_argument("--distribution", default="spikes+flat",
                     choices=xp.DISTRIBUTIONS)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)
    gen.add_argument("--ref-out", help="also dump the dense ground truth (.npy)")
    gen.add_argument("--skew", type=float, default=1.1)
    gen.add_argument("--spike-base", type=float, default=10.0)
    gen.add_argument("--tail-frac", type=float, default=0.1)

    des = sub.add_parser("design", help="build a design and save its snapshot")
    des.add_argument("--kind", required=True,
                     choices=["random-list-disjunct", "random-code-disjunct",
                              "kautz-singleton"])
    des.add_argument("--n", type=int, required=True)
    des.add_argument("--k", type=int, required=True)
    des.add_argument("--seed", type=int, default=0)
    des.add_argument("--out", required=True)
    return parser


def _cmd_run(args) -> int:
    consts = _parse_const(args.const)
    if args.design_file:
        consts["design_file"] = args.design_file
    cfg = xp.ExperimentConfig(
        scheme=args.scheme, n=args.n, k=args.k, trials=args.trials,
        seed=args.seed, e0=args.e0, e1=args.e1, placement=args.placement,
        eps=args.eps, delta=args.delta, alpha=args.alpha,
        consts=consts, out=args.out, fmt=args.format,
        stream_file=args.stream_file, workers=args.workers,
        min_success=args.min_success)
    result = xp.run_experiment(cfg)
    if cfg.scheme == "verify":
        for rec in result.records:
            status = "pass" if rec.success else "FAIL"
            print(f"seed {rec.seed}: {status}")
    summary = result.summary
    print(f"scheme={summary['scheme']} n={summary['n']} k={summary['k']} "
          f"trials={summary['trials']} seed={summary['seed']}")
    print(f"success_rate={summary['success_rate']:.4f} rows={summary['rows']} "
          f"size_p50={summary['output_size']['p50']} "
          f"size_max={summary['output_size']['max']} "
          f"inserted_p50={summary['decode_work']['median_inserted']}")
    for path in xp.write_outputs(result):
        print(f"wrote {path}")
    return 0 if summary["success_rate"] >= cfg.min_success else 1


def _cmd_gen_stream(args) -> int:
    updates, dense = xp.generate_stream(
        args.n, args.k, args.distribution, args.seed, path=args.out,
        ref_path=args.ref_out, spike_base=args.spike_base,
        tail_frac=args.tail_frac, skew=args.skew)
    print(f"wrote {args.out}: {len(updates)} updates, "
          f"total mass {dense.sum():.6g}")
    return 0


def _cmd_design(args) -> int:
    from . import combinatorial as comb

    builders = {
        "random-list-disjunct": lambda: comb.random_list_disjunct(
            args.k, args.n, args.seed),
        "random-code-disjunct": lambda: comb.random_code_disjunct(
            args.k, args.n, args.seed),
        "kautz-singleton": lambda: comb.kautz_singleton(args.k, args.n),
    }
    design = builders[args.kind]()
    comb.save_design(design, args.out)
    print(f"wrote {args.out}: {design.kind} m={design.m} n={design.n}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "design":
            return _cmd_design(args)
        return _cmd_gen_stream(args)
    except (xp.ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry():
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())

"""Command-line interface: generate | run | sweep | report."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .. import biogas
from .._io import atomic_write_text
from ..ising import QuboSizeError
from . import report as report_mod
from .runs import (RunSettings, SweepSpec, execute_run, run_summary, sweep,
                   trace_csv_text)


def _add_generate(sub):
    p = sub.add_parser("generate", help="draw a random benchmark problem")
    p.add_argument("--variant", required=True, choices=biogas.VARIANTS)
    p.add_argument("--k", type=int, required=True, help="number of biomasses")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output problem JSON path")
    p.add_argument("--config", help="generator config JSON "
                                    "(defaults shipped with the package)")


def _add_run(sub):
    p = sub.add_parser("run", help="run one algorithm on a problem file")
    p.add_argument("problem", help="problem JSON from 'generate'")
    p.add_argument("--algo", required=True, choices=("trn", "quanco"))
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--solver", default="exact", choices=("exact", "sa"))
    p.add_argument("--m", type=int, default=1, help="bits per coordinate")
    p.add_argument("--r0", type=float, default=None,
                   help="initial trust-region half width (log-space)")
    p.add_argument("--r-max", type=float, default=None)
    p.add_argument("--rho-mode", default="model",
                   choices=("model", "full-curvature"))
    p.add_argument("--eps1", type=float, default=1e-10)
    p.add_argument("--eps2", type=float, default=1e-10)
    p.add_argument("--sa-sweeps", type=int, default=100)
    p.add_argument("--sa-samples", type=int, default=10)
    p.add_argument("--sa-beta-initial", type=float, default=0.1)
    p.add_argument("--sa-beta-final", type=float, default=3.0)
    p.add_argument("--sa-workers", type=int, default=1)
    p.add_argument("--exact-max-bits", type=int, default=28)


def _add_sweep(sub):
    p = sub.add_parser("sweep", help="run a cross-product experiment")
    p.add_argument("--spec", required=True, help="sweep spec JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--workers", type=int, default=1,
                   help="worker processes (results are identical either way)")


def _add_report(sub):
    p = sub.add_parser("report", help="evaluate checks on a sweep directory")
    p.add_argument("--dir", required=True, help="sweep output directory")


def _cmd_generate(args, parser) -> int:
    if args.k < 1:
        parser.error("--k must be >= 1")
    if args.config:
        cfg = biogas.load_generator_config(args.config).with_seed(args.seed)
    else:
        cfg = biogas.default_generator_config(args.variant, seed=args.seed)
    problem = biogas.generate_problem(cfg, args.k, args.variant)
    biogas.save_problem(problem, args.out)
    k_star, x_star, f_min = biogas.true_minimum(problem)
    optima = np.array([biogas.univariate_optimum(b, problem.revenue)[0]
                       for b in problem.biomasses])
    print(f"wrote {args.variant} problem with K={problem.k} to {args.out}")
    print(f"true minimum: f_min={f_min!r} via biomass {k_star} "
          f"at feed rate {x_star:.6g} (HRT {1.0 / x_star:.4g} days)"
          if x_star > 0 else
          f"true minimum: f_min={f_min!r} (feeding nothing)")
    print(f"univariate optima: min={optima.min():.4g} "
          f"median={np.median(optima):.4g} max={optima.max():.4g}")
    return 0


def _cmd_run(args, parser) -> int:
    if args.iters < 1:
        parser.error("--iters must be >= 1")
    problem = biogas.load_problem(args.problem)
    if args.solver == "sa":
        solver_params = {
            "sweeps": args.sa_sweeps, "num_samples": args.sa_samples,
            "beta_initial": args.sa_beta_initial,
            "beta_final": args.sa_beta_final, "workers": args.sa_workers,
        }
    else:
        solver_params = {"max_bits": args.exact_max_bits}
    kwargs = {}
    if args.r0 is not None:
        kwargs["r0"] = args.r0
    if args.r_max is not None:
        kwargs["r_max"] = args.r_max
    settings = RunSettings(
        algo=args.algo, iterations=args.iters, solver=args.solver,
        bits_per_dim=args.m, solver_params=solver_params,
        rho_mode=args.rho_mode, eps1=args.eps1, eps2=args.eps2, **kwargs,
    )
    _, _, f_min = biogas.true_minimum(problem)
    try:
        trace = execute_run(problem, settings, args.seed)
    except QuboSizeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print("hint: rerun with --solver sa (annealing handles large QUBOs)",
              file=sys.stderr)
        return 1
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = run_summary(args.problem, problem, settings, args.seed,
                          trace, f_min)
    atomic_write_text(out / "trace.csv", trace_csv_text(trace))
    atomic_write_text(out / "summary.json",
                      json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"{args.algo}: f {trace.f_initial:.6g} -> {trace.f_final:.6g}, "
          f"normalized cost {summary['normalized_cost']:.4g}, "
          f"{summary['iterations']} iterations ({trace.reason})")
    print(f"outputs: {out / 'trace.csv'}, {out / 'summary.json'}")
    return 0


def _cmd_sweep(args, parser) -> int:
    if args.workers < 1:
        parser.error("--workers must be >= 1")
    try:
        spec = SweepSpec.from_file(args.spec)
    except (OSError, KeyError, ValueError) as exc:
        parser.error(f"bad sweep spec {args.spec!r}: {exc}")
    out = sweep(spec, args.out, workers=args.workers)
    n = (len(spec.variants) * len(spec.k_values) * len(spec.algorithms)
         * len(spec.seeds))
    print(f"swept {n} runs into {out}")
    return 0


def _cmd_report(args, parser) -> int:
    try:
        rows = report_mod.evaluate(args.dir)
    except report_mod.ReportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(report_mod.render(rows))
    failed = [r for r in rows if r[3] == "FAIL"]
    return 1 if failed else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="quanco",
        description="Trust-region Newton with binarised subproblems: "
                    "benchmark problem generation, runs, sweeps, reports.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_generate(sub)
    _add_run(sub)
    _add_sweep(sub)
    _add_report(sub)
    args = parser.parse_args(argv)
    handler = {
        "generate": _cmd_generate,
        "run": _cmd_run,
        "sweep": _cmd_sweep,
        "report": _cmd_report,
    }[args.command]
    return handler(args, parser)


if __name__ == "__main__":
    sys.exit(main())

"""Evaluate acceptance-style checks from a sweep directory.

The report inspects the sweep CSVs and prints one line per criterion in
the suite's A1..A9 numbering: quality and scaling checks (A7, A8) and the
determinism prerequisites it can see in the data; unit-level criteria that
need purpose-built instances are marked as covered by the test suite
instead.
"""
from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

import numpy as np


class ReportError(RuntimeError):
    """Raised when the sweep directory lacks the expected outputs."""


def _read_csv(path: Path) -> list[dict]:
    if not path.is_file():
        raise ReportError(f"missing {path.name} in {path.parent}; "
                          "run a sweep into this directory first")
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _slope(k_values, times) -> float:
    """Least-squares slope of log(time) against log(K)."""
    lx = np.log(np.asarray(k_values, dtype=float))
    ly = np.log(np.asarray(times, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])


def evaluate(sweep_dir) -> list[tuple[str, str, str, str]]:
    """Rows (criterion, expected, observed, verdict) for the sweep."""
    out = Path(sweep_dir)
    summary = _read_csv(out / "summary.csv")
    long_rows = _read_csv(out / "long.csv")
    timing_rows = _read_csv(out / "timing.csv")
    if not summary:
        raise ReportError(f"summary.csv in {out} contains no completed runs")

    rows: list[tuple[str, str, str, str]] = []
    skip = ("covered by the unit/acceptance test suite; "
            "not derivable from sweep outputs")
    for name in ("A1 binarised subproblem correctness",
                 "A2 dense-coupling guarantee",
                 "A3 discretisation error bound",
                 "A4 benchmark derivatives vs finite differences",
                 "A5 single-ingredient optimality oracle",
                 "A6 annealing solution quality"):
        rows.append((name, "-", skip, "SKIP"))

    # A7-style quality ordering per (variant, K) cell present in the sweep.
    means: dict[tuple, dict[str, float]] = defaultdict(dict)
    for rec in summary:
        means[(rec["variant"], int(rec["K"]))][rec["algo"]] = \
            float(rec["mean_final_normcost"])
    compared = False
    for (variant, k), algs in sorted(means.items()):
        if {"trn", "quanco"} <= set(algs):
            compared = True
            ok = algs["quanco"] < algs["trn"]
            rows.append((
                f"A7 quality ordering ({variant}, K={k})",
                "mean final normcost: quanco < trn",
                f"quanco={algs['quanco']:.4g}, trn={algs['trn']:.4g}",
                "PASS" if ok else "FAIL",
            ))
    if not compared:
        rows.append(("A7 quality ordering",
                     "mean final normcost: quanco < trn",
                     "sweep lacks a cell with both algorithms", "SKIP"))

    # Incumbent monotonicity and normalised cost range over all runs.
    worst_increase = 0.0
    nc_lo, nc_hi = np.inf, -np.inf
    by_run: dict[tuple, list[tuple[int, float, float]]] = defaultdict(list)
    for rec in long_rows:
        key = (rec["variant"], rec["K"], rec["algo"], rec["solver"],
               rec["M"], rec["seed"])
        by_run[key].append((int(rec["iter"]), float(rec["f"]),
                            float(rec["normcost"])))
    for recs in by_run.values():
        recs.sort()
        fs = np.array([f for _, f, _ in recs])
        ncs = np.array([nc for _, _, nc in recs])
        if len(fs) > 1:
            worst_increase = max(worst_increase, float(np.max(np.diff(fs))))
        nc_lo = min(nc_lo, float(ncs.min()))
        nc_hi = max(nc_hi, float(ncs.max()))
    rows.append(("A7 monotone incumbent",
                 "f never increases along a run",
                 f"worst increase {worst_increase:.3g}",
                 "PASS" if worst_increase <= 0.0 else "FAIL"))
    rows.append(("A7 normalised cost range",
                 "normcost within [0, 1]",
                 f"observed [{nc_lo:.4g}, {nc_hi:.4g}]",
                 "PASS" if 0.0 <= nc_lo and nc_hi <= 1.0 else "FAIL"))

    # A8-style scaling: per-iteration wall time against K per algorithm.
    per_iter: dict[tuple, dict[int, float]] = defaultdict(dict)
    frac: dict[int, float] = {}
    algo_rows: dict[tuple, list[dict]] = defaultdict(list)
    for rec in timing_rows:
        algo_rows[(rec["algo"], int(rec["K"]))].append(rec)
    for (algo, k), recs in algo_rows.items():
        totals = [float(r["t_deriv_us"]) + float(r["t_build_us"]) +
                  float(r["t_solve_us"]) for r in recs]
        per_iter[(algo,)][k] = float(np.mean(totals))
        if algo == "trn":
            solve = sum(float(r["t_solve_us"]) for r in recs)
            frac[k] = solve / max(sum(totals), 1e-300)
    for algo in ("quanco", "trn"):
        curve = per_iter.get((algo,), {})
        if len(curve) >= 3:
            ks = sorted(curve)
            slope = _slope(ks, [curve[k] for k in ks])
            if algo == "quanco":
                ok = 1.6 <= slope <= 2.4
                expected = "log-log slope within 2.0 +/- 0.4"
            else:
                ok = slope >= 2.3
                expected = "log-log slope >= 2.3"
            rows.append((f"A8 time/iteration scaling ({algo})", expected,
                         f"slope {slope:.2f} over K={ks}",
                         "PASS" if ok else "FAIL"))
        else:
            rows.append((f"A8 time/iteration scaling ({algo})",
                         "log-log slope against K",
                         "needs timing data for >= 3 values of K", "SKIP"))
    if len(frac) >= 2:
        ks = sorted(frac)
        ok = frac[ks[-1]] > frac[ks[0]]
        rows.append(("A8 trn subproblem share",
                     "subproblem fraction of time grows with K",
                     ", ".join(f"K={k}: {frac[k]:.2f}" for k in ks),
                     "PASS" if ok else "FAIL"))
    else:
        rows.append(("A8 trn subproblem share",
                     "subproblem fraction of time grows with K",
                     "needs trn timing data for >= 2 values of K", "SKIP"))

    rows.append(("A9 determinism", "-", skip, "SKIP"))
    return rows


def render(rows) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(3)]
    header = ("criterion".ljust(widths[0]) + "  " +
              "expected".ljust(widths[1]) + "  " +
              "observed".ljust(widths[2]) + "  verdict")
    lines = [header, "-" * len(header)]
    for name, expected, observed, verdict in rows:
        lines.append(name.ljust(widths[0]) + "  " + expected.ljust(widths[1]) +
                     "  " + observed.ljust(widths[2]) + "  " + verdict)
    return "\n".join(lines)

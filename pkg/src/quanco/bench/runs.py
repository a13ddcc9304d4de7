"""Benchmark execution: single runs, sweeps, and their CSV outputs.

A sweep is the cross product (variant, K, algorithm, seed).  Each job is a
pure function of its cell and seed: the seed draws the problem, seeds the
annealer and fixes every tie-break, so a sweep re-run -- serial or via the
worker pool -- reproduces its outputs byte for byte (timing files aside,
which record wall-clock measurements).
"""
from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import biogas
from .._io import atomic_write_text
from ..bounds import eta_inverse
from ..driver import QuancoConfig, quanco_minimize
from ..trace import OptimizationTrace
from ..trn import TrnConfig, trn_minimize

SWEEP_SCHEMA = "quanco-sweep/1"
RUN_SCHEMA = "quanco-run/1"

ALGORITHMS = ("trn", "quanco")

TRACE_HEADER = "iter,f,rho,accepted,r_norm,t_deriv_us,t_build_us,t_solve_us"
LONG_HEADER = "variant,K,algo,solver,M,seed,iter,f,normcost"
TIMING_HEADER = "variant,K,algo,solver,M,seed,iter,t_deriv_us,t_build_us,t_solve_us"
RUNS_HEADER = "variant,K,algo,solver,M,seed,status,error"
SUMMARY_HEADER = "variant,K,algo,solver,M,n_seeds,mean_final_normcost"

#: Trust-region defaults for benchmark runs, expressed in the log-space
#: coordinates the optimisers work in.  An initial half width of 0.5 is the
#: pullback of an x-space half width of 0.5 * x0 through d(log x) = dx/x.
DEFAULT_R0 = 0.5
DEFAULT_R_MAX = 5.0


@dataclass(frozen=True)
class RunSettings:
    """Algorithm parameters shared by single runs and sweep cells."""

    algo: str
    iterations: int = 100
    solver: str = "exact"
    bits_per_dim: int = 1
    solver_params: dict = field(default_factory=dict)
    r0: float = DEFAULT_R0
    r_max: float = DEFAULT_R_MAX
    rho_mode: str = "model"
    eps1: float = 1e-10
    eps2: float = 1e-10

    def __post_init__(self):
        if self.algo not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algo!r}; "
                             f"known: {', '.join(ALGORITHMS)}")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")

    @property
    def solver_label(self) -> str:
        return self.solver if self.algo == "quanco" else "none"

    @property
    def bits_label(self) -> int:
        return self.bits_per_dim if self.algo == "quanco" else 0


def execute_run(problem: biogas.BiomassProblem, settings: RunSettings,
                seed: int) -> OptimizationTrace:
    """Run one algorithm on one problem from the standard start point."""
    cost_y = biogas.transformed_cost(problem)
    y0 = eta_inverse(cost_y.spec, biogas.initial_point(problem.k))
    if settings.algo == "trn":
        cfg = TrnConfig(r0=settings.r0, r_max=settings.r_max,
                        max_iter=settings.iterations,
                        eps1=settings.eps1, eps2=settings.eps2,
                        rho_mode=settings.rho_mode)
        return trn_minimize(cost_y, y0, cfg)
    cfg = QuancoConfig(bits_per_dim=settings.bits_per_dim,
                       r0=settings.r0, r_max=settings.r_max,
                       max_iter=settings.iterations,
                       eps1=settings.eps1, eps2=settings.eps2,
                       rho_mode=settings.rho_mode, solver=settings.solver,
                       solver_params=settings.solver_params, seed=seed)
    return quanco_minimize(cost_y, y0, cfg)


def normcost_curve(trace: OptimizationTrace, f_min: float) -> np.ndarray:
    """Per-iteration normalised cost; all zeros when the metric is undefined."""
    denom = trace.f_initial - f_min
    if denom <= 0:
        return np.zeros(len(trace.records))
    return (trace.f_values - f_min) / denom


def run_summary(problem_name: str, problem: biogas.BiomassProblem,
                settings: RunSettings, seed: int,
                trace: OptimizationTrace, f_min: float) -> dict:
    denom = trace.f_initial - f_min
    return {
        "schema": RUN_SCHEMA,
        "problem": problem_name,
        "variant": problem.variant,
        "K": problem.k,
        "algo": settings.algo,
        "solver": settings.solver_label,
        "M": settings.bits_label,
        "iterations": len(trace.records),
        "seed": seed,
        "f_min": f_min,
        "f_initial": trace.f_initial,
        "f_final": trace.f_final,
        "normalized_cost": biogas.normalized_cost(trace, f_min) if denom > 0 else 0.0,
        "normalized_cost_defined": bool(denom > 0),
        "suboptimality": biogas.suboptimality(trace, f_min),
        "converged": trace.converged,
        "reason": trace.reason,
        "accepted_steps": trace.num_accepted,
        "time_seconds": {
            "derivatives": sum(r.time_derivatives for r in trace.records),
            "qubo_build": sum(r.time_qubo_build for r in trace.records),
            "solver": sum(r.time_solver for r in trace.records),
        },
    }


def trace_csv_text(trace: OptimizationTrace) -> str:
    lines = [TRACE_HEADER]
    for r in trace.records:
        lines.append(
            f"{r.k},{r.f!r},{r.rho!r},{int(r.accepted)},{r.radius_max!r},"
            f"{r.time_derivatives * 1e6!r},{r.time_qubo_build * 1e6!r},"
            f"{r.time_solver * 1e6!r}"
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Sweeps


@dataclass(frozen=True)
class SweepSpec:
    """Cross product of variants, sizes, algorithms and seeds."""

    variants: tuple[str, ...]
    k_values: tuple[int, ...]
    algorithms: tuple[str, ...]
    seeds: tuple[int, ...]
    iterations: int = 100
    solver: str = "exact"
    bits_per_dim: int = 1
    solver_params: dict = field(default_factory=dict)
    generator: dict | None = None  # optional per-variant {"mean":..., "covariance":...}

    def __post_init__(self):
        if not self.variants or not self.k_values or not self.algorithms \
                or not self.seeds:
            raise ValueError("variants, k_values, algorithms and seeds must "
                             "all be non-empty")
        for v in self.variants:
            if v not in biogas.VARIANTS:
                raise ValueError(f"unknown yield variant {v!r}")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ValueError(f"unknown algorithm {a!r}")
        if any(k < 1 for k in self.k_values):
            raise ValueError("k values must be >= 1")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be distinct")

    @classmethod
    def from_dict(cls, doc: dict) -> "SweepSpec":
        schema = doc.get("schema")
        if schema != SWEEP_SCHEMA:
            raise ValueError(f"unsupported sweep schema {schema!r}, "
                             f"expected {SWEEP_SCHEMA!r}")
        return cls(
            variants=tuple(doc["variants"]),
            k_values=tuple(int(k) for k in doc["k"]),
            algorithms=tuple(doc["algorithms"]),
            seeds=tuple(int(s) for s in doc["seeds"]),
            iterations=int(doc.get("iterations", 100)),
            solver=doc.get("solver", "exact"),
            bits_per_dim=int(doc.get("m", 1)),
            solver_params=doc.get("solver_params", {}),
            generator=doc.get("generator"),
        )

    @classmethod
    def from_file(cls, path) -> "SweepSpec":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return {
            "schema": SWEEP_SCHEMA,
            "variants": list(self.variants),
            "k": list(self.k_values),
            "algorithms": list(self.algorithms),
            "seeds": list(self.seeds),
            "iterations": self.iterations,
            "solver": self.solver,
            "m": self.bits_per_dim,
            "solver_params": self.solver_params,
            "generator": self.generator,
        }

    def settings_for(self, algo: str) -> RunSettings:
        return RunSettings(algo=algo, iterations=self.iterations,
                           solver=self.solver, bits_per_dim=self.bits_per_dim,
                           solver_params=self.solver_params)

    def jobs(self) -> list[dict]:
        """Job descriptions in canonical (variant, K, algo, seed) order."""
        out = []
        for variant in self.variants:
            for k in self.k_values:
                for algo in self.algorithms:
                    for seed in self.seeds:
                        out.append({
                            "variant": variant, "k": k, "algo": algo,
                            "seed": seed, "spec": self.to_dict(),
                        })
        return out


def _generator_config(spec_doc: dict, variant: str, seed: int) -> biogas.MvnGenConfig:
    gen = spec_doc.get("generator") or {}
    if variant in gen:
        sec = gen[variant]
        return biogas.MvnGenConfig(
            mean=np.asarray(sec["mean"], dtype=float),
            covariance=np.asarray(sec["covariance"], dtype=float),
            seed=seed,
        )
    return biogas.default_generator_config(variant, seed=seed)


def run_job(job: dict) -> dict:
    """Execute one sweep cell/seed; must stay importable for process pools."""
    variant, k, algo, seed = job["variant"], job["k"], job["algo"], job["seed"]
    spec_doc = job["spec"]
    settings = RunSettings(
        algo=algo, iterations=int(spec_doc["iterations"]),
        solver=spec_doc["solver"], bits_per_dim=int(spec_doc["m"]),
        solver_params=spec_doc["solver_params"],
    )
    base = {"variant": variant, "k": k, "algo": algo,
            "solver": settings.solver_label, "m": settings.bits_label,
            "seed": seed}
    try:
        gen_cfg = _generator_config(spec_doc, variant, seed)
        problem = biogas.generate_problem(gen_cfg, k, variant)
        _, _, f_min = biogas.true_minimum(problem)
        trace = execute_run(problem, settings, seed)
    except Exception as exc:  # record the failure, keep the sweep going
        return {**base, "status": "failed", "error": f"{type(exc).__name__}: {exc}",
                "f": [], "normcost": [], "timing": []}
    curve = normcost_curve(trace, f_min)
    return {
        **base,
        "status": "ok",
        "error": "",
        "f": [r.f for r in trace.records],
        # tolist, not list: repr of numpy scalars would corrupt the CSVs
        "normcost": curve.tolist(),
        "timing": [(r.time_derivatives * 1e6, r.time_qubo_build * 1e6,
                    r.time_solver * 1e6) for r in trace.records],
    }


def _csv_escape(text: str) -> str:
    if any(c in text for c in ',"\n\r'):
        return '"' + text.replace('"', '""') + '"'
    return text


def sweep(spec: SweepSpec, out_dir, workers: int = 1) -> Path:
    """Run all jobs and write long/timing/runs/summary CSVs atomically.

    Results are emitted in canonical job order whatever the execution
    order, so a parallel sweep's records match a serial one's.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = spec.jobs()
    if workers == 1:
        results = [run_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_job, jobs))

    long_lines = [LONG_HEADER]
    timing_lines = [TIMING_HEADER]
    run_lines = [RUNS_HEADER]
    cells: dict[tuple, list[float]] = {}
    for res in results:
        prefix = (f"{res['variant']},{res['k']},{res['algo']},"
                  f"{res['solver']},{res['m']},{res['seed']}")
        run_lines.append(f"{prefix},{res['status']},{_csv_escape(res['error'])}")
        if res["status"] != "ok":
            continue
        for i, (f_val, nc) in enumerate(zip(res["f"], res["normcost"])):
            long_lines.append(f"{prefix},{i},{f_val!r},{nc!r}")
        for i, (td, tb, ts) in enumerate(res["timing"]):
            timing_lines.append(f"{prefix},{i},{td!r},{tb!r},{ts!r}")
        cell = (res["variant"], res["k"], res["algo"], res["solver"], res["m"])
        cells.setdefault(cell, []).append(res["normcost"][-1])

    summary_lines = [SUMMARY_HEADER]
    for cell in sorted(cells):
        finals = cells[cell]
        mean = sum(finals) / len(finals)
        summary_lines.append(
            f"{cell[0]},{cell[1]},{cell[2]},{cell[3]},{cell[4]},"
            f"{len(finals)},{mean!r}"
        )

    atomic_write_text(out / "long.csv", "\n".join(long_lines) + "\n")
    atomic_write_text(out / "timing.csv", "\n".join(timing_lines) + "\n")
    atomic_write_text(out / "runs.csv", "\n".join(run_lines) + "\n")
    atomic_write_text(out / "summary.csv", "\n".join(summary_lines) + "\n")
    atomic_write_text(out / "sweep.json",
                      json.dumps(spec.to_dict(), indent=2, sort_keys=True) + "\n")
    return out

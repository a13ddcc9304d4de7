"""Trust-region Newton with a binarised subproblem.

Each iteration freezes a quadratic model at the incumbent, binarises the
box trust region into a QUBO (:mod:`quanco.subproblem`), hands it to an
Ising-style solver (:mod:`quanco.ising`) and decodes the best bit vector
into a candidate step.  The usual ratio test accepts or rejects: rejection
shrinks the per-coordinate half widths by 4, and a strong step (rho > 3/4)
that reached the box boundary doubles them, capped at r_max.  Convergence
is declared after an accepted step whose actual or predicted change falls
below the thresholds.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .ising import IsingSolver, SaConfig, SaSolver, solver_registry
from .model import DifferentiableCost, model_decrease, taylor_at
from .subproblem import TrustBox, build_qubo, decode_step
from .trace import IterationRecord, OptimizationTrace

_BOUNDARY_RTOL = 1e-8


@dataclass(frozen=True)
class QuancoConfig:
    """Driver parameters.

    ``r0``/``r_max`` may be scalars (same half width for every coordinate)
    or per-coordinate vectors.  ``solver`` names a registry entry; its
    parameters ride in ``solver_params``, and for ``sa`` the driver seed is
    used unless the params carry their own.
    """

    bits_per_dim: int = 1
    r0: float | np.ndarray = 0.5
    r_max: float | np.ndarray = 5.0
    max_iter: int = 100
    eps1: float = 1e-10
    eps2: float = 1e-10
    rho_mode: str = "model"
    solver: str = "exact"
    solver_params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.bits_per_dim < 1:
            raise ValueError("bits_per_dim must be >= 1")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


def expected_improvement(model, step, mode: str = "model") -> float:
    """Predicted change used as the denominator of the ratio test.

    Delegates to :func:`quanco.model.model_decrease`; "model" weights the
    curvature term by 1/2, "full-curvature" leaves it unweighted.
    """
    return model_decrease(model, step, mode)


def boundary_test(step, half_width, rtol: float = _BOUNDARY_RTOL) -> bool:
    """True when the step touches the box boundary: max|p_k|/r_k within
    ``rtol`` of 1 (and never above, by construction of the grid)."""
    ratio = float(np.max(np.abs(step) / half_width))
    return ratio >= 1.0 - rtol


def _make_solver(cfg: QuancoConfig) -> IsingSolver:
    if cfg.solver == "sa" and "seed" not in cfg.solver_params:
        return SaSolver(SaConfig(seed=cfg.seed, **cfg.solver_params))
    return solver_registry(cfg.solver, **cfg.solver_params)


def quanco_minimize(
    f: DifferentiableCost, x0, config: QuancoConfig, solver: IsingSolver | None = None
) -> OptimizationTrace:
    """Minimise ``f`` from ``x0`` with the binarised trust-region loop.

    A solver instance may be injected; by default one is constructed from
    the config (a fresh annealer seeded from ``config.seed``, so reruns
    with identical inputs reproduce the trace exactly).
    """
    x = np.array(x0, dtype=float)
    k_dim = x.shape[0]
    fx = float(f.value(x))
    if not np.isfinite(fx):
        raise ValueError("f(x0) is not finite")
    r = np.broadcast_to(np.asarray(config.r0, dtype=float), (k_dim,)).copy()
    r_max = np.broadcast_to(np.asarray(config.r_max, dtype=float), (k_dim,)).copy()
    if np.any(r <= 0) or np.any(r_max < r):
        raise ValueError("need 0 < r0 <= r_max componentwise")
    if solver is None:
        solver = _make_solver(config)

    trace = OptimizationTrace(f_initial=fx)
    model = None  # cached while x is unchanged

    for k in range(config.max_iter):
        if model is None:
            t0 = time.perf_counter()
            model = taylor_at(f, x)
            t_deriv = time.perf_counter() - t0
        else:
            t_deriv = 0.0

        t0 = time.perf_counter()
        qubo = build_qubo(model, TrustBox(x, r), config.bits_per_dim)
        t_build = time.perf_counter() - t0

        t0 = time.perf_counter()
        result = solver.solve(qubo)
        t_solve = time.perf_counter() - t0

        p = decode_step(qubo, result.best_bits)
        f_new = float(f.value(x + p))
        predicted = expected_improvement(model, p, config.rho_mode)
        actual = f_new - fx
        with np.errstate(divide="ignore", invalid="ignore"):
            rho = actual / predicted if predicted != 0 else np.sign(actual) * np.inf

        radius_used = float(np.max(r))
        reject = (rho < 0.25) or (f_new > fx)
        if reject:
            r = r / 4.0
        else:
            if rho > 0.75 and boundary_test(p, r):
                r = np.minimum(2.0 * r, r_max)
            x = x + p
            prev_f, fx = fx, f_new
            model = None

        trace.records.append(IterationRecord(
            k=k, f=fx, rho=float(rho), accepted=not reject,
            radius_max=radius_used, step_norm=float(np.linalg.norm(p)),
            time_derivatives=t_deriv, time_qubo_build=t_build,
            time_solver=t_solve,
        ))

        if not reject:
            if abs(fx - prev_f) <= config.eps1:
                trace.converged = True
                trace.reason = "actual change below eps1"
                break
            if abs(predicted) <= config.eps2:
                trace.converged = True
                trace.reason = "predicted change below eps2"
                break
    if not trace.converged:
        trace.reason = "max iterations reached"
    trace.final_point = x
    return trace

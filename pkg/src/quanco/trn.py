"""Spherical trust-region Newton with an exact subproblem solver.

The subproblem min g.p + 0.5 p^T H p s.t. ||p|| <= radius is solved through
an eigendecomposition of H and a safeguarded Newton iteration on the secular
equation phi(nu) = 1/||p(nu)|| - 1/radius, including the hard case.  The
outer loop uses the same ratio test and radius update rule as the binarised
driver (shrink by 4 on rejection, double capped at r_max on strong steps
that reach the boundary), so the two differ only in trust-region geometry
and subproblem solver.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .model import DifferentiableCost, QuadraticModel, model_decrease, taylor_at
from .trace import IterationRecord, OptimizationTrace

_SECULAR_TOL = 1e-10
_SECULAR_MAX_ITER = 100
_BOUNDARY_RTOL = 1e-8


@dataclass(frozen=True)
class TrnConfig:
    r0: float = 0.5
    r_max: float = 5.0
    max_iter: int = 100
    eps1: float = 1e-10
    eps2: float = 1e-10
    rho_mode: str = "model"

    def __post_init__(self):
        if self.r0 <= 0 or self.r_max < self.r0:
            raise ValueError("need 0 < r0 <= r_max")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    """Fix the sign of an eigenvector so ties are broken deterministically."""
    i = int(np.argmax(np.abs(v)))
    return -v if v[i] < 0 else v


def _secular_root(lam, ghat, radius, nu_lo):
    """Solve 1/||p(nu)|| = 1/radius for nu > nu_lo, p(nu) = -ghat/(lam+nu).

    phi is increasing in nu; Newton steps are safeguarded by the enclosing
    bracket.  Assumes ||p|| > radius somewhere above nu_lo.
    """
    gnorm = float(np.linalg.norm(ghat))
    lo = nu_lo
    # ||p(nu)|| <= gnorm/(lam_min+nu) <= radius at this nu, so it brackets.
    hi = nu_lo + gnorm / radius
    nu = min(hi, max(nu_lo + gnorm / radius * 0.5, np.finfo(float).tiny))
    for _ in range(_SECULAR_MAX_ITER):
        denom = lam + nu
        with np.errstate(divide="ignore", over="ignore"):
            wvec = ghat / denom
            pn = float(np.linalg.norm(wvec))
        if pn == 0.0 or not np.isfinite(pn):
            phi = -1.0 / radius if not np.isfinite(pn) else np.inf
        else:
            phi = 1.0 / pn - 1.0 / radius
        if np.isfinite(phi) and abs(phi) <= _SECULAR_TOL / radius:
            break
        if phi < 0:
            lo = nu
        else:
            hi = nu
        if np.isfinite(pn) and pn > 0.0:
            dphi = float(np.sum(wvec * wvec / denom)) / pn**3
            nu_next = nu - phi / dphi if dphi > 0 else np.nan
        else:
            nu_next = np.nan
        if not np.isfinite(nu_next) or not (lo < nu_next < hi):
            nu_next = 0.5 * (lo + hi)
        if nu_next == nu:
            break
        nu = nu_next
    return nu


def _sphere_step(hess, grad, radius):
    """Exact minimiser of the model over the ball; returns (p, nu).

    nu is the Lagrange multiplier of the norm constraint:
    (H + nu I) p = -g with nu >= max(0, -lambda_min) and either nu = 0 or
    ||p|| = radius.
    """
    lam, vecs = np.linalg.eigh(hess)
    return _sphere_step_factored(lam, vecs, grad, radius)


def solve_sphere_subproblem(model: QuadraticModel, radius: float) -> np.ndarray:
    """Exact step for min m(x0 + p) subject to ||p||_2 <= radius."""
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    p, _ = _sphere_step(model.hess, model.grad, radius)
    return p


def trn_minimize(f: DifferentiableCost, x0, config: TrnConfig) -> OptimizationTrace:
    """Minimise ``f`` from ``x0`` with the spherical trust-region loop.

    Derivatives and the eigendecomposition are only recomputed after an
    accepted step; a rejection shrinks the radius and re-solves the cached
    subproblem.
    """
    x = np.array(x0, dtype=float)
    fx = float(f.value(x))
    if not np.isfinite(fx):
        raise ValueError("f(x0) is not finite")
    radius = config.r0
    trace = OptimizationTrace(f_initial=fx)
    factors = None  # (model, lam, vecs) cached while x is unchanged

    for k in range(config.max_iter):
        if factors is None:
            t0 = time.perf_counter()
            model = taylor_at(f, x)
            t_deriv = time.perf_counter() - t0
            t0 = time.perf_counter()
            lam, vecs = np.linalg.eigh(model.hess)
            t_factor = time.perf_counter() - t0
            factors = (model, lam, vecs)
        else:
            model, lam, vecs = factors
            t_deriv = 0.0
            t_factor = 0.0

        t0 = time.perf_counter()
        p, _ = _sphere_step_factored(lam, vecs, model.grad, radius)
        t_solve = t_factor + (time.perf_counter() - t0)

        f_new = float(f.value(x + p))
        predicted = model_decrease(model, p, config.rho_mode)
        actual = f_new - fx
        with np.errstate(divide="ignore", invalid="ignore"):
            rho = actual / predicted if predicted != 0 else np.sign(actual) * np.inf
        step_norm = float(np.linalg.norm(p))

        radius_used = radius
        reject = (rho < 0.25) or (f_new > fx)
        if reject:
            radius = radius / 4.0
        else:
            if rho > 0.75 and step_norm >= radius * (1.0 - _BOUNDARY_RTOL):
                radius = min(2.0 * radius, config.r_max)
            x = x + p
            prev_f, fx = fx, f_new
            factors = None

        trace.records.append(IterationRecord(
            k=k, f=fx, rho=float(rho), accepted=not reject,
            radius_max=radius_used, step_norm=step_norm,
            time_derivatives=t_deriv, time_qubo_build=0.0, time_solver=t_solve,
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


def _sphere_step_factored(lam, vecs, grad, radius):
    """Sphere subproblem on a cached eigendecomposition H = V diag(lam) V^T."""
    ghat = vecs.T @ grad
    lam_min = float(lam[0])
    if lam_min > 0:
        p = vecs @ (-ghat / lam)
        if np.linalg.norm(p) <= radius:
            return p, 0.0
    nu_lo = max(0.0, -lam_min)
    scale = max(1.0, float(np.abs(lam).max()), float(np.linalg.norm(ghat)))
    low_space = lam <= lam_min + 1e-12 * scale
    if np.all(np.abs(ghat[low_space]) <= 1e-12 * scale):
        # Hard case: no gradient component along the lowest eigenspace.
        wvec = np.where(low_space, 0.0, -ghat / np.where(low_space, 1.0, lam + nu_lo))
        pbar = vecs @ wvec
        norm_pbar = float(np.linalg.norm(pbar))
        if norm_pbar <= radius:
            if lam_min >= 0:
                return pbar, 0.0  # interior: the constraint is inactive
            # Reach the boundary along the lowest eigenvector.
            t = np.sqrt(max(radius**2 - norm_pbar**2, 0.0))
            return pbar + t * _canonical_sign(vecs[:, 0]), nu_lo
    nu = _secular_root(lam, ghat, radius, nu_lo)
    p = vecs @ (-ghat / (lam + nu))
    return p, nu

"""Biomass-selection benchmark: cost family, analytic oracle, generator.

A digester of unit volume is fed fresh biomass at rates x_k >= 0 (volume
per day).  The total rate X = sum x_k sets the hydraulic retention time
HRT = 1/X, and each feedstock converts with a retention-time dependent
methane yield Y_k(X) = G0_k * y_k(1/X), where y is one of three unit curves
(cone, exponential, Cauchy).  Net cost (negative profit) per day:

    f(x) = x . (c - revenue * Y(X))

Because the curves are concave in the relevant range, every local minimum
feeds a single ingredient; the global minimum is therefore the best of K
one-dimensional problems, which :func:`true_minimum` solves by bracketed
golden-section search.  That closed oracle is what makes the family usable
as a benchmark with exact normalised costs.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from ._io import atomic_write_text
from .bounds import BoundSpec, TransformedCost
from .model import DifferentiableCost
from .trace import OptimizationTrace

PROBLEM_SCHEMA = "quanco-problem/1"
VARIANTS = ("cone", "exponential", "cauchy")

#: Univariate search window (feed rates) and multiplicative grid step.
_SEARCH_LO = 1e-4
_SEARCH_HI = 1e4
_SEARCH_STEP = 1.2
_GOLDEN_RTOL = 1e-10


def _softplus(a):
    """log(1 + e^a) without overflow."""
    return np.logaddexp(0.0, a)


def _sigmoid(a):
    a = np.asarray(a, dtype=float)
    a1 = np.atleast_1d(a)
    out = np.empty_like(a1)
    pos = a1 >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-a1[pos]))
    ea = np.exp(a1[~pos])
    out[~pos] = ea / (1.0 + ea)
    return out.reshape(a.shape)


def _check_t(t):
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("retention time must be positive")
    return t


def _cone_curve(k, n, t):
    """Cone kinetics; ``k`` and ``n`` may be arrays broadcast against t."""
    t = _check_t(t)
    log_kt = np.log(k * t)
    y = _sigmoid(n * log_kt)
    # log-space products keep (kt)^-n factors from overflowing
    log_y2 = -2.0 * _softplus(-n * log_kt)
    y1 = n * k * np.exp(-(n + 1.0) * log_kt + log_y2)
    brace = 2.0 * n * _sigmoid(-n * log_kt) - (n + 1.0)
    y2 = n * k**2 * np.exp(-(n + 2.0) * log_kt + log_y2) * brace
    return y, y1, y2


def _exponential_curve(tau, t):
    t = _check_t(t)
    decay = np.exp(-t / tau)
    return 1.0 - decay, decay / tau, -decay / tau**2


def _cauchy_curve(tau, t):
    t = _check_t(t)
    s = t / tau
    y = (2.0 / np.pi) * np.arctan(s)
    y1 = (2.0 / (np.pi * tau)) / (1.0 + s**2)
    y2 = (-4.0 / (np.pi * tau**2)) * s / (1.0 + s**2) ** 2
    return y, y1, y2


@dataclass(frozen=True)
class ConeYield:
    """y(t) = [1 + (k t)^-n]^-1: sigmoidal in log t with rate k, shape n."""

    k: float
    n: float

    variant = "cone"

    def __post_init__(self):
        if not (self.k > 0 and self.n > 0):
            raise ValueError("cone curve needs k > 0 and n > 0")

    def curve(self, t):
        return _cone_curve(self.k, self.n, t)

    def to_params(self):
        return {"k": self.k, "n": self.n}


@dataclass(frozen=True)
class ExponentialYield:
    """y(t) = 1 - exp(-t/tau): first-order kinetics with timescale tau."""

    tau: float

    variant = "exponential"

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("exponential curve needs tau > 0")

    def curve(self, t):
        return _exponential_curve(self.tau, t)

    def to_params(self):
        return {"tau": self.tau}


@dataclass(frozen=True)
class CauchyYield:
    """y(t) = (2/pi) arctan(t/tau): heavy-tailed approach to full yield."""

    tau: float

    variant = "cauchy"

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("cauchy curve needs tau > 0")

    def curve(self, t):
        return _cauchy_curve(self.tau, t)

    def to_params(self):
        return {"tau": self.tau}


YieldCurve = ConeYield | ExponentialYield | CauchyYield

_CURVE_TYPES = {"cone": ConeYield, "exponential": ExponentialYield,
                "cauchy": CauchyYield}
_CURVE_KERNELS = {"cone": (_cone_curve, ("k", "n")),
                  "exponential": (_exponential_curve, ("tau",)),
                  "cauchy": (_cauchy_curve, ("tau",))}


def make_yield_curve(variant: str, params: dict) -> YieldCurve:
    if variant not in _CURVE_TYPES:
        raise ValueError(f"unknown yield variant {variant!r}; "
                         f"known: {', '.join(VARIANTS)}")
    return _CURVE_TYPES[variant](**params)


def yield_curve(curve: YieldCurve, t):
    """(y, y', y'') of the unit yield curve at retention time t."""
    return curve.curve(t)


@dataclass(frozen=True)
class Biomass:
    """One feedstock: cost c per unit volume, yield ceiling g0, curve."""

    c: float
    g0: float
    curve: YieldCurve

    def __post_init__(self):
        if self.c < 0:
            raise ValueError("biomass cost must be non-negative")
        if not self.g0 > 0:
            raise ValueError("g0 must be positive")


def big_yield(b: Biomass, x_total):
    """(Y, Y', Y'') of the volumetric yield Y(X) = g0 * y(1/X).

    With unit reactor volume, t = 1/X and the chain rule gives
    Y'  = -g0 y'(t) / X^2,
    Y'' =  g0 (2 y'(t) / X + y''(t) / X^2) / X^2.
    """
    x_total = np.asarray(x_total, dtype=float)
    if np.any(x_total <= 0):
        raise ValueError("total feed rate must be positive")
    t = 1.0 / x_total
    y, y1, y2 = b.curve.curve(t)
    inv2 = t * t  # 1/X^2
    big = b.g0 * y
    big1 = -b.g0 * inv2 * y1
    big2 = b.g0 * inv2 * (2.0 * t * y1 + inv2 * y2)
    return big, big1, big2


@dataclass(frozen=True)
class BiomassProblem:
    """A revenue rate and K candidate feedstocks (unit reactor volume)."""

    biomasses: tuple[Biomass, ...]
    revenue: float = 6.0

    def __post_init__(self):
        if not self.biomasses:
            raise ValueError("problem needs at least one biomass")
        if not self.revenue > 0:
            raise ValueError("revenue must be positive")
        object.__setattr__(self, "biomasses", tuple(self.biomasses))

    @property
    def k(self) -> int:
        return len(self.biomasses)

    @property
    def variant(self) -> str:
        return self.biomasses[0].curve.variant

    def costs(self) -> np.ndarray:
        return np.array([b.c for b in self.biomasses])

    @cached_property
    def _curve_groups(self):
        """Biomasses grouped by curve kind with parameters stacked, so
        ``yields`` runs one array pass per kind instead of a Python loop
        over K biomasses (that loop dominated derivative time for large K)."""
        by_variant: dict[str, list[int]] = {}
        for i, b in enumerate(self.biomasses):
            by_variant.setdefault(b.curve.variant, []).append(i)
        groups = []
        for variant, idx in by_variant.items():
            kernel, names = _CURVE_KERNELS[variant]
            params = tuple(
                np.array([getattr(self.biomasses[i].curve, nm) for i in idx])
                for nm in names)
            g0 = np.array([self.biomasses[i].g0 for i in idx])
            groups.append((kernel, np.array(idx), params, g0))
        return groups

    def yields(self, x_total):
        """Stacked (Y, Y', Y'') for all biomasses at total rate X.

        X may be a scalar or an array; the result has shape (K,) + X.shape.
        """
        x_total = np.asarray(x_total, dtype=float)
        if np.any(x_total <= 0):
            raise ValueError("total feed rate must be positive")
        t = 1.0 / x_total
        inv2 = t * t
        shape = (self.k,) + t.shape
        big, big1, big2 = (np.empty(shape) for _ in range(3))
        for kernel, idx, params, g0 in self._curve_groups:
            # column shapes so (m,) parameters broadcast against t
            ps = [p.reshape(p.shape + (1,) * t.ndim) for p in params]
            g0 = g0.reshape(g0.shape + (1,) * t.ndim)
            y, y1, y2 = kernel(*ps, t)
            big[idx] = g0 * y
            big1[idx] = -g0 * inv2 * y1
            big2[idx] = g0 * inv2 * (2.0 * t * y1 + inv2 * y2)
        return big, big1, big2


def _check_feed(problem: BiomassProblem, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.k,):
        raise ValueError(f"x has shape {x.shape}, expected ({problem.k},)")
    if np.any(x < 0):
        raise ValueError("feed rates must be non-negative")
    if not x.sum() > 0:
        raise ValueError("total feed rate must be positive (HRT undefined)")
    return x


def cost(problem: BiomassProblem, x) -> float:
    """Daily cost x . (c - revenue * Y(X))."""
    x = _check_feed(problem, x)
    y, _, _ = problem.yields(x.sum())
    return float(x @ (problem.costs() - problem.revenue * y))


def cost_gradient(problem: BiomassProblem, x) -> np.ndarray:
    """g_k = c_k - revenue * (Y_k(X) + sum_l x_l Y'_l(X))."""
    x = _check_feed(problem, x)
    y, y1, _ = problem.yields(x.sum())
    return problem.costs() - problem.revenue * (y + x @ y1)


def cost_hessian(problem: BiomassProblem, x) -> np.ndarray:
    """H_kl = -revenue * (Y'_k + Y'_l + sum_j x_j Y''_j); dense, symmetric."""
    x = _check_feed(problem, x)
    _, y1, y2 = problem.yields(x.sum())
    return -problem.revenue * (np.add.outer(y1, y1) + x @ y2)


class BiomassCost(DifferentiableCost):
    """Cost-function view of a problem for the optimisers (x-space)."""

    def __init__(self, problem: BiomassProblem):
        self.problem = problem

    def dimension(self) -> int:
        return self.problem.k

    def value(self, x) -> float:
        return cost(self.problem, x)

    def gradient(self, x) -> np.ndarray:
        return cost_gradient(self.problem, x)

    def hessian(self, x) -> np.ndarray:
        return cost_hessian(self.problem, x)


def transformed_cost(problem: BiomassProblem) -> TransformedCost:
    """Unconstrained view over y = log x: iterates stay strictly positive."""
    return TransformedCost(BiomassCost(problem), BoundSpec.nonnegative(problem.k))


def _single_cost(b: Biomass, revenue: float, x):
    """Cost of feeding only this biomass at rate x (vectorised)."""
    y, _, _ = b.curve.curve(1.0 / np.asarray(x, dtype=float))
    return x * (b.c - revenue * b.g0 * y)


def univariate_optimum(b: Biomass, revenue: float) -> tuple[float, float]:
    """Best single-ingredient feed rate and its cost.

    Brackets the minimum on a log grid over [1e-4, 1e4] (multiplicative
    step 1.2) and refines by golden section to relative tolerance 1e-10.
    Returns (0.0, 0.0) when no feed rate beats feeding nothing.
    """
    n_steps = int(np.ceil(np.log(_SEARCH_HI / _SEARCH_LO) / np.log(_SEARCH_STEP)))
    grid = np.minimum(_SEARCH_LO * _SEARCH_STEP ** np.arange(n_steps + 1), _SEARCH_HI)
    vals = _single_cost(b, revenue, grid)
    i = int(np.argmin(vals))
    if vals[i] >= 0.0:
        return 0.0, 0.0
    if i == len(grid) - 1:
        warnings.warn(
            "univariate optimum sits at the search cap x = 1e4; "
            "the reported optimum may be truncated",
            RuntimeWarning,
        )
        return float(grid[i]), float(vals[i])
    lo = np.log(grid[max(i - 1, 0)])
    hi = np.log(grid[i + 1])
    # golden section on log x; absolute tolerance in log space is a
    # relative tolerance on x
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, bb = lo, hi
    c1 = bb - invphi * (bb - a)
    c2 = a + invphi * (bb - a)
    f1 = _single_cost(b, revenue, np.exp(c1))
    f2 = _single_cost(b, revenue, np.exp(c2))
    while bb - a > _GOLDEN_RTOL:
        if f1 <= f2:
            bb, c2, f2 = c2, c1, f1
            c1 = bb - invphi * (bb - a)
            f1 = _single_cost(b, revenue, np.exp(c1))
        else:
            a, c1, f1 = c1, c2, f2
            c2 = a + invphi * (bb - a)
            f2 = _single_cost(b, revenue, np.exp(c2))
    x_star = float(np.exp(0.5 * (a + bb)))
    return x_star, float(_single_cost(b, revenue, x_star))


def true_minimum(problem: BiomassProblem) -> tuple[int, float, float]:
    """(index, feed rate, cost) of the best single-ingredient optimum.

    This is the global minimum of the cost over x >= 0; ties go to the
    smallest index.
    """
    optima = [univariate_optimum(b, problem.revenue) for b in problem.biomasses]
    fs = np.array([f for _, f in optima])
    k = int(np.argmin(fs))
    return k, optima[k][0], float(fs[k])


def initial_point(k: int) -> np.ndarray:
    """Uniform feed with HRT = 10: x0 = 1/(10 K) per coordinate."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return np.full(k, 1.0 / (10.0 * k))


def normalized_cost(trace: OptimizationTrace, f_min: float) -> float:
    """(f_final - f_min) / (f_initial - f_min), in [0, 1] for monotone runs.

    Returns 0.0 with a warning when the starting point already attains
    ``f_min`` (the metric is undefined there).
    """
    denom = trace.f_initial - f_min
    if denom <= 0.0:
        warnings.warn(
            "normalized cost undefined: starting point already optimal",
            RuntimeWarning,
        )
        return 0.0
    return (trace.f_final - f_min) / denom


def suboptimality(trace: OptimizationTrace, f_min: float) -> float:
    """f_final - f_min."""
    return trace.f_final - f_min


# ---------------------------------------------------------------------------
# Random problem generation


class DegenerateGeneratorError(RuntimeError):
    """Raised when nearly all generator draws are rejected."""


def _cholesky(a: np.ndarray) -> np.ndarray:
    """Lower-triangular Cholesky factor, written out so the sampled values
    cannot depend on the linked BLAS (platform-stable generation)."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n) or not np.allclose(a, a.T, atol=1e-12):
        raise ValueError("covariance must be square and symmetric")
    chol = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1):
            s = a[i, j]
            for t in range(j):
                s -= chol[i, t] * chol[j, t]
            if i == j:
                if s <= 0:
                    raise ValueError("covariance is not positive definite")
                chol[i, i] = np.sqrt(s)
            else:
                chol[i, j] = s / chol[j, j]
    return chol


@dataclass(frozen=True)
class MvnGenConfig:
    """Multivariate-normal generator over transformed biomass parameters.

    The sampled vector is (logit alpha, log g0, log n, log k) for the cone
    variant and (logit alpha, log g0, log tau) otherwise, where
    alpha = c / (revenue * g0) is the cost margin.  Draws whose univariate
    optimum falls outside ``rejection_interval`` are discarded.
    """

    mean: np.ndarray
    covariance: np.ndarray
    rejection_interval: tuple[float, float] = (0.01, 100.0)
    seed: int = 0
    revenue: float = 6.0

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.covariance, dtype=float)
        if mean.ndim != 1 or cov.shape != (mean.shape[0], mean.shape[0]):
            raise ValueError("mean must be a vector and covariance a matching "
                             "square matrix")
        lo, hi = self.rejection_interval
        if not (0 <= lo < hi):
            raise ValueError("rejection interval must satisfy 0 <= lo < hi")
        mean = mean.copy()
        cov = cov.copy()
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "rejection_interval", (float(lo), float(hi)))

    def with_seed(self, seed: int) -> "MvnGenConfig":
        return replace(self, seed=seed)


def _expected_dim(variant: str) -> int:
    return 4 if variant == "cone" else 3


def _biomass_from_sample(v: np.ndarray, variant: str, revenue: float) -> Biomass:
    alpha = float(_sigmoid(np.array([v[0]]))[0])
    g0 = float(np.exp(v[1]))
    if variant == "cone":
        curve = ConeYield(k=float(np.exp(v[3])), n=float(np.exp(v[2])))
    else:
        curve = _CURVE_TYPES[variant](tau=float(np.exp(v[2])))
    return Biomass(c=alpha * revenue * g0, g0=g0, curve=curve)


_REJECTION_WINDOW = 10_000
_REJECTION_LIMIT = 0.99


def generate_problem(config: MvnGenConfig, k: int, variant: str) -> BiomassProblem:
    """Draw K acceptable biomasses i.i.d. from the generator.

    Aborts with :class:`DegenerateGeneratorError` when more than 99% of a
    window of 10^4 consecutive draws is rejected, which indicates that the
    configured distribution barely intersects the acceptance region.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown yield variant {variant!r}")
    if k < 1:
        raise ValueError("k must be >= 1")
    d = _expected_dim(variant)
    if config.mean.shape[0] != d:
        raise ValueError(
            f"{variant} generation needs a {d}-dimensional mean, "
            f"got {config.mean.shape[0]}"
        )
    chol = _cholesky(config.covariance)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(config.seed)))
    lo, hi = config.rejection_interval
    accepted: list[Biomass] = []
    window_draws = 0
    window_accepts = 0
    while len(accepted) < k:
        zk = rng.standard_normal(d)
        # small fixed-order matvec keeps the draw independent of BLAS
        v = config.mean + np.array(
            [sum(chol[i, j] * zk[j] for j in range(i + 1)) for i in range(d)]
        )
        b = _biomass_from_sample(v, variant, config.revenue)
        x_star, _ = univariate_optimum(b, config.revenue)
        window_draws += 1
        if lo <= x_star <= hi:
            accepted.append(b)
            window_accepts += 1
        if window_draws >= _REJECTION_WINDOW:
            if window_accepts < (1.0 - _REJECTION_LIMIT) * window_draws:
                raise DegenerateGeneratorError(
                    f"generator rejected {window_draws - window_accepts} of the "
                    f"last {window_draws} draws; the configured distribution "
                    "barely produces acceptable biomasses"
                )
            window_draws = 0
            window_accepts = 0
    return BiomassProblem(biomasses=tuple(accepted), revenue=config.revenue)


# ---------------------------------------------------------------------------
# Serialisation


def problem_to_dict(problem: BiomassProblem) -> dict:
    return {
        "schema": PROBLEM_SCHEMA,
        "revenue": problem.revenue,
        "variant": problem.variant,
        "biomasses": [
            {"c": b.c, "g0": b.g0, "params": b.curve.to_params()}
            for b in problem.biomasses
        ],
    }


def problem_from_dict(doc: dict) -> BiomassProblem:
    schema = doc.get("schema")
    if schema != PROBLEM_SCHEMA:
        raise ValueError(
            f"unsupported problem schema {schema!r}, expected {PROBLEM_SCHEMA!r}"
        )
    variant = doc["variant"]
    biomasses = tuple(
        Biomass(c=float(rec["c"]), g0=float(rec["g0"]),
                curve=make_yield_curve(variant, rec["params"]))
        for rec in doc["biomasses"]
    )
    return BiomassProblem(biomasses=biomasses, revenue=float(doc["revenue"]))


def save_problem(problem: BiomassProblem, path) -> None:
    """Write the problem as JSON (atomic, byte-deterministic)."""
    atomic_write_text(path, json.dumps(problem_to_dict(problem),
                                       indent=2, sort_keys=True) + "\n")


def load_problem(path) -> BiomassProblem:
    with open(path, encoding="utf-8") as fh:
        return problem_from_dict(json.load(fh))


def generator_config_to_dict(config: MvnGenConfig) -> dict:
    return {
        "schema": "quanco-generator/1",
        "mean": list(config.mean),
        "covariance": [list(row) for row in config.covariance],
        "rejection_interval": list(config.rejection_interval),
        "seed": config.seed,
        "revenue": config.revenue,
    }


def generator_config_from_dict(doc: dict) -> MvnGenConfig:
    return MvnGenConfig(
        mean=np.asarray(doc["mean"], dtype=float),
        covariance=np.asarray(doc["covariance"], dtype=float),
        rejection_interval=tuple(doc.get("rejection_interval", (0.01, 100.0))),
        seed=int(doc.get("seed", 0)),
        revenue=float(doc.get("revenue", 6.0)),
    )


def load_generator_config(path) -> MvnGenConfig:
    with open(path, encoding="utf-8") as fh:
        return generator_config_from_dict(json.load(fh))


def default_generator_config(variant: str, seed: int = 0) -> MvnGenConfig:
    """Shipped synthetic defaults for each variant (see data/generator_defaults.json)."""
    from importlib.resources import files

    if variant not in VARIANTS:
        raise ValueError(f"unknown yield variant {variant!r}")
    doc = json.loads(
        files("quanco.data").joinpath("generator_defaults.json").read_text("utf-8")
    )
    section = doc[variant]
    return MvnGenConfig(
        mean=np.asarray(section["mean"], dtype=float),
        covariance=np.asarray(section["covariance"], dtype=float),
        seed=seed,
    )

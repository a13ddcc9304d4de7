"""Smooth elimination of bound constraints by change of variables.

Each coordinate is mapped from an unconstrained variable y to the feasible
interval through eta:

* no bounds:              x = y
* lower bound only:       x = a + exp(y)
* upper bound only:       x = b - exp(y)
* two-sided bounds:       x = a + (b - a) * sigmoid(y)

Optimising F(y) = f(eta(y)) keeps every iterate strictly feasible without
penalties.  Gradient and Hessian of F follow from the chain rule with the
diagonal maps eta' and eta''.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .model import DifferentiableCost, as_vector

#: |y| beyond this would overflow exp(); inputs are clamped and flagged.
SATURATION_LIMIT = 700.0


@dataclass(frozen=True)
class BoundSpec:
    """Per-coordinate lower/upper bounds, +-inf where absent."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = as_vector(self.lower, name="lower")
        hi = as_vector(self.upper, lo.shape[0], name="upper")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise ValueError("bounds must not contain NaN")
        if np.any(lo >= hi):
            bad = int(np.argmax(lo >= hi))
            raise ValueError(f"lower[{bad}] >= upper[{bad}] ({lo[bad]} >= {hi[bad]})")
        lo = lo.copy()
        hi = hi.copy()
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @classmethod
    def unbounded(cls, dim: int) -> "BoundSpec":
        return cls(np.full(dim, -np.inf), np.full(dim, np.inf))

    @classmethod
    def nonnegative(cls, dim: int) -> "BoundSpec":
        """x >= 0 componentwise (open: iterates stay strictly positive)."""
        return cls(np.zeros(dim), np.full(dim, np.inf))


def _masks(spec: BoundSpec):
    fin_lo = np.isfinite(spec.lower)
    fin_hi = np.isfinite(spec.upper)
    return (~fin_lo & ~fin_hi, fin_lo & ~fin_hi, ~fin_lo & fin_hi, fin_lo & fin_hi)


def _clamp(y: np.ndarray) -> np.ndarray:
    over = np.abs(y) > SATURATION_LIMIT
    if np.any(over):
        warnings.warn(
            "transform input saturated: |y| > 700 clamped to avoid overflow",
            RuntimeWarning,
            stacklevel=3,
        )
        y = np.clip(y, -SATURATION_LIMIT, SATURATION_LIMIT)
    return y


def _sigmoid(y: np.ndarray) -> np.ndarray:
    out = np.empty_like(y)
    pos = y >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-y[pos]))
    ey = np.exp(y[~pos])
    out[~pos] = ey / (1.0 + ey)
    return out


def eta(spec: BoundSpec, y) -> np.ndarray:
    """Map unconstrained y to a strictly feasible point x."""
    y = _clamp(as_vector(y, spec.dim, name="y"))
    free, lo_only, hi_only, box = _masks(spec)
    x = np.empty_like(y)
    x[free] = y[free]
    x[lo_only] = spec.lower[lo_only] + np.exp(y[lo_only])
    x[hi_only] = spec.upper[hi_only] - np.exp(y[hi_only])
    a, b = spec.lower[box], spec.upper[box]
    x[box] = a + (b - a) * _sigmoid(y[box])
    # Rounding can land exactly on a finite bound for extreme y; nudge back
    # inside so the open-interval guarantee survives in floating point.
    x[lo_only | box] = np.maximum(
        x[lo_only | box], np.nextafter(spec.lower[lo_only | box], np.inf)
    )
    x[hi_only | box] = np.minimum(
        x[hi_only | box], np.nextafter(spec.upper[hi_only | box], -np.inf)
    )
    return x


def eta_prime(spec: BoundSpec, y) -> np.ndarray:
    """Diagonal of the Jacobian dx/dy."""
    y = _clamp(as_vector(y, spec.dim, name="y"))
    free, lo_only, hi_only, box = _masks(spec)
    d = np.empty_like(y)
    d[free] = 1.0
    d[lo_only] = np.exp(y[lo_only])
    d[hi_only] = -np.exp(y[hi_only])
    s = _sigmoid(y[box])
    d[box] = (spec.upper[box] - spec.lower[box]) * s * (1.0 - s)
    return d


def eta_second(spec: BoundSpec, y) -> np.ndarray:
    """Diagonal of the second derivative d^2x/dy^2."""
    y = _clamp(as_vector(y, spec.dim, name="y"))
    free, lo_only, hi_only, box = _masks(spec)
    d = np.empty_like(y)
    d[free] = 0.0
    d[lo_only] = np.exp(y[lo_only])
    d[hi_only] = -np.exp(y[hi_only])
    s = _sigmoid(y[box])
    d[box] = (spec.upper[box] - spec.lower[box]) * s * (1.0 - s) * (1.0 - 2.0 * s)
    return d


def eta_inverse(spec: BoundSpec, x) -> np.ndarray:
    """Map a strictly interior point x back to y with eta(y) = x.

    Raises ``ValueError`` when a coordinate touches or violates a finite
    bound: the transform only covers the open interval.
    """
    x = as_vector(x, spec.dim, name="x")
    if np.any(x <= spec.lower) or np.any(x >= spec.upper):
        bad = int(np.argmax((x <= spec.lower) | (x >= spec.upper)))
        raise ValueError(
            f"x[{bad}] = {x[bad]} is not strictly inside "
            f"({spec.lower[bad]}, {spec.upper[bad]})"
        )
    free, lo_only, hi_only, box = _masks(spec)
    y = np.empty_like(x)
    y[free] = x[free]
    y[lo_only] = np.log(x[lo_only] - spec.lower[lo_only])
    y[hi_only] = np.log(spec.upper[hi_only] - x[hi_only])
    a, b = spec.lower[box], spec.upper[box]
    t = (x[box] - a) / (b - a)
    y[box] = np.log(t) - np.log1p(-t)
    return y


class TransformedCost(DifferentiableCost):
    """Unconstrained view F(y) = f(eta(y)) of a bound-constrained cost.

    Chain rule:

        grad F = eta' * grad f(eta(y))
        hess F = diag(eta'' * grad f) + (eta' eta'^T) * hess f
    """

    def __init__(self, inner: DifferentiableCost, spec: BoundSpec):
        if spec.dim != inner.dimension():
            raise ValueError(
                f"bounds dimension {spec.dim} != cost dimension {inner.dimension()}"
            )
        self.inner = inner
        self.spec = spec

    def dimension(self) -> int:
        return self.inner.dimension()

    def value(self, y) -> float:
        return float(self.inner.value(eta(self.spec, y)))

    def gradient(self, y) -> np.ndarray:
        x = eta(self.spec, y)
        return eta_prime(self.spec, y) * self.inner.gradient(x)

    def hessian(self, y) -> np.ndarray:
        x = eta(self.spec, y)
        g = self.inner.gradient(x)
        h = self.inner.hessian(x)
        d1 = eta_prime(self.spec, y)
        d2 = eta_second(self.spec, y)
        return np.diag(d2 * g) + np.outer(d1, d1) * h

"""Cost-function interface and local quadratic models.

A point is a plain 1-d ``numpy`` array.  Costs expose value, gradient and
Hessian; :func:`taylor_at` freezes them into a :class:`QuadraticModel` that
the trust-region machinery manipulates.
"""
from __future__ import annotations

import abc
from dataclasses import dataclass

import numpy as np

#: Accepted conventions for the predicted-change denominator of the ratio
#: rho = actual / predicted.  "model" uses the quadratic model change
#: g.p + 0.5 p^T H p; "full-curvature" drops the 1/2 on the curvature term.
RHO_MODES = ("model", "full-curvature")


def as_vector(x, dim: int | None = None, name: str = "x") -> np.ndarray:
    """Coerce ``x`` to a float vector, optionally checking its length."""
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"{name} must be a 1-d vector, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"{name} has length {v.shape[0]}, expected {dim}")
    return v


class DifferentiableCost(abc.ABC):
    """A twice-differentiable scalar cost on R^K."""

    @abc.abstractmethod
    def dimension(self) -> int:
        """Number of coordinates K."""

    @abc.abstractmethod
    def value(self, x) -> float:
        """Cost at ``x``."""

    @abc.abstractmethod
    def gradient(self, x) -> np.ndarray:
        """Gradient at ``x``, shape (K,)."""

    @abc.abstractmethod
    def hessian(self, x) -> np.ndarray:
        """Hessian at ``x``, shape (K, K).  Implementations may return either
        triangle filled; consumers symmetrise via :func:`taylor_at`."""


def _frozen_array(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class QuadraticModel:
    """Second-order model m(x) = f0 + g.(x-x0) + 0.5 (x-x0)^T H (x-x0).

    The Hessian is symmetrised on construction; all arrays are copied and
    marked read-only so a model can be shared across threads.
    """

    center: np.ndarray
    f0: float
    grad: np.ndarray
    hess: np.ndarray

    def __post_init__(self):
        x0 = as_vector(self.center, name="center")
        g = as_vector(self.grad, x0.shape[0], name="grad")
        h = np.asarray(self.hess, dtype=float)
        if h.shape != (x0.shape[0], x0.shape[0]):
            raise ValueError(
                f"hess has shape {h.shape}, expected {(x0.shape[0],) * 2}"
            )
        if not np.isfinite(self.f0):
            raise ValueError("f0 is not finite")
        if not (np.all(np.isfinite(g)) and np.all(np.isfinite(h))):
            raise ValueError("model derivatives contain non-finite entries")
        h = 0.5 * (h + h.T)
        object.__setattr__(self, "center", _frozen_array(x0))
        object.__setattr__(self, "f0", float(self.f0))
        object.__setattr__(self, "grad", _frozen_array(g))
        object.__setattr__(self, "hess", _frozen_array(h))

    @property
    def dim(self) -> int:
        return self.center.shape[0]


def taylor_at(f: DifferentiableCost, x0) -> QuadraticModel:
    """Evaluate ``f`` and its derivatives at ``x0`` and freeze the model.

    Raises ``ValueError`` if any of the value, gradient or Hessian is
    non-finite, which usually indicates a domain violation of the cost.
    """
    x0 = as_vector(x0, f.dimension(), name="x0")
    f0 = float(f.value(x0))
    if not np.isfinite(f0):
        raise ValueError(f"cost value at x0 is not finite ({f0}); "
                         "x0 lies outside the cost's domain")
    g = f.gradient(x0)
    h = f.hessian(x0)
    return QuadraticModel(center=x0, f0=f0, grad=g, hess=h)


def eval_model(m: QuadraticModel, x) -> float:
    """Value of the quadratic model at the point ``x``."""
    d = as_vector(x, m.dim) - m.center
    return float(m.f0 + m.grad @ d + 0.5 * (d @ m.hess @ d))


def model_decrease(m: QuadraticModel, step, mode: str = "model") -> float:
    """Predicted change of the model for ``step`` taken from the center.

    Negative values predict descent.  ``mode`` selects the curvature weight
    used in the trust-region ratio (see :data:`RHO_MODES`).
    """
    if mode not in RHO_MODES:
        raise ValueError(f"unknown rho mode {mode!r}, expected one of {RHO_MODES}")
    p = as_vector(step, m.dim, name="step")
    curv = p @ m.hess @ p
    if mode == "model":
        return float(m.grad @ p + 0.5 * curv)
    return float(m.grad @ p + curv)

"""Binarisation of the box trust-region subproblem into a QUBO.

Each coordinate k moves on a uniform grid of 2^M points spanning
[x0_k - r_k, x0_k + r_k].  With the bit basis b = (1, 2, ..., 2^(M-1)),
resolution delta = 2 r / N, N = 2^M - 1, and the encoding matrix

    A = b^T (x) diag(delta)            (K rows, K*M columns)

a bit vector z selects the step p = -r + A z.  Substituting into the
quadratic model turns the model change into the binary quadratic form

    z^T Q z + c0,   Q  = 0.5 A^T H A + diag(A^T (g - H r)),
                    c0 = -g.r + 0.5 r^T H r,

so minimising the QUBO energy minimises the model over the grid.  The
quadratic block is assembled through the Kronecker identity
A^T H A = (b b^T) (x) (Dh) with Dh_ij = delta_i delta_j H_ij, which needs
only the O(M) distinct products b_i * b_j = 2^(i+j).

Bit layout: z is the column-stacked K x M bit matrix, i.e. bit j of
coordinate k sits at index j*K + k (all coordinates' bit 0 first).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._io import atomic_write_text
from .model import QuadraticModel, as_vector


@dataclass(frozen=True)
class TrustBox:
    """Axis-aligned trust region: |x_k - center_k| <= half_width_k."""

    center: np.ndarray
    half_width: np.ndarray

    def __post_init__(self):
        c = as_vector(self.center, name="center")
        r = as_vector(self.half_width, c.shape[0], name="half_width")
        if np.any(r <= 0) or not np.all(np.isfinite(r)):
            raise ValueError("half widths must be positive and finite")
        c, r = c.copy(), r.copy()
        c.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "half_width", r)

    @property
    def dim(self) -> int:
        return self.center.shape[0]


@dataclass(frozen=True)
class Binarisation:
    """Grid encoding of a box: M bits per coordinate, N = 2^M - 1 levels."""

    bits_per_dim: int
    levels: int
    basis: np.ndarray
    resolution: np.ndarray

    @classmethod
    def for_box(cls, box: TrustBox, bits_per_dim: int) -> "Binarisation":
        if bits_per_dim < 1:
            raise ValueError(f"bits_per_dim must be >= 1, got {bits_per_dim}")
        n = 2**bits_per_dim - 1
        basis = 2.0 ** np.arange(bits_per_dim)
        delta = 2.0 * box.half_width / n
        basis.setflags(write=False)
        delta.setflags(write=False)
        return cls(bits_per_dim, n, basis, delta)


@dataclass(frozen=True)
class Qubo:
    """Dense symmetric QUBO with the constant offset of the model change.

    For an instance built by :func:`build_qubo`,
    ``energy(z) + offset == model(x(z)) - f0`` for every bit vector z.
    Instances loaded from a triplet file carry no decoding metadata
    (``binarisation`` and ``box`` are ``None``).
    """

    q: np.ndarray
    offset: float
    binarisation: Binarisation | None = None
    box: TrustBox | None = None

    @property
    def num_bits(self) -> int:
        return self.q.shape[0]


def build_qubo(model: QuadraticModel, box: TrustBox, bits_per_dim: int) -> Qubo:
    """Binarise the model over the box into a QUBO on K*M bits."""
    if box.dim != model.dim:
        raise ValueError(f"box dimension {box.dim} != model dimension {model.dim}")
    bn = Binarisation.for_box(box, bits_per_dim)
    k, m = model.dim, bn.bits_per_dim
    delta, b, r = bn.resolution, bn.basis, box.half_width

    # 0.5 A^T H A in K x K blocks: block (i, j) = 0.5 * 2^(i+j) * Dh.
    dh = (delta[:, None] * delta[None, :]) * model.hess
    scaled = [0.5 * 2.0**p * dh for p in range(2 * m - 1)]
    q = np.empty((k * m, k * m))
    for i in range(m):
        for j in range(m):
            q[i * k:(i + 1) * k, j * k:(j + 1) * k] = scaled[i + j]

    # Linear field on the diagonal: A^T (g - H r), laid out bit-major.
    u = delta * (model.grad - model.hess @ r)
    q[np.diag_indices_from(q)] += np.kron(b, u)

    offset = float(-model.grad @ r + 0.5 * (r @ model.hess @ r))
    return Qubo(q=q, offset=offset, binarisation=bn, box=box)


def decode_step(qubo: Qubo, z) -> np.ndarray:
    """Map a bit vector to the step p = -r + A z from the box center.

    The result is clipped into [-r, r]; this only ever moves the last grid
    point by one ulp when 2r/N * N rounds past 2r.
    """
    if qubo.binarisation is None or qubo.box is None:
        raise ValueError("qubo carries no binarisation metadata; cannot decode")
    bn, box = qubo.binarisation, qubo.box
    z = np.asarray(z)
    if z.shape != (qubo.num_bits,):
        raise ValueError(f"z has shape {z.shape}, expected ({qubo.num_bits},)")
    levels = z.astype(float).reshape(bn.bits_per_dim, box.dim).T @ bn.basis
    r = box.half_width
    return np.clip(-r + bn.resolution * levels, -r, r)


def qubo_energy(qubo: Qubo, z) -> float:
    """z^T Q z for a binary vector z (offset not included)."""
    z = np.asarray(z, dtype=float)
    if z.shape != (qubo.num_bits,):
        raise ValueError(f"z has shape {z.shape}, expected ({qubo.num_bits},)")
    return float(z @ qubo.q @ z)


def grid_resolution_for(delta_f: float, lambda_max: float) -> float:
    """Largest uniform resolution whose discretisation error stays below
    ``delta_f``: delta = sqrt(8 delta_f / lambda), lambda = max(lambda_max, 0).

    Returns ``inf`` when the curvature bound is non-positive (any grid does).
    """
    if not delta_f > 0:
        raise ValueError(f"delta_f must be positive, got {delta_f}")
    lam = max(float(lambda_max), 0.0)
    if lam == 0.0:
        return math.inf
    return math.sqrt(8.0 * delta_f / lam)


def discretisation_bound(model: QuadraticModel, bn: Binarisation) -> float:
    """Upper bound (1/8) lambda delta.delta on (grid min - continuous min)
    of the model over the box, lambda = max(lambda_max(H), 0)."""
    lam = max(float(np.linalg.eigvalsh(model.hess)[-1]), 0.0)
    return 0.125 * lam * float(bn.resolution @ bn.resolution)


def write_qubo_triplets(qubo: Qubo, path) -> None:
    """Write ``Q`` as a plain-text triplet file.

    Header line ``KM offset``, then one ``row col value`` line per non-zero
    entry in row-major order.  Written atomically (temp file + rename).
    """
    n = qubo.num_bits
    # plain-float repr: numpy scalars would stringify as np.float64(...)
    lines = [f"{n} {float(qubo.offset)!r}\n"]
    for i in range(n):
        row = qubo.q[i]
        for j in np.flatnonzero(row != 0.0):
            lines.append(f"{i} {j} {float(row[j])!r}\n")
    atomic_write_text(path, "".join(lines))


def read_qubo_triplets(path) -> Qubo:
    """Read a triplet file written by :func:`write_qubo_triplets`.

    The result has no decoding metadata; it is meant for standalone solver
    benchmarking.
    """
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"malformed triplet header in {path!r}")
        n, offset = int(header[0]), float(header[1])
        if n < 1:
            raise ValueError(f"triplet header declares {n} bits")
        q = np.zeros((n, n))
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"malformed triplet on line {lineno} of {path!r}")
            i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"triplet index out of range on line {lineno}")
            q[i, j] = v
    return Qubo(q=q, offset=offset)

"""QUBO solvers: exhaustive enumeration and simulated annealing.

Both solvers consume a :class:`~quanco.subproblem.Qubo` and return a
:class:`SolveResult` whose energy always equals ``z^T Q z`` of the returned
bits (recomputed from scratch, so incremental bookkeeping cannot leak out).
"""
from __future__ import annotations

import abc
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .subproblem import Qubo, qubo_energy


class QuboSizeError(ValueError):
    """Raised when a QUBO exceeds the exact solver's enumeration cap."""


@dataclass(frozen=True)
class SolveResult:
    """Best state found by a solver."""

    best_bits: np.ndarray
    best_energy: float
    samples_drawn: int
    solver_wall_time: float


class IsingSolver(abc.ABC):
    """Minimises z^T Q z over binary z."""

    @abc.abstractmethod
    def solve(self, qubo: Qubo) -> SolveResult:
        ...


def _field_matrix(qubo: Qubo):
    """(diag(Q), W) with W = Q + Q^T and a zeroed diagonal.

    The local field of bit i is h_i = Q_ii + sum_{j != i} W_ij z_j, and a
    flip of bit i changes the energy by (1 - 2 z_i) h_i.
    """
    q = np.ascontiguousarray(qubo.q, dtype=float)
    w = q + q.T
    np.fill_diagonal(w, 0.0)
    # copy: np.diag returns a read-only view, which for n = 1 is already
    # contiguous and would reach the kernels' writable buffers unchanged
    return np.diag(q).copy(), w


class ExactSolver(IsingSolver):
    """Exhaustive enumeration, capped at ``max_bits`` (default 28).

    Above the cap it refuses with :class:`QuboSizeError`: enumeration cost
    doubles per bit, and the caller should switch to annealing instead.
    Ties are resolved to the lexicographically smallest bit vector.
    """

    def __init__(self, max_bits: int = 28):
        if max_bits < 1:
            raise ValueError(f"max_bits must be >= 1, got {max_bits}")
        self.max_bits = max_bits

    def solve(self, qubo: Qubo) -> SolveResult:
        n = qubo.num_bits
        if n > self.max_bits:
            raise QuboSizeError(
                f"{n} bits exceeds the exact enumeration cap of "
                f"{self.max_bits}; use the 'sa' solver for this size"
            )
        start = time.perf_counter()
        qdiag, w = _field_matrix(qubo)
        bits, _ = _kernels.exact_argmin(qdiag, w)
        wall = time.perf_counter() - start
        return SolveResult(
            best_bits=bits,
            best_energy=qubo_energy(qubo, bits),
            samples_drawn=2**n,
            solver_wall_time=wall,
        )


@dataclass(frozen=True)
class SaConfig:
    """Annealing schedule and sampling parameters.

    ``beta`` rises log-linearly from ``beta_initial`` to ``beta_final`` over
    the sweeps; each sweep proposes every bit once in index order
    (``randomize_order`` draws a fresh visiting permutation per sweep).
    """

    beta_initial: float = 0.1
    beta_final: float = 3.0
    sweeps: int = 100
    num_samples: int = 10
    seed: int = 0
    randomize_order: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.beta_initial <= 0 or self.beta_final <= 0:
            raise ValueError("inverse temperatures must be positive")
        if self.sweeps < 1 or self.num_samples < 1 or self.workers < 1:
            raise ValueError("sweeps, num_samples and workers must be >= 1")


class SaSolver(IsingSolver):
    """Simulated annealing: independent Metropolis chains, best state wins.

    Each chain starts from uniform random bits and anneals for
    ``cfg.sweeps`` sweeps; a proposal flips one bit and is accepted with
    probability min(1, exp(-beta dE)).  Every proposal draws its uniform
    up front (batched per sample), so results do not depend on how many
    worker threads execute the chains.  Per-sample streams are spawned
    from the master seed; successive ``solve`` calls on one instance
    continue the spawn sequence, so a fresh solver with the same seed
    replays the same run.  Ties across samples go to the lowest index.
    """

    def __init__(self, config: SaConfig = SaConfig()):
        self.config = config
        self._seedseq = np.random.SeedSequence(config.seed)

    def solve(self, qubo: Qubo) -> SolveResult:
        cfg = self.config
        n = qubo.num_bits
        start = time.perf_counter()
        qdiag, w = _field_matrix(qubo)
        if cfg.sweeps == 1:
            betas = np.array([cfg.beta_initial])
        else:
            betas = np.geomspace(cfg.beta_initial, cfg.beta_final, cfg.sweeps)
        children = self._seedseq.spawn(cfg.num_samples)

        if cfg.randomize_order:
            run = lambda seq: self._run_chain_permuted(seq, qdiag, w, betas, n)
        else:
            run = lambda seq: self._run_chain(seq, qdiag, w, betas, n)
        if cfg.workers == 1:
            outcomes = [run(seq) for seq in children]
        else:
            # The compiled kernels drop the GIL, so threads give real
            # concurrency there; with the fallback this is merely correct.
            with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
                outcomes = list(pool.map(run, children))

        best_idx = min(range(len(outcomes)), key=lambda i: (outcomes[i][1], i))
        bits = outcomes[best_idx][0]
        wall = time.perf_counter() - start
        return SolveResult(
            best_bits=bits,
            best_energy=qubo_energy(qubo, bits),
            samples_drawn=cfg.num_samples,
            solver_wall_time=wall,
        )

    def _start_state(self, rng, qdiag, w, n):
        z = (rng.random(n) < 0.5).astype(np.uint8)
        h = qdiag.copy()
        e = 0.0
        for j in np.flatnonzero(z):
            e += h[j]
            h += w[j]
        return z, h, e

    def _run_chain(self, seedseq, qdiag, w, betas, n):
        rng = np.random.Generator(np.random.Philox(seedseq))
        z, h, e = self._start_state(rng, qdiag, w, n)
        u = rng.random((betas.shape[0], n))
        e = _kernels.sa_chain(h, w, z, betas, u, e)
        return z, e

    def _run_chain_permuted(self, seedseq, qdiag, w, betas, n):
        # Permuted visiting order is realised by conjugation: permute the
        # problem, run the fixed-order kernel, undo the permutation.  One
        # permutation is drawn per sweep, so the kernel runs sweep by sweep.
        rng = np.random.Generator(np.random.Philox(seedseq))
        z, h, e = self._start_state(rng, qdiag, w, n)
        for beta in betas:
            perm = rng.permutation(n)
            u = rng.random((1, n))
            zp = np.ascontiguousarray(z[perm])
            hp = np.ascontiguousarray(h[perm])
            wp = np.ascontiguousarray(w[np.ix_(perm, perm)])
            e = _kernels.sa_chain(hp, wp, zp, np.array([beta]), u, e)
            z[perm] = zp
            h[perm] = hp
        return z, e


_REGISTRY = {"exact": ExactSolver, "sa": SaSolver}


def solver_registry(name: str, **params) -> IsingSolver:
    """Construct a solver by name.

    ``exact`` accepts ``max_bits``; ``sa`` accepts the :class:`SaConfig`
    fields as keyword arguments.
    """
    if name not in _REGISTRY:
        known = ", ".join(sorted(_REGISTRY))
        raise ValueError(f"unknown solver {name!r}; known solvers: {known}")
    if name == "sa":
        return SaSolver(SaConfig(**params))
    return ExactSolver(**params)

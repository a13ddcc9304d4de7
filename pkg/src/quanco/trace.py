"""Per-iteration records shared by the trust-region drivers."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class IterationRecord:
    """One trust-region iteration.

    ``f`` is the incumbent cost *after* the accept/reject decision, so it is
    unchanged on rejected iterations; ``radius_max`` is the largest
    trust-region half width *used* by this iteration's proposal.  Times are
    wall-clock seconds; ``time_qubo_build`` is zero for solvers without a
    build phase.
    """

    k: int
    f: float
    rho: float
    accepted: bool
    radius_max: float
    step_norm: float
    time_derivatives: float
    time_qubo_build: float
    time_solver: float


@dataclass
class OptimizationTrace:
    """Full history of a run plus the final state."""

    f_initial: float
    records: list[IterationRecord] = field(default_factory=list)
    final_point: np.ndarray | None = None
    converged: bool = False
    reason: str = ""

    @property
    def f_final(self) -> float:
        return self.records[-1].f if self.records else self.f_initial

    @property
    def f_values(self) -> np.ndarray:
        """Incumbent cost after each iteration (length = iterations run)."""
        return np.array([r.f for r in self.records])

    @property
    def num_accepted(self) -> int:
        return sum(1 for r in self.records if r.accepted)

"""Trust-region Newton with binarised subproblems and Ising-style solvers.

The package splits into:

* :mod:`quanco.model` -- cost interface and quadratic Taylor models
* :mod:`quanco.bounds` -- smooth elimination of bound constraints
* :mod:`quanco.subproblem` -- binarisation of the box subproblem into a QUBO
* :mod:`quanco.ising` -- exact and annealing QUBO solvers
* :mod:`quanco.trn` -- classical spherical trust-region Newton baseline
* :mod:`quanco.driver` -- the binarised trust-region loop
* :mod:`quanco.biogas` -- benchmark cost family with an analytic oracle
* :mod:`quanco.bench` -- CLI, sweeps and reports
"""
from ._kernels import BACKEND as KERNEL_BACKEND
from .bounds import BoundSpec, TransformedCost, eta, eta_inverse
from .driver import QuancoConfig, boundary_test, expected_improvement, quanco_minimize
from .ising import (ExactSolver, IsingSolver, QuboSizeError, SaConfig,
                    SaSolver, SolveResult, solver_registry)
from .model import (DifferentiableCost, QuadraticModel, eval_model,
                    model_decrease, taylor_at)
from .subproblem import (Binarisation, Qubo, TrustBox, build_qubo, decode_step,
                         discretisation_bound, grid_resolution_for,
                         qubo_energy, read_qubo_triplets, write_qubo_triplets)
from .trace import IterationRecord, OptimizationTrace
from .trn import TrnConfig, solve_sphere_subproblem, trn_minimize

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND", "__version__",
    "BoundSpec", "TransformedCost", "eta", "eta_inverse",
    "QuancoConfig", "boundary_test", "expected_improvement", "quanco_minimize",
    "ExactSolver", "IsingSolver", "QuboSizeError", "SaConfig", "SaSolver",
    "SolveResult", "solver_registry",
    "DifferentiableCost", "QuadraticModel", "eval_model", "model_decrease",
    "taylor_at",
    "Binarisation", "Qubo", "TrustBox", "build_qubo", "decode_step",
    "discretisation_bound", "grid_resolution_for", "qubo_energy",
    "read_qubo_triplets", "write_qubo_triplets",
    "IterationRecord", "OptimizationTrace",
    "TrnConfig", "solve_sphere_subproblem", "trn_minimize",
]

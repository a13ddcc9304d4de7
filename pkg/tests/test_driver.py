import itertools

import numpy as np
import pytest

from quanco import biogas
from quanco.bounds import eta_inverse
from quanco.driver import (QuancoConfig, boundary_test, expected_improvement,
                           quanco_minimize)
from quanco.ising import ExactSolver, IsingSolver, SaSolver
from quanco.model import QuadraticModel, eval_model, taylor_at
from quanco.subproblem import decode_step, qubo_energy
from test_model import Quadratic


def test_config_validation():
    with pytest.raises(ValueError, match="bits_per_dim"):
        QuancoConfig(bits_per_dim=0)
    with pytest.raises(ValueError, match="max_iter"):
        QuancoConfig(max_iter=0)


def test_run_rejects_bad_radii_and_start():
    f = Quadratic(0.0, np.zeros(2), np.eye(2))
    with pytest.raises(ValueError, match="r0"):
        quanco_minimize(f, np.zeros(2), QuancoConfig(r0=0.0))
    with pytest.raises(ValueError, match="r0"):
        quanco_minimize(f, np.zeros(2), QuancoConfig(r0=2.0, r_max=1.0))

    class Bad(Quadratic):
        def value(self, x):
            return np.nan

    with pytest.raises(ValueError, match="not finite"):
        quanco_minimize(Bad(0.0, np.zeros(2), np.eye(2)), np.zeros(2),
                        QuancoConfig())


def test_expected_improvement_modes():
    m = QuadraticModel(np.zeros(1), 0.0, np.array([-1.0]), np.array([[2.0]]))
    p = np.array([0.5])
    assert expected_improvement(m, p, "model") == pytest.approx(-0.25)
    assert expected_improvement(m, p, "full-curvature") == pytest.approx(0.0)


def test_boundary_test():
    r = np.array([1.0, 2.0])
    assert boundary_test(np.array([0.0, 2.0]), r)
    assert boundary_test(np.array([1.0 - 1e-9, 0.0]), r)
    assert not boundary_test(np.array([0.9, 1.0]), r)


def test_first_iteration_of_known_instance():
    # f(x) = x^2 - x from 0 with r = 1 and 2 bits: the grid minimiser of the
    # model sits at +1/3 and is accepted with rho = 1
    f = Quadratic(0.0, np.array([-1.0]), np.array([[2.0]]))
    cfg = QuancoConfig(bits_per_dim=2, r0=1.0, r_max=1.0, max_iter=1)
    trace = quanco_minimize(f, np.zeros(1), cfg)
    rec = trace.records[0]
    assert rec.accepted
    assert rec.rho == pytest.approx(1.0)
    assert rec.radius_max == 1.0
    assert trace.final_point[0] == pytest.approx(1.0 / 3.0)
    # on a quadratic cost the model is exact, so f matches the model change
    assert rec.f == pytest.approx(f.value(np.array([1.0 / 3.0])))


class RecordingSolver(IsingSolver):
    """Wraps a solver and keeps every QUBO it was asked to solve."""

    def __init__(self, inner):
        self.inner = inner
        self.qubos = []

    def solve(self, qubo):
        self.qubos.append(qubo)
        return self.inner.solve(qubo)


def test_each_proposal_is_the_grid_optimum_of_the_model():
    rng = np.random.default_rng(6)
    h = rng.normal(size=(2, 2))
    f = Quadratic(0.4, rng.normal(size=2), h @ h.T + 0.2 * np.eye(2))
    solver = RecordingSolver(ExactSolver())
    cfg = QuancoConfig(bits_per_dim=2, r0=0.7, r_max=2.0, max_iter=8)
    quanco_minimize(f, np.zeros(2), cfg, solver=solver)
    assert solver.qubos
    for qubo in solver.qubos:
        n = qubo.num_bits
        best = min(qubo_energy(qubo, np.array(z))
                   for z in itertools.product((0, 1), repeat=n))
        model = taylor_at(f, qubo.box.center)
        res = ExactSolver().solve(qubo)
        assert res.best_energy == pytest.approx(best, abs=1e-12)
        # decoded proposal minimises the model over the grid
        p = decode_step(qubo, res.best_bits)
        assert (eval_model(model, qubo.box.center + p) - model.f0
                == pytest.approx(best + qubo.offset, abs=1e-9))


def test_radius_expansion_and_cap_on_linear_cost():
    f = Quadratic(0.0, np.array([-1.0, -1.0]), np.zeros((2, 2)))
    cfg = QuancoConfig(bits_per_dim=1, r0=0.5, r_max=4.0, max_iter=6)
    trace = quanco_minimize(f, np.zeros(2), cfg)
    assert [r.radius_max for r in trace.records] == [0.5, 1.0, 2.0, 4.0, 4.0, 4.0]
    assert all(r.accepted for r in trace.records)
    assert not trace.converged


def test_rejection_shrinks_by_four_and_keeps_incumbent():
    # one bit per coordinate proposes only +-r; near the optimum of a convex
    # quadratic every such move increases f, so each iteration rejects and r
    # collapses geometrically while f and x stay put
    f = Quadratic(0.0, np.zeros(1), np.array([[2.0]]))
    cfg = QuancoConfig(bits_per_dim=1, r0=1.0, r_max=1.0, max_iter=5)
    trace = quanco_minimize(f, np.zeros(1), cfg)
    assert [r.accepted for r in trace.records] == [False] * 5
    assert [r.radius_max for r in trace.records] == [1.0, 0.25, 0.0625,
                                                     0.015625, 0.00390625]
    assert np.all(trace.f_values == 0.0)
    assert trace.final_point[0] == 0.0
    assert trace.reason == "max iterations reached"


def test_incumbent_is_monotone_on_benchmark_problem():
    problem = biogas.generate_problem(
        biogas.default_generator_config("cone", seed=3), 6, "cone")
    cost_y = biogas.transformed_cost(problem)
    y0 = eta_inverse(cost_y.spec, biogas.initial_point(6))
    trace = quanco_minimize(cost_y, y0, QuancoConfig(max_iter=40))
    fs = [trace.f_initial] + list(trace.f_values)
    assert all(b <= a for a, b in zip(fs, fs[1:]))
    for prev, cur in zip(trace.records, trace.records[1:]):
        if not prev.accepted:
            assert cur.radius_max == pytest.approx(prev.radius_max / 4.0)


def test_sa_driver_runs_are_reproducible():
    problem = biogas.generate_problem(
        biogas.default_generator_config("cone", seed=4), 5, "cone")
    cost_y = biogas.transformed_cost(problem)
    y0 = eta_inverse(cost_y.spec, biogas.initial_point(5))
    cfg = QuancoConfig(solver="sa", seed=11, max_iter=15,
                       solver_params={"sweeps": 30, "num_samples": 3})
    t1 = quanco_minimize(cost_y, y0, cfg)
    t2 = quanco_minimize(cost_y, y0, cfg)
    np.testing.assert_array_equal(t1.f_values, t2.f_values)
    np.testing.assert_array_equal(t1.final_point, t2.final_point)
    assert [r.rho for r in t1.records] == [r.rho for r in t2.records]


def test_solver_params_seed_overrides_driver_seed():
    cfg = QuancoConfig(solver="sa", seed=1, solver_params={"seed": 77})
    from quanco.driver import _make_solver
    solver = _make_solver(cfg)
    assert isinstance(solver, SaSolver)
    assert solver.config.seed == 77
    assert _make_solver(QuancoConfig(solver="sa", seed=5)).config.seed == 5


def test_per_coordinate_radii_broadcast():
    f = Quadratic(0.0, np.array([-1.0, -1.0]), np.eye(2))
    cfg = QuancoConfig(bits_per_dim=2, r0=np.array([0.5, 1.5]),
                       r_max=np.array([2.0, 6.0]), max_iter=3)
    solver = RecordingSolver(ExactSolver())
    quanco_minimize(f, np.zeros(2), cfg, solver=solver)
    np.testing.assert_allclose(solver.qubos[0].box.half_width, [0.5, 1.5])


def test_converges_on_easy_quadratic():
    f = Quadratic(0.0, np.array([-1.0]), np.array([[2.0]]))
    cfg = QuancoConfig(bits_per_dim=6, r0=1.0, r_max=2.0, max_iter=60)
    trace = quanco_minimize(f, np.zeros(1), cfg)
    assert trace.converged
    # minimiser of x^2 - x is 1/2 with value -1/4
    assert abs(trace.final_point[0] - 0.5) < 2e-2
    assert trace.f_final == pytest.approx(-0.25, abs=1e-3)

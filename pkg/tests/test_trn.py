import numpy as np
import pytest

from quanco import DifferentiableCost, biogas
from quanco.model import QuadraticModel, model_decrease
from quanco.trn import TrnConfig, solve_sphere_subproblem, trn_minimize
from test_model import Quadratic


def sphere_model(g, h):
    g = np.asarray(g, dtype=float)
    return QuadraticModel(center=np.zeros(g.shape[0]), f0=0.0, grad=g,
                          hess=np.asarray(h, dtype=float))


class Rosenbrock(DifferentiableCost):
    def dimension(self):
        return 2

    def value(self, x):
        return (1.0 - x[0]) ** 2 + 100.0 * (x[1] - x[0] ** 2) ** 2

    def gradient(self, x):
        return np.array([
            -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] ** 2),
            200.0 * (x[1] - x[0] ** 2),
        ])

    def hessian(self, x):
        return np.array([
            [2.0 - 400.0 * (x[1] - 3.0 * x[0] ** 2), -400.0 * x[0]],
            [-400.0 * x[0], 200.0],
        ])


# ---------------------------------------------------------------------------
# Subproblem


def test_sphere_step_interior_newton():
    m = sphere_model([-2.0, 4.0], np.diag([1.0, 2.0]))
    p = solve_sphere_subproblem(m, radius=10.0)
    np.testing.assert_allclose(p, [2.0, -2.0], atol=1e-12)


def test_sphere_step_known_boundary_solution():
    # H = diag(1, 3), g = (-2, 0), radius 1: p(nu) = (2/(1+nu), 0),
    # ||p|| = 1 at nu = 1, so p = (1, 0)
    m = sphere_model([-2.0, 0.0], np.diag([1.0, 3.0]))
    p = solve_sphere_subproblem(m, radius=1.0)
    np.testing.assert_allclose(p, [1.0, 0.0], atol=1e-9)


def test_sphere_step_pure_hard_case():
    # zero gradient, indefinite H: descend along the lowest eigenvector to
    # the boundary; the canonical sign picks +e0, decrease = -0.5 lam r^2
    m = sphere_model([0.0, 0.0], np.diag([-1.0, 2.0]))
    p = solve_sphere_subproblem(m, radius=1.0)
    np.testing.assert_allclose(p, [1.0, 0.0], atol=1e-9)
    assert model_decrease(m, p) == pytest.approx(-0.5)


def test_sphere_step_hard_case_with_transverse_gradient():
    m = sphere_model([0.0, 1.0], np.diag([-1.0, 2.0]))
    radius = 1.0
    p = solve_sphere_subproblem(m, radius)
    assert np.linalg.norm(p) == pytest.approx(radius, rel=1e-8)
    # transverse component solves (lam_1 + nu) p_1 = -g_1 with nu = 1
    assert p[1] == pytest.approx(-1.0 / 3.0, rel=1e-8)
    assert p[0] == pytest.approx(np.sqrt(1.0 - 1.0 / 9.0), rel=1e-8)


def test_sphere_step_rejects_bad_radius():
    m = sphere_model([1.0], [[1.0]])
    with pytest.raises(ValueError, match="radius"):
        solve_sphere_subproblem(m, 0.0)


def test_sphere_step_kkt_conditions():
    rng = np.random.default_rng(1)
    for trial in range(200):
        n = int(rng.integers(1, 6))
        h = rng.normal(size=(n, n))
        h = 0.5 * (h + h.T)
        g = rng.normal(size=n) * (0.0 if trial % 7 == 0 else 1.0)
        radius = float(rng.uniform(0.1, 3.0))
        m = sphere_model(g, h)
        p = solve_sphere_subproblem(m, radius)
        lam_min = float(np.linalg.eigvalsh(h)[0])
        norm = float(np.linalg.norm(p))
        assert norm <= radius * (1.0 + 1e-8)
        # recover nu from the stationarity residual along p
        resid = h @ p + g
        if norm > 1e-12:
            nu = float(-(resid @ p) / (norm * norm))
            assert nu >= max(0.0, -lam_min) - 1e-6 * max(1.0, abs(lam_min))
            np.testing.assert_allclose(resid, -nu * p,
                                       atol=1e-6 * max(1.0, np.abs(g).max()))
            if nu > 1e-7:
                assert norm == pytest.approx(radius, rel=1e-6)


def test_sphere_step_beats_ball_sampling():
    rng = np.random.default_rng(2)
    for _ in range(50):
        n = int(rng.integers(1, 5))
        h = rng.normal(size=(n, n))
        h = 0.5 * (h + h.T)
        g = rng.normal(size=n)
        radius = float(rng.uniform(0.2, 2.0))
        m = sphere_model(g, h)
        p = solve_sphere_subproblem(m, radius)
        dirs = rng.normal(size=(500, n))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        radii = radius * rng.uniform(0.0, 1.0, size=(500, 1)) ** (1.0 / n)
        samples = np.vstack([dirs * radii, dirs * radius])
        best = min(model_decrease(m, s) for s in samples)
        assert model_decrease(m, p) <= best + 1e-9


# ---------------------------------------------------------------------------
# Outer loop


def test_trn_config_validation():
    with pytest.raises(ValueError, match="r0"):
        TrnConfig(r0=0.0)
    with pytest.raises(ValueError, match="r0"):
        TrnConfig(r0=2.0, r_max=1.0)
    with pytest.raises(ValueError, match="max_iter"):
        TrnConfig(max_iter=0)


def test_trn_solves_convex_quadratic_in_one_accepted_step():
    h = np.diag([2.0, 5.0])
    f = Quadratic(1.0, np.array([-2.0, 5.0]), h)
    x_star = -np.linalg.solve(h, f.g)
    trace = trn_minimize(f, np.zeros(2), TrnConfig(r0=10.0, r_max=10.0))
    assert trace.converged
    np.testing.assert_allclose(trace.final_point, x_star, atol=1e-10)
    assert trace.records[0].rho == pytest.approx(1.0)


def test_trn_rosenbrock_converges():
    trace = trn_minimize(Rosenbrock(), np.array([-1.2, 1.0]),
                         TrnConfig(r0=1.0, r_max=10.0, max_iter=500,
                                   eps1=1e-14, eps2=1e-14))
    assert trace.converged
    np.testing.assert_allclose(trace.final_point, [1.0, 1.0], atol=1e-6)
    assert trace.f_final <= 1e-12


def test_trn_trace_invariants():
    problem = biogas.generate_problem(
        biogas.default_generator_config("cone", seed=5), 8, "cone")
    cost_y = biogas.transformed_cost(problem)
    from quanco.bounds import eta_inverse
    y0 = eta_inverse(cost_y.spec, biogas.initial_point(8))
    trace = trn_minimize(cost_y, y0, TrnConfig(max_iter=60))
    fs = [trace.f_initial] + [r.f for r in trace.records]
    assert all(b <= a + 1e-15 for a, b in zip(fs, fs[1:]))
    for prev, cur in zip(trace.records, trace.records[1:]):
        if not prev.accepted:
            assert cur.radius_max == pytest.approx(prev.radius_max / 4.0)
        assert cur.radius_max <= 5.0 + 1e-12
    assert trace.num_accepted >= 1
    assert trace.reason in ("actual change below eps1",
                            "predicted change below eps2",
                            "max iterations reached")


def test_trn_radius_expansion_hits_cap():
    # linear cost: every step lands on the boundary with rho = 1
    f = Quadratic(0.0, np.array([-1.0, 0.0]), np.zeros((2, 2)))
    trace = trn_minimize(f, np.zeros(2), TrnConfig(r0=0.5, r_max=4.0, max_iter=6))
    assert [r.radius_max for r in trace.records] == [0.5, 1.0, 2.0, 4.0, 4.0, 4.0]
    assert all(r.accepted for r in trace.records)


def test_trn_constant_cost_converges_immediately():
    f = Quadratic(3.0, np.zeros(2), np.zeros((2, 2)))
    trace = trn_minimize(f, np.ones(2), TrnConfig())
    assert trace.converged
    assert trace.reason == "actual change below eps1"
    assert len(trace.records) == 1


def test_trn_rejects_nonfinite_start():
    with pytest.raises(ValueError, match="not finite"):
        trn_minimize(Rosenbrock(), np.array([np.nan, 0.0]), TrnConfig())

import math

import numpy as np
import pytest
from scipy.optimize import minimize

from steklov.exceptions import SeedInvalid
from steklov.geometry import FourierShape, area
from steklov.optimizer import (
    INTERP_A0,
    ProblemSpec,
    bound_report,
    default_node_count,
    expected_multiplicity,
    gauge_rotation,
    interp_seed,
    optimize,
    random_seed,
    simplex_qp,
    verify_conjecture,
)

SQRT_PI = math.sqrt(math.pi)


class TestSeeds:
    def test_interp_coefficients(self):
        s = interp_seed(50)
        assert s.a[0] == INTERP_A0
        assert s.a[50] == pytest.approx(1 / 17.4015)
        assert s.a[50] == pytest.approx(0.057475351612645, rel=2e-3)  # figure 1 domain
        assert interp_seed(10).a[10] == pytest.approx(1 / 3.6255)
        assert interp_seed(2).a[6] == pytest.approx(1 / (-4.5563 - 15.3122))
        assert interp_seed(2).a[6] < 0
        nonzero = np.flatnonzero(interp_seed(7).to_vector())
        assert nonzero.tolist() == [0, 7, 14, 21]

    def test_interp_rescaled(self):
        assert np.allclose(interp_seed(5, a0=1.0).to_vector(), interp_seed(5).to_vector() / 2.5)
        with pytest.raises(ValueError):
            interp_seed(1)

    def test_random_seed(self):
        s = random_seed(6, np.random.default_rng(1))
        k = np.arange(1, 7)
        assert s.a[0] == 1.0
        assert np.all(np.abs(s.a[1:]) <= 0.1 / k) and np.all(np.abs(s.b) <= 0.1 / k)
        assert np.array_equal(random_seed(6, 4).to_vector(), random_seed(6, 4).to_vector())

    @pytest.mark.parametrize("p,m", [(1, 2), (2, 2), (3, 3), (4, 2), (5, 3), (9, 3), (10, 2)])
    def test_expected_multiplicity(self, p, m):
        assert expected_multiplicity(p) == m

    def test_expected_multiplicity_invalid(self):
        with pytest.raises(ValueError):
            expected_multiplicity(0)


class TestProblemSpec:
    def test_defaults(self):
        spec = ProblemSpec(p=3)
        assert spec.m_window == 3 and spec.m_max == 11
        assert spec.window == [3, 4, 5]
        assert len(spec.free_modes()) == 22
        assert spec.n_nodes == default_node_count(3, 3, 11) and spec.n_nodes % 2 == 0
        assert spec.n_nodes >= 6 * 3 * 3

    def test_symmetric(self):
        spec = ProblemSpec(p=4, mode="symmetric")
        assert spec.free_modes() == [("cos", 4), ("cos", 8), ("cos", 12)]
        assert spec.m_max == 12

    @pytest.mark.parametrize(
        "kwargs",
        [dict(p=0), dict(p=2, mode="other"), dict(p=2, m_window=0), dict(p=3, mode="symmetric", m_max=5),
         dict(p=2, subproblem="newton"), dict(p=2, step_tol=0)],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            ProblemSpec(**kwargs)


class TestSimplexQP:
    @pytest.mark.parametrize("m", [1, 2, 3, 5, 8])
    def test_against_slsqp(self, m):
        rng = np.random.default_rng(m)
        for _ in range(5):
            c = rng.normal(size=m)
            L = rng.normal(size=(m, m))
            Q = L @ L.T
            mu = simplex_qp(c, Q)
            assert mu.min() >= 0 and mu.sum() == pytest.approx(1)
            f = lambda x: c @ x + 0.5 * x @ Q @ x  # noqa: E731
            best = min(
                (minimize(f, x0, bounds=[(0, 1)] * m, constraints=[{"type": "eq", "fun": lambda x: x.sum() - 1}], method="SLSQP", options={"ftol": 1e-14}).fun
                 for x0 in np.vstack([np.full(m, 1 / m), np.eye(m)])),
            )
            assert f(mu) <= best + 1e-9

    def test_singular_hessian(self):
        mu = simplex_qp(np.array([1.0, 0.0, 2.0]), np.zeros((3, 3)))
        assert np.allclose(mu, [0, 1, 0])


class TestGauge:
    def test_rotation_makes_cosine(self):
        s = FourierShape([1.0, 0.01, 0.05, 0.0], [0.02, 0.12, 0.0])
        g = gauge_rotation(s)
        assert abs(g.b[1]) < 1e-15 and g.a[2] > 0
        assert g.a[2] == pytest.approx(math.hypot(0.05, 0.12))
        assert area(g) == pytest.approx(area(s))

    def test_disk(self):
        assert gauge_rotation(FourierShape.disk()).to_vector().tolist() == [1.0]


class TestOptimize:
    def test_p1_converges_to_disk(self):
        spec = ProblemSpec(p=1, m_max=4)
        run = optimize(spec, rng=0)
        assert run.value == pytest.approx(SQRT_PI, abs=1e-6)
        assert area(run.shape) == pytest.approx(math.pi)
        assert run.spectrum_window[3] == pytest.approx(2 * SQRT_PI, abs=1e-3)
        report = verify_conjecture(run)
        assert report["cluster_p"] == [1, 2]
        assert report["pfold_residual"] == 0.0
        # a translated disk is not a pure a_0 shape in polar form; equality in
        # the isoperimetric inequality identifies it instead
        rep = bound_report(run.shape, n=128)
        assert abs(rep["isoperimetric_margin"]) < 1e-5

    def test_history_monotone(self):
        run = optimize(ProblemSpec(p=2, m_max=6, max_iters=25), rng=3)
        accepted = [h["value"] for h in run.history if h["accepted"]]
        assert all(b > a for a, b in zip(accepted, accepted[1:]))
        values = [h["value"] for h in run.history]
        assert all(b >= a for a, b in zip(values, values[1:]))
        assert run.value == values[-1]

    def test_lp_variant(self):
        # the linear model converges slowly near a double eigenvalue
        run = optimize(ProblemSpec(p=1, m_max=3, subproblem="lp"), rng=2)
        assert run.value == pytest.approx(SQRT_PI, abs=1e-3)
        assert run.value > run.history[0]["value"]
        values = [h["value"] for h in run.history]
        assert all(b >= a for a, b in zip(values, values[1:]))

    def test_symmetric_stays_symmetric(self):
        spec = ProblemSpec(p=3, mode="symmetric", max_iters=15)
        run = optimize(spec)
        allowed = {0, 3, 6, 9}
        for shape in run.visited:
            assert set(np.flatnonzero(shape.to_vector())) <= allowed
        assert run.value == pytest.approx(4.14395657280, abs=1e-3)

    def test_symmetric_rejects_bad_seed(self):
        with pytest.raises(SeedInvalid):
            optimize(ProblemSpec(p=3, mode="symmetric"), FourierShape([1.0, 0.1]))

    def test_scale_invariance(self):
        spec = ProblemSpec(p=2, mode="symmetric", max_iters=40)
        seed = interp_seed(2)
        a = optimize(spec, seed)
        b = optimize(spec, seed.scaled(2.0))
        assert a.value == pytest.approx(b.value, abs=1e-8)
        assert np.allclose(a.shape.to_vector(), b.shape.to_vector(), atol=1e-5)

    def test_bound_margins_recorded(self):
        run = optimize(ProblemSpec(p=1, m_max=3, max_iters=10), rng=1)
        assert len(run.bound_margins) == run.evaluations == len(run.visited)
        assert all(h <= 1e-6 and iso <= 1e-9 for h, iso in run.bound_margins)

    def test_run_serializes(self):
        import json

        run = optimize(ProblemSpec(p=1, m_max=2, max_iters=3), rng=1)
        d = json.loads(json.dumps(run.to_dict()))
        assert d["spec"]["p"] == 1 and d["status"] in ("Converged", "MaxIters", "Stalled")


def test_bound_report_disk():
    rep = bound_report(FourierShape.disk(), n=64)
    assert rep["hps_margin"] == pytest.approx(0.0, abs=1e-9)  # equality for lambda_1 of the disk
    assert rep["isoperimetric_margin"] == pytest.approx(0.0, abs=1e-9)
    rep = bound_report(FourierShape([1.0, 0.0, 0.2]), n=128)
    assert rep["hps_margin"] < 0 and rep["isoperimetric_margin"] < 0

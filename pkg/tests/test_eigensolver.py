import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import ritz_steklov
from steklov.eigensolver import (
    evaluate_field,
    multiplicity_clusters,
    normalized_eigenvalue,
    solve_spectrum,
    steklov_spectrum,
)
from steklov.exceptions import InsufficientResolution
from steklov.geometry import FourierShape, area, build_grid, perimeter
from steklov.nystrom import assemble_pair

DISK = FourierShape.disk()
DISK_LAMBDAS = [0, 1, 1, 2, 2, 3, 3, 4, 4, 5, 5, 6]


class TestDisk:
    def test_spectrum(self):
        sp = steklov_spectrum(DISK, 64, 12)
        assert np.abs(sp.lambdas - DISK_LAMBDAS).max() < 1e-10
        assert len(sp) == 12

    def test_homothety(self):
        lam = steklov_spectrum(DISK, 64, 12).lambdas
        lam25 = steklov_spectrum(FourierShape.disk(2.5), 64, 12).lambdas
        assert np.allclose(lam25, lam / 2.5, atol=1e-12)

    def test_normalized(self):
        sp = steklov_spectrum(DISK, 64, 4)
        assert normalized_eigenvalue(DISK, sp, 1) == pytest.approx(np.sqrt(np.pi), abs=1e-12)
        assert normalized_eigenvalue(DISK, sp, 3) == pytest.approx(2 * np.sqrt(np.pi), abs=1e-12)

    def test_constant_trace(self):
        sp = steklov_spectrum(DISK, 32, 3)
        u0 = sp.traces[:, 0]
        assert np.ptp(u0) < 1e-13
        assert abs(sp.lambdas[0]) < 1e-8

    def test_disk_diagonalization(self):
        n = 48
        lam = steklov_spectrum(DISK, n, n // 4).lambdas
        expected = np.r_[0, np.repeat(np.arange(1, n // 8 + 1), 2)][: n // 4]
        assert np.abs(lam - expected).max() < 1e-10

    def test_weyl(self):
        lam = steklov_spectrum(DISK, 96, 21).lambdas
        assert 0.95 <= lam[20] * 2 * np.pi / (20 * np.pi) <= 1.05


class TestGeneralShapes:
    def test_against_ritz_oracle(self):
        s = FourierShape([1.0, 0.0, 0.2])
        lam = steklov_spectrum(s, 256, 12).lambdas
        ref = ritz_steklov(s.a, s.b, degree=40)[:12]
        assert np.abs(lam - ref).max() < 1e-9

    def test_against_ritz_oracle_asymmetric(self):
        s = FourierShape([1.0, 0.1, -0.08, 0.05], [0.06, 0.04, -0.03])
        lam = steklov_spectrum(s, 256, 10).lambdas
        ref = ritz_steklov(s.a, s.b, degree=50)[:10]
        assert np.abs(lam - ref).max() < 1e-8

    def test_reflection_symmetry(self):
        s = FourierShape([1.0, 0.1, -0.08, 0.05], [0.06, 0.04, -0.03])
        a = steklov_spectrum(s, 128, 10).lambdas
        b = steklov_spectrum(s.reflected(), 128, 10).lambdas
        assert np.abs(a - b).max() < 1e-10

    def test_rotation_invariance(self):
        s = FourierShape([1.0, 0.1, -0.08, 0.05], [0.06, 0.04, -0.03])
        a = steklov_spectrum(s, 128, 10).lambdas
        b = steklov_spectrum(s.rotated(0.9), 128, 10).lambdas
        assert np.abs(a - b).max() < 1e-10

    def test_trace_normalization_and_orthogonality(self):
        s = FourierShape([1.0, 0.1, -0.08, 0.05], [0.06, 0.04, -0.03])
        sp = steklov_spectrum(s, 128, 10)
        gram = sp.traces.T @ (sp.grid.weights[:, None] * sp.traces)
        assert np.abs(np.diag(gram) - 1).max() < 1e-12
        # Steklov traces are L2(ds)-orthogonal for distinct eigenvalues
        assert np.abs(gram - np.eye(10)).max() < 1e-8

    def test_traces_are_B_phi(self):
        s = FourierShape([1.0, 0.0, 0.2])
        pair = assemble_pair(build_grid(s, 64))
        sp = solve_spectrum(pair, 8)
        assert np.allclose(pair.B @ sp.densities, sp.traces, atol=1e-12)
        assert np.allclose(pair.A @ sp.densities, pair.B @ sp.densities * sp.lambdas, atol=1e-9)

    def test_hps_bound(self):
        s = FourierShape([1.0, 0.1, -0.08, 0.05], [0.06, 0.04, -0.03])
        lam = steklov_spectrum(s, 128, 13).lambdas
        L = perimeter(s)
        js = np.arange(1, 13)
        assert np.all(lam[1:] * L <= 2 * np.pi * js + 1e-6)

    def test_standard_reduction_matches_qz(self):
        s = FourierShape([1.0, 0.1, -0.08, 0.05], [0.06, 0.04, -0.03])
        pair = assemble_pair(build_grid(s, 128))
        a = solve_spectrum(pair, 10)
        b = solve_spectrum(pair, 10, method="standard")
        assert np.abs(a.lambdas - b.lambdas).max() < 1e-11
        assert np.abs(a.traces - b.traces).max() < 1e-8
        with pytest.raises(ValueError):
            solve_spectrum(pair, 10, method="lu")

    def test_count_guard(self):
        with pytest.raises(InsufficientResolution):
            steklov_spectrum(DISK, 30, 11)
        with pytest.raises(ValueError):
            steklov_spectrum(DISK, 30, 0)


class TestField:
    def test_constant_mode(self):
        sp = steklov_spectrum(FourierShape([1.0, 0.0, 0.2]), 64, 3)
        pts = np.array([[0.0, 0.0], [0.3, -0.2], [3.0, 1.0]])
        assert np.allclose(evaluate_field(sp, 0, pts), sp.traces[0, 0], atol=1e-13)

    def test_disk_first_mode(self):
        sp = steklov_spectrum(DISK, 64, 3)
        # the j=1, 2 pair spans r cos, r sin: the trace is g . x for some g
        pts = np.array([[0.0, 0.0], [0.5, 0.0], [0.2, 0.3], [-0.6, 0.1]])
        for j in (1, 2):
            g, *_ = np.linalg.lstsq(sp.grid.x, sp.traces[:, j], rcond=None)
            assert np.allclose(sp.grid.x @ g, sp.traces[:, j], atol=1e-12)
            assert np.hypot(*g) == pytest.approx(1 / np.sqrt(np.pi))
            u = evaluate_field(sp, j, pts)
            assert abs(u[0]) < 1e-13
            assert np.allclose(u, pts @ g, atol=1e-12)

    def test_interior_matches_trace_and_is_harmonic(self):
        s = FourierShape([1.0, 0.0, 0.2])
        sp = steklov_spectrum(s, 256, 6)
        j = 3
        # five-point Laplacian at interior points
        h = 1e-3
        c = np.array([[0.1, 0.2], [-0.3, 0.05]])
        offs = np.array([[h, 0], [-h, 0], [0, h], [0, -h]])
        for p in c:
            vals = evaluate_field(sp, j, p + offs)
            lap = (vals.sum() - 4 * evaluate_field(sp, j, p[None])[0]) / h**2
            assert abs(lap) < 1e-5
        # approaching a node from inside recovers the trace
        i = 10
        x = sp.grid.x[i] * (1 - 0.05)
        near = evaluate_field(sp, j, x[None])[0]
        assert abs(near - sp.traces[i, j]) < 0.1 * np.abs(sp.traces[:, j]).max()

    def test_point_on_node_returns_trace(self):
        sp = steklov_spectrum(FourierShape([1.0, 0.0, 0.2]), 64, 4)
        vals = evaluate_field(sp, 3, sp.grid.x[[0, 5, 9]])
        assert np.allclose(vals, sp.traces[[0, 5, 9], 3], atol=1e-14)

    def test_shape_of_output(self):
        sp = steklov_spectrum(DISK, 32, 3)
        pts = np.zeros((4, 5, 2))
        assert evaluate_field(sp, 1, pts).shape == (4, 5)
        with pytest.raises(ValueError):
            evaluate_field(sp, 1, np.zeros((3, 3)))


class TestClusters:
    def test_disk(self):
        sp = steklov_spectrum(DISK, 64, 9)
        assert multiplicity_clusters(sp) == [[0], [1, 2], [3, 4], [5, 6], [7, 8]]

    def test_singletons(self):
        assert multiplicity_clusters([0.0, 1.0, 1.1, 2.0]) == [[0], [1], [2], [3]]

    def test_symmetric_pairs_orthonormal(self):
        # 14-fold shape: every pair below is exactly degenerate and QZ hands
        # back complex bases whose real parts are nearly parallel
        from steklov.optimizer import interp_seed

        sp = steklov_spectrum(interp_seed(14), 504, 16)
        assert multiplicity_clusters(sp)[1:4] == [[1, 2], [3, 4], [5, 6]]
        gram = sp.traces.T @ (sp.grid.weights[:, None] * sp.traces)
        assert np.abs(gram - np.eye(16)).max() < 1e-8
        pair = assemble_pair(sp.grid)
        assert np.abs(pair.A @ sp.densities - (pair.B @ sp.densities) * sp.lambdas).max() < 1e-8

    def test_tolerance(self):
        assert multiplicity_clusters([1.0, 1.0 + 1e-7], 1e-6) == [[0, 1]]
        assert multiplicity_clusters([1.0, 1.0 + 1e-5], 1e-6) == [[0], [1]]
        with pytest.raises(ValueError):
            multiplicity_clusters([1.0], 0)


@settings(max_examples=15, deadline=None)
@given(
    a=st.lists(st.floats(-0.08, 0.08), min_size=1, max_size=4),
    b=st.lists(st.floats(-0.08, 0.08), max_size=4),
    t=st.floats(0.3, 4.0),
)
def test_dilation_invariance(a, b, t):
    s = FourierShape([1.0] + a, b)
    sp = steklov_spectrum(s, 64, 8)
    spt = steklov_spectrum(s.scaled(t), 64, 8)
    assert np.allclose(spt.lambdas, sp.lambdas / t, atol=1e-10)
    assert np.allclose(
        normalized_eigenvalue(s.scaled(t), spt), normalized_eigenvalue(s, sp), atol=1e-10
    )
    assert area(s.scaled(t)) == pytest.approx(t * t * area(s))

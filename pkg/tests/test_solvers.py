import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from bellbounds.errors import ValidationError
from bellbounds.solvers import (INFEASIBLE, OPTIMAL, UNBOUNDED, LpProblem, RngStream, gaussian_matrix, j_norm,
                                k_norm, k_norm_certified, lp_solve, svd, sym_eig)

from oracles import jacobi_eig, k_norm_primal

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


class TestLinalg:
    @pytest.mark.parametrize("seed", range(5))
    def test_sym_eig_matches_jacobi(self, seed):
        a = np.random.default_rng(seed).normal(size=(6, 6))
        a = a + a.T
        w, v = sym_eig(a)
        assert np.allclose(w, jacobi_eig(a), atol=1e-10)
        assert np.allclose(v.T @ v, np.eye(6), atol=1e-12)
        assert np.allclose(a @ v, v * w, atol=1e-10)
        assert np.all(np.diff(w) <= 0)

    def test_sym_eig_rejects_asymmetric(self):
        with pytest.raises(ValidationError):
            sym_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_svd_reconstructs(self):
        a = np.random.default_rng(1).normal(size=(4, 7))
        s, u, vt = svd(a)
        assert np.allclose(u * s @ vt, a)
        assert np.all(np.diff(s) <= 0)
        assert np.allclose(s ** 2, jacobi_eig(a @ a.T), atol=1e-10)


class TestLp:
    @pytest.mark.parametrize("seed", range(20))
    def test_random_feasible_against_highs(self, seed):
        rng = np.random.default_rng(seed)
        m, n = 4, 9
        a = rng.normal(size=(m, n))
        b = a @ rng.random(n)                 # feasible by construction
        c = rng.random(n) + 0.1               # bounded below on x >= 0
        res = lp_solve(LpProblem(c, a, b))
        ref = linprog(c, A_eq=a, b_eq=b, bounds=(0, None), method="highs")
        assert res.status == OPTIMAL
        assert res.value == pytest.approx(ref.fun, abs=1e-8)
        assert res.gap <= 1e-8
        assert res.dual_infeasibility <= 1e-8
        assert res.primal_residual <= 1e-8

    def test_redundant_rows(self):
        a = np.array([[1.0, 1.0, 0.0], [2.0, 2.0, 0.0], [0.0, 1.0, 1.0]])
        b = np.array([1.0, 2.0, 1.0])
        res = lp_solve(LpProblem([1.0, 2.0, 3.0], a, b))
        assert res.status == OPTIMAL
        assert res.value == pytest.approx(2.0)   # x2 = 1 serves both rows
        assert res.gap <= 1e-10

    def test_infeasible(self):
        res = lp_solve(LpProblem([1.0, 1.0], [[1.0, 1.0]], [-1.0]))
        assert res.status == INFEASIBLE

    def test_unbounded(self):
        res = lp_solve(LpProblem([-1.0, 0.0], [[1.0, -1.0]], [0.0]))
        assert res.status == UNBOUNDED

    def test_degenerate_cycling_example(self):
        # Beale's example, which cycles under the textbook largest-coefficient rule
        c = np.array([-0.75, 150.0, -0.02, 6.0, 0, 0, 0])
        a = np.array([[0.25, -60.0, -0.04, 9.0, 1, 0, 0],
                      [0.5, -90.0, -0.02, 3.0, 0, 1, 0],
                      [0.0, 0.0, 1.0, 0.0, 0, 0, 1]])
        b = np.array([0.0, 0.0, 1.0])
        res = lp_solve(LpProblem(c, a, b))
        assert res.status == OPTIMAL
        assert res.value == pytest.approx(-0.05)

    def test_shape_check(self):
        with pytest.raises(ValueError):
            LpProblem([1.0, 2.0], [[1.0, 2.0, 3.0]], [1.0])


class TestRng:
    def test_determinism(self):
        a = gaussian_matrix(5, 7, RngStream(3, 1))
        b = gaussian_matrix(5, 7, RngStream(3, 1))
        assert np.array_equal(a, b)
        assert not np.array_equal(a, gaussian_matrix(5, 7, RngStream(3, 2)))
        assert not np.array_equal(a, gaussian_matrix(5, 7, RngStream(4, 1)))

    def test_children_are_distinct(self):
        s = RngStream(0, 5)
        draws = {tuple(s.child(i).uniform(3)) for i in range(50)}
        assert len(draws) == 50

    def test_moments_within_clt_band(self):
        z = gaussian_matrix(200, 500, RngStream(11)).ravel()
        n = z.size
        # 5-sigma bands for the sample mean and variance
        assert abs(z.mean()) < 5 / np.sqrt(n)
        assert abs(z.var() - 1) < 5 * np.sqrt(2 / n)
        assert abs(np.mean(np.abs(z) < 1.0) - 0.682689) < 5 * np.sqrt(0.25 / n)

    def test_odd_sizes(self):
        assert RngStream(0).normal(7).shape == (7,)
        assert RngStream(0).normal((3, 3)).shape == (3, 3)

    def test_bad_seed(self):
        with pytest.raises(ValueError):
            RngStream(-1)


class TestKNorm:
    @pytest.mark.parametrize("t", [0.1, 0.5, 1.0])
    @pytest.mark.parametrize("size", [1, 2, 3, 4])
    def test_against_primal_splitting(self, t, size):
        rng = np.random.default_rng(int(100 * t) + size)
        for _ in range(10):
            x = rng.normal(size=size) * rng.choice([0.1, 1, 10])
            assert k_norm(x, t) == pytest.approx(k_norm_primal(x, t), abs=1e-6, rel=1e-6)

    def test_certificate_gap(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            x = rng.normal(size=rng.integers(1, 30))
            t = float(rng.uniform(0.01, 1.0))
            r = k_norm_certified(x, t)
            assert r.gap <= 1e-7 * max(1.0, r.value)
            assert j_norm(r.witness, 1 / t) <= 1 + 1e-9
            assert r.witness @ x == pytest.approx(r.value)

    def test_limits(self):
        x = np.array([3.0, -1.0, 0.5])
        # t = 1: l_inf is the smallest summand; tiny t: the l_1 term is cheapest
        assert k_norm(x, 1.0) == pytest.approx(np.abs(x).max())
        assert k_norm(x, 1e-4) == pytest.approx(1e-4 * np.abs(x).sum(), rel=1e-9)
        assert k_norm(np.zeros(4), 0.3) == 0.0

    def test_bounded_by_each_summand(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            x = rng.normal(size=6)
            t = rng.uniform(0.05, 1)
            v = k_norm(x, t)
            assert v <= np.abs(x).max() + 1e-12
            assert v <= np.sqrt(t) * np.linalg.norm(x) + 1e-12
            assert v <= t * np.abs(x).sum() + 1e-12

    @settings(max_examples=200, deadline=None)
    @given(st.lists(finite, min_size=1, max_size=8), st.floats(0.05, 1.0), st.floats(-5, 5))
    def test_homogeneity(self, x, t, c):
        x = np.array(x)
        assert k_norm(c * x, t) == pytest.approx(abs(c) * k_norm(x, t), rel=1e-7, abs=1e-9)

    @settings(max_examples=200, deadline=None)
    @given(st.integers(1, 8).flatmap(lambda n: st.tuples(st.lists(finite, min_size=n, max_size=n),
                                                        st.lists(finite, min_size=n, max_size=n))),
           st.floats(0.05, 1.0))
    def test_triangle(self, xy, t):
        x, y = np.array(xy[0]), np.array(xy[1])
        assert k_norm(x + y, t) <= k_norm(x, t) + k_norm(y, t) + 1e-8

    @settings(max_examples=300, deadline=None)
    @given(st.integers(1, 8).flatmap(lambda n: st.tuples(st.lists(finite, min_size=n, max_size=n),
                                                        st.lists(finite, min_size=n, max_size=n))),
           st.floats(0.05, 1.0))
    def test_holder(self, xa, t):
        x, a = np.array(xa[0]), np.array(xa[1])
        assert abs(x @ a) <= k_norm(x, t) * j_norm(a, 1 / t) * (1 + 1e-9) + 1e-12

    def test_j_norm(self):
        a = np.array([1.0, -2.0, 0.5])
        assert j_norm(a, 1.0) == pytest.approx(3.5)
        assert j_norm(a, 4.0) == pytest.approx(8.0)
        with pytest.raises(ValueError):
            j_norm(a, 0.0)

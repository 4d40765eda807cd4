import itertools
import math

import numpy as np
import pytest

from bellbounds.construction import (ConstructionParams, chevet_monte_carlo, construct, d_hat, default_m,
                                     gaussian_lemma_statistic, injective_norm, input_tuples, lemma_epsilon_monitor,
                                     lemma_epsilon_trend, lemma_min_monitor, pipeline, positive_sum_identity,
                                     sample_gaussian, singular_subspace, weak_l2, x_norm)
from bellbounds.errors import BudgetExceeded, ValidationError
from bellbounds.quantum import SeesawConfig
from bellbounds.solvers import RngStream, gaussian_matrix, k_norm


def dual_extremes(space, dim, rng, samples=4000):
    """Points of the dual unit ball: all extreme points when finite, else random sphere points."""
    if space == "l1":       # dual l_inf: sign vectors
        return np.array(list(itertools.product((-1.0, 1.0), repeat=dim)))
    if space == "linf":     # dual l_1: signed basis vectors
        return np.vstack([np.eye(dim), -np.eye(dim)])
    v = rng.normal(size=(samples, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


class TestParams:
    def test_default_m(self):
        assert default_m(2, 4) == 4
        assert default_m(3, 4) == 9
        assert default_m(2, 3) == 3      # ceil(2^1.5 = 2.83)

    def test_window(self):
        ConstructionParams(2, 4, m=8)
        with pytest.raises(ValidationError):
            ConstructionParams(2, 4, m=9)
        with pytest.raises(ValidationError):
            ConstructionParams(2, 4, m=3)
        with pytest.raises(ValidationError):
            ConstructionParams(2, 2)

    def test_log_preset(self):
        p = ConstructionParams.log_preset(8)
        assert p.q == pytest.approx(3.0)
        assert p.m == default_m(8, 3)

    def test_t(self):
        p = ConstructionParams(2, 4)
        assert p.t == 0.5
        assert p.inputs == 16


class TestConstruct:
    def test_shape_and_symmetry(self):
        con = construct(ConstructionParams(2, 4, seed=7))
        m = con.functional.m
        assert m.shape == (16, 16, 2, 2)
        assert np.array_equal(m, m.transpose(1, 0, 3, 2))

    @pytest.mark.parametrize("seed", range(4))
    def test_entries_against_loops(self, seed):
        params = ConstructionParams(2, 4, seed=seed)
        con = construct(params)
        g = sample_gaussian(params)
        sub = singular_subspace(g, params)
        f = sub.vectors @ g                        # f_l(j)
        omegas = input_tuples(2, params.m)
        m = con.functional.m
        rng = np.random.default_rng(seed)
        for _ in range(50):
            i, j, c, d = rng.integers([16, 16, 2, 2])
            want = sum(f[l, omegas[i][c]] * f[l, omegas[j][d]] for l in range(sub.k))
            assert m[i, j, c, d] == pytest.approx(want, abs=1e-12)

    def test_psd_rank_k(self):
        con = construct(ConstructionParams(2, 4, seed=3))
        mat = con.functional.m.transpose(0, 2, 1, 3).reshape(32, 32)
        w = np.linalg.eigvalsh(mat)
        assert w.min() >= -1e-10
        assert int((w > 1e-9 * w.max()).sum()) == con.subspace.k

    def test_seeded(self):
        a = construct(ConstructionParams(2, 4, seed=5)).functional.m
        b = construct(ConstructionParams(2, 4, seed=5)).functional.m
        c = construct(ConstructionParams(2, 4, seed=6)).functional.m
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_budget_guard(self):
        with pytest.raises(BudgetExceeded):
            construct(ConstructionParams(4, 4))

    def test_empty_subspace(self):
        with pytest.raises(ValidationError):
            construct(ConstructionParams(2, 4, sigma_threshold=50.0))

    def test_singular_values_descend(self):
        params = ConstructionParams(3, 4, seed=1)
        sub = singular_subspace(sample_gaussian(params), params)
        assert np.all(np.diff(sub.singular_values) <= 0)
        assert np.allclose(sub.vectors @ sub.vectors.T, np.eye(sub.k))
        assert np.allclose(sub.inverse_weights, sub.singular_values[:sub.k] ** -2.0)


class TestPipeline:
    def test_one_seed(self):
        rep = pipeline(ConstructionParams(2, 4, seed=0))
        assert rep["LV"] >= 1 - 1e-9
        assert rep["certificates"]["classical"]["certificate"] == "exact"
        assert rep["symmetric"]
        assert rep["D_hat"] == pytest.approx(d_hat(rep["LV"], ConstructionParams(2, 4)))
        assert rep["scenario"] == {"inputs": 16, "outputs": 2, "bottom": False}

    def test_padded_matches(self):
        params = ConstructionParams(2, 4, seed=1)
        cfg = SeesawConfig(2, 2, restarts=3, stream=RngStream(1, 1))
        a = pipeline(params, cfg)
        b = pipeline(params, cfg, padded=True)
        assert b["B_C"] == pytest.approx(a["B_C"], rel=1e-12)
        assert b["scenario"]["bottom"]


class TestGaussianLemma:
    def test_statistic_against_direct(self):
        rep = gaussian_lemma_statistic(16, 64, range(10))
        idx = math.ceil(0.05 * 16) - 1
        hits = 0
        for s in range(10):
            sv = np.linalg.svd(gaussian_matrix(16, 64, RngStream(s, 0)) / 8.0, compute_uv=False)
            hits += sv[idx] >= 0.5
        assert rep["fraction"] == hits / 10
        assert rep["index"] == 1


class TestInjectiveNorm:
    @pytest.mark.parametrize("e,f", list(itertools.product(("l1", "l2", "linf"), repeat=2)))
    def test_against_dual_ball_search(self, e, f):
        rng = np.random.default_rng(0)
        g = rng.normal(size=(4, 5))
        got = injective_norm(g, (e, f))
        us = dual_extremes(e, 4, rng)
        ws = dual_extremes(f, 5, rng)
        ref = np.abs(us @ g @ ws.T).max()
        exact_ref = e != "l2" and f != "l2"
        if exact_ref:
            assert got == pytest.approx(ref, rel=1e-12)
        else:
            # sampled sphere points give a lower bound only
            assert ref <= got * (1 + 1e-12)
            assert ref >= 0.9 * got

    def test_transpose_symmetry(self):
        g = np.random.default_rng(1).normal(size=(3, 6))
        for e, f in itertools.product(("l1", "l2", "linf"), repeat=2):
            assert injective_norm(g, (e, f)) == pytest.approx(injective_norm(g.T, (f, e)), rel=1e-12)

    def test_budget(self):
        with pytest.raises(BudgetExceeded):
            injective_norm(np.ones((30, 2)), ("l1", "l2"), budget=2**10)

    def test_weak_l2(self):
        assert weak_l2("l1", 9) == 3.0
        assert weak_l2("l2", 9) == 1.0
        assert weak_l2("linf", 9) == 1.0

    @pytest.mark.parametrize("pair", [("l2", "l2"), ("l1", "l2"), ("l2", "linf")])
    def test_chevet_small(self, pair):
        rep = chevet_monte_carlo(pair, 6, 8, 30, RngStream(0, 3))
        assert rep["pass"]
        assert rep["statistic"] <= rep["threshold"]


class TestLemmaMonitors:
    def test_x_norm(self):
        y = np.array([1.0, -2.0, 0.5])
        assert x_norm(y, 0.5, 4) == pytest.approx(0.5 ** -0.25 * k_norm(y, 0.5))

    def test_epsilon_monitor(self):
        rep = lemma_epsilon_monitor(ConstructionParams(2, 4), trials=5, probes=16)
        assert rep["lower_bound_valid"]
        assert rep["kind"] == "proxy"
        assert rep["ratio_to_sqrt_q"]["count"] == 5

    def test_epsilon_trend(self):
        rep = lemma_epsilon_trend([2, 3, 4], 4, trials=5)
        assert rep["pass"]
        assert len(rep["ratio_p95"]) == 3

    def test_min_monitor(self):
        rep = lemma_min_monitor(ConstructionParams(2, 4), trials=5)
        assert rep["ratio"]["count"] == 5
        with pytest.raises(BudgetExceeded):
            lemma_min_monitor(ConstructionParams(5, 4), trials=1)

    def test_positive_sum_identity(self):
        rng = np.random.default_rng(0)
        ts = []
        for _ in range(4):
            a = rng.normal(size=(5, 5))
            ts.append(a @ a.T)
        rep = positive_sum_identity(ts)
        assert rep["residual"] <= 1e-9 * rep["lhs"]

    def test_positive_rejects_indefinite(self):
        with pytest.raises(ValidationError):
            positive_sum_identity([np.diag([1.0, -1.0])])

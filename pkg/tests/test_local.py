import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bellbounds import config
from bellbounds.errors import BudgetExceeded
from bellbounds.local import (EXACT, LOWER_BOUND, NO_CLICK, SignedStrategy, check_equivalence, classical_bound,
                              deterministic_points, enumerate_deterministic, epsilon_norm, nu_of_behavior,
                              pi_robustness, pr_boxes, random_nonsignalling, strategy_count)
from bellbounds.model import (Behavior, BellFunctional, Scenario, behavior_from_local, chsh_functional,
                              chsh_tsirelson_behavior, deterministic_behavior, mix_detector_noise, pad_behavior,
                              pad_functional, pair, pr_box, validate)
from bellbounds.solvers import RngStream

from oracles import brute_classical, brute_epsilon, scipy_nu


def random_functional(n, k, seed, rank=None):
    rng = np.random.default_rng(seed)
    sc = Scenario(n, k)
    if rank is None:
        return BellFunctional(sc, rng.normal(size=sc.shape))
    u = rng.normal(size=(rank, n, k))
    v = rng.normal(size=(rank, n, k))
    return BellFunctional(sc, np.einsum("rxa,ryb->xyab", u, v))


class TestEnumeration:
    def test_counts(self):
        sc = Scenario(3, 2)
        assert strategy_count(sc) == 8
        assert strategy_count(sc, incomplete=True) == 27
        assert strategy_count(sc, signed=True) == 64
        assert len(list(enumerate_deterministic(sc, incomplete=True))) == 27

    def test_lexicographic(self):
        got = list(enumerate_deterministic(Scenario(2, 2), incomplete=True))
        assert got[0] == (NO_CLICK, NO_CLICK)
        assert got[-1] == (1, 1)
        assert got == sorted(got)

    def test_signed(self):
        got = list(enumerate_deterministic(Scenario(2, 2), signed=True))
        assert len(got) == 16
        assert all(isinstance(s, SignedStrategy) for s in got)
        assert np.abs(got[5].vector(2)).sum() == 2

    def test_budget_refusal(self):
        with pytest.raises(BudgetExceeded) as e:
            enumerate_deterministic(Scenario(12, 3), budget=1000)
        assert e.value.required == 3 ** 12
        assert e.value.budget == 1000


class TestClassicalBound:
    def test_chsh(self):
        rep = classical_bound(chsh_functional())
        assert rep.value == 2.0
        assert rep.certificate == EXACT

    @pytest.mark.parametrize("seed", range(12))
    def test_against_brute_force(self, seed):
        n, k = [(2, 2), (3, 2), (2, 3), (3, 3)][seed % 4]
        m = random_functional(n, k, seed)
        rep = classical_bound(m, "exact")
        assert rep.value == pytest.approx(brute_classical(m.m), abs=1e-12)

    def test_witness_attains_value(self):
        m = random_functional(3, 2, 5)
        rep = classical_bound(m)
        a, b = rep.witness["alice"], rep.witness["bob"]
        val = sum(m.m[x, y, a[x], b[y]] for x in range(3) for y in range(3) if a[x] >= 0 and b[y] >= 0)
        assert abs(val) == pytest.approx(rep.value)

    @pytest.mark.parametrize("rank", [1, 2])
    def test_low_rank_route_is_exact(self, rank):
        m = random_functional(4, 2, 10 + rank, rank=rank)
        ref = classical_bound(m, "exact")
        low = classical_bound(m, "exact", budget=10)      # forces the rank route
        assert low.method == "low_rank"
        assert low.certificate == EXACT
        assert low.value == pytest.approx(ref.value, rel=1e-12)

    def test_exact_mode_refuses_full_rank(self):
        with pytest.raises(BudgetExceeded):
            classical_bound(random_functional(4, 2, 0), "exact", budget=10)

    def test_heuristic_is_lower_bound(self):
        m = random_functional(4, 2, 3)
        h = classical_bound(m, "heuristic", restarts=5, stream=RngStream(1))
        assert h.certificate == LOWER_BOUND
        assert h.value <= classical_bound(m).value + 1e-12

    def test_auto_falls_back(self):
        rep = classical_bound(random_functional(4, 2, 0), "auto", budget=10, stream=RngStream(0))
        assert rep.certificate == LOWER_BOUND

    def test_global_budget(self):
        config.configure(budget=10)
        try:
            with pytest.raises(BudgetExceeded):
                classical_bound(random_functional(4, 2, 0), "exact")
        finally:
            config.reset()

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**31), st.floats(0.1, 10))
    def test_homogeneous_and_sign_symmetric(self, seed, c):
        m = random_functional(2, 2, seed)
        v = classical_bound(m).value
        assert classical_bound(m * c).value == pytest.approx(c * v, rel=1e-12)
        assert classical_bound(m * -1.0).value == pytest.approx(v, rel=1e-12)

    def test_bounds_every_local_behavior(self):
        m = random_functional(2, 2, 9)
        bc = classical_bound(m).value
        for pt in deterministic_points(m.scenario):
            assert abs(pair(m, Behavior(m.scenario, pt.tensor(m.scenario)))) <= bc + 1e-12

    @pytest.mark.parametrize("seed", range(8))
    def test_padding_invariance(self, seed):
        m = random_functional(3, 2, seed)
        assert classical_bound(pad_functional(m)).value == pytest.approx(classical_bound(m).value, abs=1e-12)


class TestEpsilonNorm:
    @pytest.mark.parametrize("seed", range(6))
    def test_against_brute_force(self, seed):
        m = random_functional(3, 2, seed)
        assert epsilon_norm(m).value == pytest.approx(brute_epsilon(m.m), abs=1e-12)

    @pytest.mark.parametrize("seed", range(10))
    def test_sandwich(self, seed):
        m = random_functional(3, 2, 100 + seed)
        bc = classical_bound(m).value
        eps = epsilon_norm(m).value
        assert bc - 1e-12 <= eps <= 4 * bc + 1e-12

    def test_refusal(self):
        with pytest.raises(BudgetExceeded):
            epsilon_norm(random_functional(5, 2, 0), budget=100)


class TestNu:
    def test_deterministic_points_give_one(self):
        sc = Scenario(2, 2)
        for alice, bob in itertools.product(itertools.product(range(2), repeat=2), repeat=2):
            res = nu_of_behavior(deterministic_behavior(sc, alice, bob))
            assert res.nu == pytest.approx(1.0, abs=1e-12)

    def test_pr_box(self):
        res = nu_of_behavior(pr_box())
        assert res.nu == pytest.approx(2.0, abs=1e-9)
        assert res.nu == pytest.approx(scipy_nu(pr_box().p), abs=1e-9)

    def test_tsirelson(self):
        res = nu_of_behavior(chsh_tsirelson_behavior())
        assert res.nu == pytest.approx(np.sqrt(2), abs=1e-9)
        assert res.reconstruction_residual <= 1e-12

    @pytest.mark.parametrize("seed", range(10))
    def test_against_highs(self, seed):
        p = random_nonsignalling(Scenario(2, 2), RngStream(seed))
        assert nu_of_behavior(p).nu == pytest.approx(scipy_nu(p.p), abs=1e-8)

    def test_decomposition_reconstructs(self):
        p = random_nonsignalling(Scenario(2, 2), RngStream(3))
        res = nu_of_behavior(p)
        q = behavior_from_local(res.decomposition, p.scenario)
        assert np.allclose(q.p, p.p, atol=1e-12)
        assert res.decomposition.l1 == pytest.approx(res.nu)

    def test_nu_bounds_violation(self):
        # <M, P> <= nu(P) B_C(M) for any functional
        p = chsh_tsirelson_behavior()
        nu = nu_of_behavior(p).nu
        for seed in range(10):
            m = random_functional(2, 2, seed)
            assert abs(pair(m, p)) <= nu * classical_bound(m).value + 1e-9

    def test_noisy_padded(self):
        p = mix_detector_noise(chsh_tsirelson_behavior(), 0.9)
        assert validate(p).ok()
        assert nu_of_behavior(p).nu >= 1 - 1e-9


class TestPi:
    def test_pr_box(self):
        assert pi_robustness(pr_box()).pi == pytest.approx(2 / 3, abs=1e-7)

    def test_local_is_one(self):
        res = pi_robustness(deterministic_behavior(Scenario(2, 2), (0, 1), (1, 1)))
        assert res.pi == 1.0

    def test_probes_monotone(self):
        res = pi_robustness(chsh_tsirelson_behavior())
        feas = [lam for lam, ok in res.probes if ok]
        infeas = [lam for lam, ok in res.probes if not ok]
        assert max(feas) < min(infeas)
        assert res.bracket[1] - res.bracket[0] <= 1e-7

    @pytest.mark.parametrize("seed", range(10))
    def test_equivalence(self, seed):
        p = random_nonsignalling(Scenario(2, 2), RngStream(seed, 7))
        assert check_equivalence(p).residual <= 1e-5

    def test_all_pr_boxes(self):
        for box in pr_boxes():
            eq = check_equivalence(Behavior(Scenario(2, 2), box))
            assert eq.nu.nu == pytest.approx(2.0, abs=1e-9)
            assert eq.residual <= 1e-6


class TestRandomBehaviors:
    def test_valid_and_seeded(self):
        a = random_nonsignalling(Scenario(2, 2), RngStream(4))
        b = random_nonsignalling(Scenario(2, 2), RngStream(4))
        assert np.array_equal(a.p, b.p)
        assert validate(a).ok()

    def test_padded_behavior_keeps_nu(self):
        p = random_nonsignalling(Scenario(2, 2), RngStream(8))
        assert nu_of_behavior(pad_behavior(p)).nu == pytest.approx(nu_of_behavior(p).nu, abs=1e-8)

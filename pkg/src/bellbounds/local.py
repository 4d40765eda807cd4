"""The local polytope and its incomplete / signed relaxations.

Classical bound
    B_C(M) = sup |<M, P>| over incomplete local behaviors.  The extreme points
    are product strategies in which each input either picks one output or
    abstains ("no click").  Bob's strategies are enumerated; Alice's best
    response is closed form, separately for the positive and negative sign.
    Functionals whose (x,a) x (y,b) matrix has rank <= 2 are solved exactly
    without enumeration by sweeping the normal fan of Alice's reachable set.

nu and pi
    nu(P) is the least l1 weight of an affine decomposition of P into
    deterministic local points (an LP); pi(P) is the critical weight of P in
    mixtures with local noise that stay local, found by bisection over
    feasibility LPs.  The two are tied by nu = 2/pi - 1.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import config
from .errors import BudgetExceeded, InfeasibleError, ValidationError
from .model import (Behavior, BellFunctional, DeterministicLocalPoint, LocalDecomposition,
                    Scenario, SignedStrategy)
from .solvers.lp import OPTIMAL, LpProblem, lp_solve
from .solvers.rng import RngStream

log = logging.getLogger(__name__)

EXACT = "exact"
LOWER_BOUND = "lower_bound"
NO_CLICK = -1


@dataclass
class SolveReport:
    value: float
    certificate: str
    iterations: int = 0
    residual: float = 0.0
    method: str = ""
    witness: dict = field(default_factory=dict, repr=False)

    def as_dict(self) -> dict:
        return {"value": self.value, "certificate": self.certificate, "iterations": self.iterations,
                "residual": self.residual, "method": self.method}


# ---------------------------------------------------------------------------
# strategy enumeration


def strategy_count(scenario: Scenario, signed: bool = False, incomplete: bool = False) -> int:
    k = scenario.n_out
    per_input = 2 * k if signed else k + int(incomplete)
    return per_input ** scenario.inputs


def enumerate_deterministic(scenario: Scenario, signed: bool = False, incomplete: bool = False,
                            budget: int | None = None):
    """Lexicographic iterator over one party's deterministic strategies.

    Unsigned strategies are tuples of outputs (``NO_CLICK`` for abstention when
    ``incomplete``); signed strategies are :class:`SignedStrategy`.
    """
    budget = config.BUDGET.strategies if budget is None else budget
    count = strategy_count(scenario, signed, incomplete)
    if count > budget:
        raise BudgetExceeded("strategy enumeration refused", count, budget)
    k = scenario.n_out
    if signed:
        choices = [(a, s) for a in range(k) for s in (-1, 1)]
        return (SignedStrategy(c) for c in itertools.product(choices, repeat=scenario.inputs))
    outs = ([NO_CLICK] if incomplete else []) + list(range(k))
    return itertools.product(outs, repeat=scenario.inputs)


def _mixed_radix(start: int, stop: int, radix: int, digits: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.int64)
    out = np.empty((idx.size, digits), dtype=np.int64)
    for d in range(digits - 1, -1, -1):
        out[:, d] = idx % radix
        idx //= radix
    return out


def _chunks(total: int, chunk: int):
    for start in range(0, total, chunk):
        yield start, min(total, start + chunk)


# ---------------------------------------------------------------------------
# classical bound


def _alice_best(c: np.ndarray) -> np.ndarray:
    """max over Alice's incomplete strategies of |sum_x c[x, a_x]|; c has shape (..., N, K)."""
    pos = np.clip(c.max(axis=-1), 0.0, None).sum(axis=-1)
    neg = np.clip((-c).max(axis=-1), 0.0, None).sum(axis=-1)
    return np.maximum(pos, neg)


def _alice_response(c: np.ndarray) -> tuple:
    pos = np.clip(c.max(axis=1), 0, None).sum()
    neg = np.clip((-c).max(axis=1), 0, None).sum()
    s = 1.0 if pos >= neg else -1.0
    best = (s * c).max(axis=1)
    return tuple(int(a) if v > 0 else NO_CLICK for a, v in zip((s * c).argmax(axis=1), best)), s


def _value_of(m: np.ndarray, alice, bob) -> float:
    n = m.shape[0]
    pa = np.zeros(m.shape[0::2])
    pb = np.zeros(m.shape[1::2])
    for x in range(n):
        if alice[x] != NO_CLICK:
            pa[x, alice[x]] = 1.0
        if bob[x] != NO_CLICK:
            pb[x, bob[x]] = 1.0
    return float(np.einsum("xyab,xa,yb->", m, pa, pb))


def _classical_enumerate(m: np.ndarray, budget: int) -> SolveReport:
    n, _, k, _ = m.shape
    total = (k + 1) ** n
    if total > budget:
        raise BudgetExceeded("exact classical bound refused", total, budget)
    # cols[y][b_y] is the (N, K) contribution of Bob answering b_y on input y; slot 0 = no click
    cols = np.zeros((n, k + 1, n, k))
    cols[:, 1:] = m.transpose(1, 3, 0, 2)
    best, best_idx = -1.0, 0
    chunk = max(1, min(total, 2**22 // max(1, n * k)))
    for start, stop in _chunks(total, chunk):
        digits = _mixed_radix(start, stop, k + 1, n)
        c = np.zeros((stop - start, n, k))
        for y in range(n):
            c += cols[y][digits[:, y]]
        vals = _alice_best(c)
        i = int(np.argmax(vals))
        if vals[i] > best:
            best, best_idx = float(vals[i]), start + i
    bob = tuple(int(d) - 1 for d in _mixed_radix(best_idx, best_idx + 1, k + 1, n)[0])
    c = np.einsum("xyab,yb->xa", m, _strategy_matrix(bob, n, k))
    alice, _ = _alice_response(c)
    return SolveReport(best, EXACT, iterations=total, residual=0.0, method="enumeration",
                       witness={"alice": alice, "bob": bob})


def _strategy_matrix(strategy, n, k) -> np.ndarray:
    q = np.zeros((n, k))
    for y, b in enumerate(strategy):
        if b != NO_CLICK:
            q[y, b] = 1.0
    return q


def _fan_vertices(points: np.ndarray) -> list:
    """Vertices of the Minkowski sum over x of conv{0, points[x, a]} in R^2 (or R^1).

    Returned as Alice strategies.  Every vertex is the unique maximizer of a
    linear functional whose direction lies strictly inside one cell of the
    fan cut out by the normals of all pairwise differences.
    """
    n, k, r = points.shape
    ext = np.concatenate([np.zeros((n, 1, r)), points], axis=1)  # slot 0 = no click
    if r == 1:
        dirs = np.array([[1.0], [-1.0]])
    else:
        angles = [0.0]
        for x in range(n):
            for i, j in itertools.combinations(range(k + 1), 2):
                d = ext[x, i] - ext[x, j]
                if np.hypot(d[0], d[1]) > 0:
                    base = math.atan2(d[1], d[0]) + math.pi / 2
                    angles += [base % (2 * math.pi), (base + math.pi) % (2 * math.pi)]
        angles = np.unique(np.round(np.array(angles), 14))
        mids = (angles + np.roll(angles, -1)) / 2.0
        mids[-1] = (angles[-1] + angles[0] + 2 * math.pi) / 2.0
        dirs = np.stack([np.cos(mids), np.sin(mids)], axis=1)
    proj = np.einsum("xar,dr->dxa", ext, dirs)
    picks = proj.argmax(axis=2) - 1
    return [tuple(int(a) for a in row) for row in np.unique(picks, axis=0)]


def _classical_low_rank(m: np.ndarray, rank_tol: float = 1e-12) -> SolveReport | None:
    n, _, k, _ = m.shape
    mat = m.transpose(0, 2, 1, 3).reshape(n * k, n * k)
    u, s, vt = np.linalg.svd(mat)
    if s.size == 0 or s[0] == 0.0:
        return SolveReport(0.0, EXACT, method="low_rank", witness={"alice": (NO_CLICK,) * n, "bob": (NO_CLICK,) * n})
    r = int(np.sum(s > rank_tol * s[0]))
    if r > 2:
        return None
    left = (u[:, :r] * s[:r]).reshape(n, k, r)
    best, best_alice = -1.0, None
    vertices = _fan_vertices(left)
    for alice in vertices:
        # exact best Bob response to this Alice vertex, using the full tensor
        row = np.einsum("xyab,xa->yb", m, _strategy_matrix(alice, n, k))
        val = float(_alice_best(row[None])[0])
        if val > best:
            best, best_alice = val, alice
    row = np.einsum("xyab,xa->yb", m, _strategy_matrix(best_alice, n, k))
    bob, _ = _alice_response(row)
    # neglected singular mass bounds the error: |p^T E q| <= ||E||_2 ||p|| ||q|| <= s_{r+1} * n
    tail = float(s[r]) * n if r < s.size else 0.0
    return SolveReport(best, EXACT, iterations=len(vertices), residual=tail, method="low_rank",
                       witness={"alice": best_alice, "bob": bob})


def _classical_heuristic(m: np.ndarray, restarts: int, stream: RngStream, max_rounds: int = 1000) -> SolveReport:
    n, _, k, _ = m.shape
    gen = stream.generator()
    best, witness, rounds = -1.0, {}, 0
    for _ in range(restarts):
        bob = tuple(int(v) for v in gen.integers(-1, k, size=n))
        val = -1.0
        for _ in range(max_rounds):
            rounds += 1
            c = np.einsum("xyab,yb->xa", m, _strategy_matrix(bob, n, k))
            alice, _ = _alice_response(c)
            r = np.einsum("xyab,xa->yb", m, _strategy_matrix(alice, n, k))
            bob, _ = _alice_response(r)
            new = abs(_value_of(m, alice, bob))
            if new <= val + 1e-15:
                break
            val = new
        if val > best:
            best, witness = val, {"alice": alice, "bob": bob}
    return SolveReport(max(best, 0.0), LOWER_BOUND, iterations=rounds, method="alternating_ascent", witness=witness)


def classical_bound(m: BellFunctional, mode: str = "auto", restarts: int = 20,
                    stream: RngStream | None = None, budget: int | None = None) -> SolveReport:
    """B_C(M) = sup |<M, P>| over incomplete local behaviors.

    ``mode`` is ``"exact"`` (refuse when over budget), ``"heuristic"`` (multistart
    alternating ascent, a certified lower bound) or ``"auto"`` (exact when
    possible, otherwise heuristic).
    """
    if mode not in ("exact", "heuristic", "auto"):
        raise ValueError(f"unknown mode {mode!r}")
    budget = config.BUDGET.strategies if budget is None else budget
    t = m.m
    if mode != "heuristic":
        n, _, k, _ = t.shape
        if (k + 1) ** n <= budget:
            return _classical_enumerate(t, budget)
        rep = _classical_low_rank(t)
        if rep is not None:
            return rep
        if mode == "exact":
            raise BudgetExceeded("exact classical bound refused", (k + 1) ** n, budget)
        log.info("classical bound: %d strategies over budget, using heuristic", (k + 1) ** n)
    return _classical_heuristic(t, restarts, stream or RngStream(0))


def epsilon_norm(m: BellFunctional, budget: int | None = None) -> SolveReport:
    """Injective norm of M in l1^N(l_inf^K) (x) l1^N(l_inf^K): signed strategies.

    Lies between B_C(M) and 4 B_C(M).  Bob's (2K)^N signed strategies are
    enumerated; Alice answers sum_x max_a |c[x, a]|.
    """
    budget = config.BUDGET.strategies if budget is None else budget
    t = m.m
    n, _, k, _ = t.shape
    total = (2 * k) ** n
    if total > budget:
        raise BudgetExceeded("exact epsilon norm refused", total, budget)
    cols = np.zeros((n, 2 * k, n, k))
    bt = t.transpose(1, 3, 0, 2)
    cols[:, 0::2] = -bt
    cols[:, 1::2] = bt
    best = 0.0
    chunk = max(1, min(total, 2**22 // max(1, n * k)))
    for start, stop in _chunks(total, chunk):
        digits = _mixed_radix(start, stop, 2 * k, n)
        c = np.zeros((stop - start, n, k))
        for y in range(n):
            c += cols[y][digits[:, y]]
        best = max(best, float(np.abs(c).max(axis=2).sum(axis=1).max()))
    return SolveReport(best, EXACT, iterations=total, method="signed_enumeration")


# ---------------------------------------------------------------------------
# nu and pi


def deterministic_points(scenario: Scenario, budget: int | None = None):
    budget = config.BUDGET.lp_points if budget is None else budget
    k, n = scenario.n_out, scenario.inputs
    count = k ** (2 * n)
    if count > budget:
        raise BudgetExceeded("local point enumeration refused", count, budget)
    singles = list(itertools.product(range(k), repeat=n))
    return [DeterministicLocalPoint(a, b) for a in singles for b in singles]


def _point_matrix(scenario: Scenario, points) -> np.ndarray:
    """Columns are the flattened indicator tensors of the points."""
    n, k = scenario.inputs, scenario.n_out
    alice = np.array([pt.alice_map for pt in points])
    bob = np.array([pt.bob_map for pt in points])
    pa = np.zeros((len(points), n, k))
    pb = np.zeros((len(points), n, k))
    rows = np.arange(n)
    for i in range(len(points)):
        pa[i, rows, alice[i]] = 1.0
        pb[i, rows, bob[i]] = 1.0
    return np.einsum("ixa,iyb->xyabi", pa, pb).reshape(-1, len(points))


@dataclass
class NuResult:
    nu: float
    decomposition: LocalDecomposition
    lp_gap: float
    reconstruction_residual: float
    iterations: int

    def as_dict(self) -> dict:
        return {"nu": self.nu, "lp_gap": self.lp_gap, "reconstruction_residual": self.reconstruction_residual,
                "iterations": self.iterations,
                "decomposition": [{"weight": float(w), "alice": list(pt.alice_map), "bob": list(pt.bob_map)}
                                  for w, pt in zip(self.decomposition.weights, self.decomposition.points)]}


def nu_of_behavior(p: Behavior, budget: int | None = None) -> NuResult:
    """min sum|alpha_i| s.t. P = sum alpha_i P_i, sum alpha_i = 1, P_i deterministic local."""
    points = deterministic_points(p.scenario, budget)
    d = _point_matrix(p.scenario, points)
    npts = len(points)
    a_eq = np.vstack([np.hstack([d, -d]), np.concatenate([np.ones(npts), -np.ones(npts)])])
    b_eq = np.concatenate([p.p.ravel(), [1.0]])
    res = lp_solve(LpProblem(np.ones(2 * npts), a_eq, b_eq))
    if res.status != OPTIMAL:
        raise InfeasibleError("behavior lies outside the affine hull of the local polytope")
    alpha = res.x[:npts] - res.x[npts:]
    keep = np.flatnonzero(np.abs(alpha) > 1e-13)
    dec = LocalDecomposition(alpha[keep], [points[i] for i in keep])
    recon = (d[:, keep] @ alpha[keep]).reshape(p.scenario.shape)
    resid = float(np.max(np.abs(recon - p.p)))
    return NuResult(res.value, dec, res.gap, resid, res.iterations)


class _PiFeasibility:
    """Feasibility of  lam P + (1 - lam) P' = P''  with P', P'' in the local polytope."""

    def __init__(self, p: Behavior, budget=None):
        self.points = deterministic_points(p.scenario, budget)
        self.d = _point_matrix(p.scenario, self.points)
        self.target = p.p.ravel()
        self.calls = 0

    def __call__(self, lam: float) -> bool:
        self.calls += 1
        npts = len(self.points)
        one, zero = np.ones(npts), np.zeros(npts)
        a_eq = np.vstack([np.hstack([-(1.0 - lam) * self.d, self.d]),
                          np.concatenate([one, zero]),
                          np.concatenate([zero, one])])
        b_eq = np.concatenate([lam * self.target, [1.0, 1.0]])
        return lp_solve(LpProblem(np.zeros(2 * npts), a_eq, b_eq)).status == OPTIMAL


@dataclass
class PiResult:
    pi: float
    lp_calls: int
    bracket: tuple
    probes: list

    def as_dict(self) -> dict:
        return {"pi": self.pi, "lp_calls": self.lp_calls, "bracket": list(self.bracket)}


def pi_robustness(p: Behavior, tol: float = 1e-7, budget: int | None = None) -> PiResult:
    """Largest lam in [0, 1] such that some local noise makes lam P + (1-lam) P' local.

    Local P gives 1 by convention.  Feasibility in lam is down-closed (the
    local set is convex and contains P'), which is checked on every probe.
    """
    feasible = _PiFeasibility(p, budget)
    probes = []
    if feasible(1.0):
        return PiResult(1.0, feasible.calls, (1.0, 1.0), [(1.0, True)])
    probes.append((1.0, False))
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        ok = feasible(mid)
        probes.append((mid, ok))
        if ok:
            lo = mid
        else:
            hi = mid
    feas = [lam for lam, ok in probes if ok]
    infeas = [lam for lam, ok in probes if not ok]
    if feas and infeas and max(feas) > min(infeas):
        raise AssertionError("pi feasibility is not monotone in lambda")
    return PiResult(0.5 * (lo + hi), feasible.calls, (lo, hi), probes)


@dataclass
class EquivalenceResult:
    residual: float
    nu: NuResult
    pi: PiResult

    def as_dict(self) -> dict:
        return {"residual": self.residual, "nu": self.nu.nu, "pi": self.pi.pi,
                "two_over_pi_minus_one": 2.0 / self.pi.pi - 1.0}


def check_equivalence(p: Behavior, budget: int | None = None) -> EquivalenceResult:
    """|nu(P) - (2/pi(P) - 1)| with both certificates."""
    nu = nu_of_behavior(p, budget)
    pi = pi_robustness(p, budget=budget)
    if pi.pi <= 0:
        raise ValidationError("pi(P) = 0: behavior is not in the affine hull of the local set")
    return EquivalenceResult(abs(nu.nu - (2.0 / pi.pi - 1.0)), nu, pi)


# ---------------------------------------------------------------------------
# random test behaviors


def pr_boxes() -> np.ndarray:
    """The 8 PR boxes a + b = xy + alpha x + beta y + gamma (mod 2), shape (8, 2, 2, 2, 2)."""
    out = np.zeros((8, 2, 2, 2, 2))
    for i, (al, be, ga) in enumerate(itertools.product(range(2), repeat=3)):
        for x, y, a in itertools.product(range(2), repeat=3):
            b = (x * y + al * x + be * y + ga + a) % 2
            out[i, x, y, a, b] = 0.5
    return out


def random_nonsignalling(scenario: Scenario, stream: RngStream, extremal=None, concentration: float = 0.3) -> Behavior:
    """Random non-signalling behavior lam * E + (1 - lam) * (Dirichlet mix of NS vertices).

    The vertices are the deterministic local points plus ``extremal`` (an
    array of NS tensors); E is one extremal tensor drawn uniformly and lam is
    uniform on [0, 1], which keeps a good share of the samples nonlocal.  In
    the two-input / two-output case ``extremal`` defaults to all 8 PR boxes.
    """
    gen = stream.generator()
    points = deterministic_points(scenario)
    verts = [pt.tensor(scenario) for pt in points]
    if extremal is None:
        if scenario.shape != (2, 2, 2, 2):
            raise ValidationError("default extremal behaviors are only defined for the CHSH scenario")
        extremal = pr_boxes()
    extremal = np.asarray(extremal, float).reshape((-1,) + scenario.shape)
    verts.extend(extremal)
    w = gen.dirichlet(np.full(len(verts), concentration))
    mix = np.einsum("i,ixyab->xyab", w, np.array(verts))
    lam = gen.random()
    pick = extremal[gen.integers(len(extremal))]
    return Behavior(scenario, lam * pick + (1 - lam) * mix)

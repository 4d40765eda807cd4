"""Dense two-phase primal simplex with Bland's rule.

Problems are given in standard form ``min c.x  s.t.  A x = b, x >= 0``; free
variables are handled by the caller through splitting.  Every optimal solve
returns a dual vector ``y`` and the duality gap ``c.x - b.y`` together with
the worst dual infeasibility ``max(A.T y - c)``, so optimality is checkable
without trusting the pivoting.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import config
from ..errors import NumericalStall

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LpProblem:
    c: np.ndarray
    a_eq: np.ndarray
    b_eq: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        a = np.atleast_2d(np.asarray(self.a_eq, dtype=float))
        b = np.asarray(self.b_eq, dtype=float).ravel()
        if a.shape != (b.size, c.size):
            raise ValueError(f"inconsistent LP shapes: A {a.shape}, b {b.size}, c {c.size}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
            raise ValueError("LP data must be finite")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "a_eq", a)
        object.__setattr__(self, "b_eq", b)


@dataclass
class LpResult:
    status: str
    value: float = float("nan")
    x: np.ndarray | None = None
    y: np.ndarray | None = None
    gap: float = float("nan")
    dual_infeasibility: float = float("nan")
    primal_residual: float = float("nan")
    iterations: int = 0
    basis: list = field(default_factory=list)


def _pivot(tab, row, col):
    tab[row] /= tab[row, col]
    piv = tab[row].copy()
    colvals = tab[:, col].copy()
    colvals[row] = 0.0
    tab -= np.outer(colvals, piv)


def _run(tab, basis, allowed, eps, max_iter):
    """Minimize the objective stored in the last row (reduced costs) with Bland's rule."""
    m = tab.shape[0] - 1
    it = 0
    while True:
        cost = tab[-1, :-1]
        enter = -1
        for j in np.flatnonzero(allowed):
            if cost[j] < -eps:
                enter = j
                break
        if enter < 0:
            return "done", it
        col = tab[:m, enter]
        pos = col > eps
        if not pos.any():
            return UNBOUNDED, it
        ratios = np.full(m, np.inf)
        ratios[pos] = tab[:m, -1][pos] / col[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + eps * max(1.0, abs(best)))
        leave = min(ties, key=lambda r: basis[r])
        _pivot(tab, leave, enter)
        basis[leave] = enter
        it += 1
        if it > max_iter:
            raise NumericalStall(f"simplex exceeded {max_iter} pivots")


def lp_solve(prob: LpProblem, eps: float = 1e-10, max_iter: int | None = None) -> LpResult:
    a, b, c = prob.a_eq.copy(), prob.b_eq.copy(), prob.c
    m, n = a.shape
    neg = b < 0
    a[neg] *= -1.0
    b[neg] *= -1.0
    max_iter = max_iter or 50 * (m + n) + 1000

    # phase 1: artificials n..n+m-1, minimize their sum
    tab = np.zeros((m + 1, n + m + 1))
    tab[:m, :n] = a
    tab[:m, n:n + m] = np.eye(m)
    tab[:m, -1] = b
    tab[-1, :n] = -a.sum(axis=0)
    tab[-1, -1] = -b.sum()
    basis = list(range(n, n + m))
    allowed = np.ones(n + m, dtype=bool)
    _, it1 = _run(tab, basis, allowed, eps, max_iter)

    scale = max(1.0, float(np.abs(b).max(initial=0.0)))
    if -tab[-1, -1] > config.TOL.lp * scale:
        return LpResult(INFEASIBLE, iterations=it1)

    # drive zero-level artificials out of the basis; rows that cannot pivot are redundant
    keep = []
    for r in range(m):
        if basis[r] >= n:
            cand = np.flatnonzero(np.abs(tab[r, :n]) > 1e-9)
            if cand.size:
                _pivot(tab, r, cand[0])
                basis[r] = int(cand[0])
                keep.append(r)
        else:
            keep.append(r)
    rows = keep
    tab = np.vstack([tab[rows], tab[-1:]])
    basis = [basis[r] for r in rows]
    a_kept = a[rows]
    b_kept = b[rows]
    sign_kept = np.where(neg[rows], -1.0, 1.0)

    # phase 2
    tab = np.delete(tab, np.s_[n:n + m], axis=1)
    tab[-1, :] = 0.0
    tab[-1, :n] = c
    for r, j in enumerate(basis):
        tab[-1] -= c[j] * tab[r]
    allowed = np.ones(n, dtype=bool)
    status, it2 = _run(tab, basis, allowed, eps, max_iter)
    if status == UNBOUNDED:
        return LpResult(UNBOUNDED, iterations=it1 + it2)

    x = np.zeros(n)
    for r, j in enumerate(basis):
        x[j] = tab[r, -1]
    x = np.clip(x, 0.0, None)
    bmat = a_kept[:, basis]
    y_kept = np.linalg.solve(bmat.T, c[basis]) if basis else np.zeros(0)
    y = np.zeros(m)
    y[rows] = y_kept * sign_kept
    value = float(c @ x)
    gap = abs(value - float(prob.b_eq @ y))
    dual_inf = float(np.max(prob.a_eq.T @ y - c, initial=0.0))
    resid = float(np.max(np.abs(prob.a_eq @ x - prob.b_eq), initial=0.0))
    return LpResult(OPTIMAL, value, x, y, gap, max(dual_inf, 0.0), resid,
                    iterations=it1 + it2, basis=list(basis))


def minimize(c, a_eq, b_eq) -> LpResult:
    return lp_solve(LpProblem(c, a_eq, b_eq))

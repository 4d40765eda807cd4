"""Scalar-level norms of the weighted sum space K(t; l_inf, l_2, l_1) and its
dual intersection space J(1/t; l_1, l_2, l_inf).

    ||x||_K = inf_{x = x1 + x2 + x3} ||x1||_inf + sqrt(t) ||x2||_2 + t ||x3||_1
    ||a||_J = max(||a||_1, s^(1/2) ||a||_2, s ||a||_inf),   s = 1/t

The dual of an infimal convolution of norms is the maximum of the dual norms,
so ``||x||_K = sup{<x, a> : ||a||_1 <= 1, ||a||_2 <= sqrt(t), ||a||_inf <= t}``.
That concave program is solved through its two Lagrange multipliers: ``beta``
for the l_2 constraint (outer bisection) and ``alpha`` for the l_1 constraint
(inner bisection, a capped-simplex projection).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class KNormResult:
    value: float          # dual (certified lower) value <x, a>
    upper: float          # Lagrangian (certified upper) value
    witness: np.ndarray   # maximizing a, same signs as x

    @property
    def gap(self) -> float:
        return self.upper - self.value


def j_norm(a, s: float) -> float:
    if s <= 0:
        raise ValueError("j_norm needs s > 0")
    a = np.asarray(a, dtype=float).ravel()
    if a.size == 0:
        return 0.0
    return float(max(np.abs(a).sum(), np.sqrt(s) * np.linalg.norm(a), s * np.abs(a).max()))


def _capped(y, alpha, cap):
    return np.clip(y - alpha, 0.0, cap)


def _project_capped_simplex(y, cap, iters=200):
    """Euclidean projection of y >= 0 onto {0 <= a <= cap, sum(a) <= 1}; returns (a, alpha)."""
    a = np.clip(y, 0.0, cap)
    if a.sum() <= 1.0:
        return a, 0.0
    lo, hi = 0.0, float(y.max())
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if _capped(y, mid, cap).sum() > 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * max(1.0, hi):
            break
    return _capped(y, hi, cap), hi


def _greedy(ax, cap):
    """max <ax, a> over {0 <= a <= cap, sum a <= 1} (fractional knapsack)."""
    a = np.zeros_like(ax)
    budget = 1.0
    for i in np.argsort(-ax, kind="stable"):
        if ax[i] <= 0 or budget <= 0:
            break
        a[i] = min(cap, budget)
        budget -= a[i]
    return a


def _lagrangian(ax, t, alpha, beta):
    # alpha + beta t + sum_i max_{0<=a<=t} (ax_i - alpha) a - beta a^2
    c = ax - alpha
    if beta > 0:
        a = np.clip(c / (2.0 * beta), 0.0, t)
    else:
        a = np.where(c > 0, t, 0.0)
    return float(alpha + beta * t + np.sum(c * a - beta * a * a))


def k_norm_certified(x, t: float) -> KNormResult:
    if t <= 0:
        raise ValueError("k_norm needs t > 0")
    x = np.asarray(x, dtype=float).ravel()
    ax = np.abs(x)
    sign = np.where(x < 0, -1.0, 1.0)
    if ax.size == 0 or ax.max() == 0.0:
        return KNormResult(0.0, 0.0, np.zeros_like(x))

    r2 = t  # squared l_2 radius
    a = _greedy(ax, t)
    if a @ a <= r2:
        # l_2 constraint inactive: the knapsack optimum is exact; multiplier from its breakpoint
        value = float(ax @ a)
        filled = a > 0
        partial = filled & (a < t)
        if a.sum() < 1.0 - 1e-15:
            alpha = 0.0
        elif partial.any():
            alpha = float(ax[partial].max())
        else:
            rest = ax[~filled]
            alpha = float(rest.max()) if rest.size else 0.0
            alpha = max(alpha, 0.0)
        upper = _lagrangian(ax, t, alpha, 0.0)
        return KNormResult(value, max(upper, value), sign * a)

    # l_2 active: a(beta) = Proj(ax / (2 beta)); ||a(beta)||_2 decreases in beta
    def a_of(beta):
        return _project_capped_simplex(ax / (2.0 * beta), t)

    lo = hi = 1.0
    while a_of(hi)[0] @ a_of(hi)[0] > r2:
        hi *= 2.0
    while a_of(lo)[0] @ a_of(lo)[0] <= r2:
        lo *= 0.5
    for _ in range(200):
        mid = np.sqrt(lo * hi)
        am, _ = a_of(mid)
        if am @ am > r2:
            lo = mid
        else:
            hi = mid
        if hi / lo - 1.0 < 1e-15:
            break
    a, shift = a_of(hi)
    value = float(ax @ a)
    # the projection's shift is in units of ax / (2 beta)
    upper = _lagrangian(ax, t, 2.0 * hi * shift, hi)
    return KNormResult(value, max(upper, value), sign * a)


def k_norm(x, t: float) -> float:
    """||x|| in K(t; l_inf, l_2, l_1); see module docstring."""
    return k_norm_certified(x, t).value

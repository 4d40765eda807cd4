"""Explicit Gaussian Bell functionals and Monte Carlo checks of the lemmas behind them.

Pipeline for parameters (n, q):

1. m = ceil(n^(q/2)), t = n / m; sample an n x m standard Gaussian matrix g.
2. SVD of g / sqrt(m); keep the k singular directions in R^n whose singular
   value is at least ``sigma_threshold`` (default 1/2).
3. For each kept direction v_l form the function f_l(j) = sum_i v_l[i] g[i, j]
   on {0..m-1}, embed it as u_l(omega, c) = f_l(omega_c) for omega in
   {0..m-1}^n and c in {0..n-1}, and set

       M[omega, omega', c, c'] = sum_l u_l(omega, c) u_l(omega', c').

   The normalizations m^(-1/q), t^(-1/q) and n^(-n) of the embedding only
   rescale M, so they are recorded but not applied.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import config
from .errors import BudgetExceeded, ValidationError
from .local import EXACT, classical_bound
from .model import BellFunctional, Scenario, pad_functional
from .quantum import SeesawConfig, embed_local_strategy, seesaw
from .solvers.knorm import k_norm_certified
from .solvers.rng import RngStream, gaussian_matrix

log = logging.getLogger(__name__)


def default_m(n: int, q: float) -> int:
    # ceil with a guard against n^(q/2) landing a rounding error above an integer
    return max(1, math.ceil(n ** (q / 2.0) * (1.0 - 1e-12)))


@dataclass(frozen=True)
class ConstructionParams:
    n: int
    q: float
    m: int | None = None
    sigma_threshold: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("n must be >= 1")
        if not self.q > 2:
            raise ValidationError("q must exceed 2")
        m = default_m(self.n, self.q) if self.m is None else int(self.m)
        lo = self.n ** (self.q / 2.0)
        if not (lo * (1 - 1e-12) <= m <= 2 * lo * (1 + 1e-12)):
            raise ValidationError(f"m={m} outside [n^(q/2), 2 n^(q/2)] = [{lo:.6g}, {2 * lo:.6g}]")
        if self.n > m:
            raise ValidationError("n must not exceed m")
        if self.sigma_threshold <= 0:
            raise ValidationError("sigma_threshold must be positive")
        object.__setattr__(self, "m", m)

    @property
    def t(self) -> float:
        return self.n / self.m

    @property
    def inputs(self) -> int:
        return self.m ** self.n

    @classmethod
    def log_preset(cls, n: int, **kw) -> "ConstructionParams":
        """q = log2(n) (needs n > 4 so that q > 2)."""
        return cls(n, math.log2(n), **kw)

    def as_dict(self) -> dict:
        return {"n": self.n, "q": self.q, "m": self.m, "t": self.t, "sigma_threshold": self.sigma_threshold,
                "seed": self.seed}


@dataclass
class SubspaceData:
    singular_values: np.ndarray   # of g / sqrt(m), descending
    vectors: np.ndarray           # (k, n), orthonormal rows
    k: int
    inverse_weights: np.ndarray   # 1 / s_j^2 for the kept directions

    @property
    def observed_delta(self) -> float:
        return self.k / self.vectors.shape[1] if self.vectors.size else 0.0


def sample_gaussian(params: ConstructionParams) -> np.ndarray:
    return gaussian_matrix(params.n, params.m, RngStream(params.seed, 0))


def singular_subspace(g, params: ConstructionParams) -> SubspaceData:
    """Singular directions of g / sqrt(m) in R^n with singular value >= sigma_threshold."""
    g = np.asarray(g, float)
    if g.shape != (params.n, params.m):
        raise ValidationError(f"G has shape {g.shape}, expected ({params.n}, {params.m})")
    u, s, _ = np.linalg.svd(g / np.sqrt(params.m), full_matrices=False)
    keep = s >= params.sigma_threshold
    k = int(keep.sum())
    if k == 0:
        raise ValidationError(f"no singular value reaches {params.sigma_threshold}; largest is {s[0]:.4g}")
    vecs = u[:, keep].T.copy()
    # deterministic orientation
    for row in vecs:
        i = int(np.argmax(np.abs(row)))
        if row[i] < 0:
            row *= -1.0
    return SubspaceData(s, vecs, k, 1.0 / s[keep] ** 2)


def input_tuples(n: int, m: int) -> np.ndarray:
    """All omega in {0..m-1}^n, lexicographic; shape (m^n, n)."""
    return np.array(list(itertools.product(range(m), repeat=n)), dtype=np.int64).reshape(-1, n)


def embedding_factors(g, sub: SubspaceData, params: ConstructionParams) -> np.ndarray:
    """u[omega, c, l] = f_l(omega_c) with f_l = v_l^T g; shape (m^n, n, k)."""
    f = sub.vectors @ np.asarray(g, float)          # (k, m)
    omegas = input_tuples(params.n, params.m)       # (N, n)
    return f.T[omegas]                              # (N, n, k)


@dataclass
class Construction:
    params: ConstructionParams
    gaussian: np.ndarray
    subspace: SubspaceData
    factors: np.ndarray
    functional: BellFunctional
    prefactors: dict = field(default_factory=dict)


def construct(params: ConstructionParams) -> Construction:
    n_in = params.inputs
    entries = n_in * n_in * params.n * params.n
    if n_in > config.BUDGET.construction_inputs:
        raise BudgetExceeded("construction refused: too many inputs", n_in, config.BUDGET.construction_inputs)
    if entries > config.BUDGET.construction_entries:
        raise BudgetExceeded("construction refused: tensor too large", entries, config.BUDGET.construction_entries)
    g = sample_gaussian(params)
    sub = singular_subspace(g, params)
    u = embedding_factors(g, sub, params)
    flat = u.reshape(n_in * params.n, sub.k)
    mat = flat @ flat.T
    mat = 0.5 * (mat + mat.T)   # bit-exact swap symmetry
    tensor = mat.reshape(n_in, params.n, n_in, params.n).transpose(0, 2, 1, 3)
    func = BellFunctional(Scenario(n_in, params.n), tensor)
    pref = {"m_pow_minus_1_over_q": params.m ** (-1.0 / params.q),
            "t_pow_minus_1_over_q": params.t ** (-1.0 / params.q),
            "n_pow_minus_n": float(params.n) ** (-params.n),
            "scale_applied": 1.0}
    return Construction(params, g, sub, u, func, pref)


def build_bell_functional(params: ConstructionParams) -> BellFunctional:
    return construct(params).functional


def d_hat(lv: float, params: ConstructionParams) -> float:
    """LV / n^(1/2 - 2/q): the empirical stand-in for the unknown constant D(q)."""
    return lv / params.n ** (0.5 - 2.0 / params.q)


def pipeline(params: ConstructionParams, cfg: SeesawConfig | None = None, classical_mode: str = "auto",
             padded: bool = False) -> dict:
    """Construct M, bound it classically and quantumly at local dimension n, report LV and D-hat."""
    con = construct(params)
    m = pad_functional(con.functional) if padded else con.functional
    if cfg is None:
        cfg = SeesawConfig(params.n, params.n, stream=RngStream(params.seed, 1))
    bc = classical_bound(m, classical_mode, stream=RngStream(params.seed, 2))
    if bc.value <= 0:
        raise ValidationError("constructed functional has zero classical bound")
    starts = [embed_local_strategy(bc.witness["alice"], bc.witness["bob"], m.scenario.n_out, cfg.d_a, cfg.d_b)]
    bq, _ = seesaw(m, cfg, starts)
    lv = bq.value / bc.value
    sym = bool(np.array_equal(m.m, m.swapped().m))
    return {
        "params": params.as_dict(),
        "seesaw": cfg.as_dict(),
        "padded": padded,
        "k": con.subspace.k,
        "observed_delta": con.subspace.observed_delta,
        "singular_values": con.subspace.singular_values.tolist(),
        "inverse_weights": con.subspace.inverse_weights.tolist(),
        "prefactors": con.prefactors,
        "scenario": {"inputs": m.scenario.inputs, "outputs": m.scenario.outputs, "bottom": m.scenario.has_bottom},
        "B_C": bc.value,
        "B_Q": bq.value,
        "LV": lv,
        "D_hat": d_hat(lv, params),
        "certificates": {"classical": bc.as_dict(), "quantum": bq.as_dict(),
                         "status": "confirmed" if bc.certificate == EXACT else "unconfirmed"},
        "symmetric": sym,
        "verifier_stats": [],
    }


def quartiles(values) -> dict:
    v = np.asarray(values, float)
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    return {"count": int(v.size), "min": float(v.min()), "q1": float(q1), "median": float(med),
            "q3": float(q3), "max": float(v.max())}


# ---------------------------------------------------------------------------
# Monte Carlo verifiers


def gaussian_lemma_statistic(n: int, m: int, seeds, delta: float = 0.05, threshold: float = 0.5) -> dict:
    """Fraction of seeds whose ceil(delta n)-th singular value of g / sqrt(m) is >= threshold."""
    idx = max(1, math.ceil(delta * n)) - 1
    hits, values = 0, []
    for seed in seeds:
        s = np.linalg.svd(gaussian_matrix(n, m, RngStream(seed, 0)) / np.sqrt(m), compute_uv=False)
        values.append(float(s[idx]))
        hits += s[idx] >= threshold
    seeds = list(seeds)
    return {"n": n, "m": m, "delta": delta, "index": idx + 1, "threshold": threshold, "trials": len(seeds),
            "fraction": hits / len(seeds), "statistic": quartiles(values)}


SPACES = ("l1", "l2", "linf")


def _sign_vectors(k: int) -> np.ndarray:
    return np.array(list(itertools.product((-1.0, 1.0), repeat=k)))


def _norm(v, space, axis=-1):
    if space == "l1":
        return np.abs(v).sum(axis=axis)
    if space == "l2":
        return np.sqrt((v * v).sum(axis=axis))
    return np.abs(v).max(axis=axis)


def injective_norm(g, spaces: tuple, budget: int | None = None) -> float:
    """|| sum g[s, t] e_s (x) e_t || in E (x)_eps F with E = spaces[0]^n, F = spaces[1]^m.

    Equals sup of u^T g w over the dual unit balls; reduced to closed forms or a
    sign enumeration over an l_inf dual ball.
    """
    e, f = spaces
    if e not in SPACES or f not in SPACES:
        raise ValueError(f"spaces must be among {SPACES}")
    g = np.asarray(g, float)
    budget = config.BUDGET.sign_vectors if budget is None else budget
    if e == "linf":
        return float(_norm(g, f, axis=1).max())            # E* = l1: best row
    if f == "linf":
        return float(_norm(g.T, e, axis=1).max())          # F* = l1: best column
    if e == "l2" and f == "l2":
        return float(np.linalg.norm(g, 2))
    # one side is l1 (dual ball = cube): enumerate its signs, close the other side
    if e == "l1":
        rows, other, mat = g.shape[0], f, g
    else:
        rows, other, mat = g.shape[1], e, g.T
    if 2 ** rows > budget:
        raise BudgetExceeded("sign enumeration refused", 2 ** rows, budget)
    # u and -u give the same norm, so fix the first sign
    signs = _sign_vectors(rows - 1)
    signs = np.hstack([np.ones((signs.shape[0], 1)), signs]) if rows > 1 else np.ones((1, 1))
    return float(_norm(signs @ mat, other, axis=1).max())


def weak_l2(space: str, dim: int) -> float:
    """w_2 of the unit vector basis of space^dim: the norm of id: space*^dim -> l2^dim."""
    return math.sqrt(dim) if space == "l1" else 1.0


def chevet_monte_carlo(spaces: tuple, n: int, m: int, trials: int, stream: RngStream,
                       slack: float = 0.05) -> dict:
    """Empirical E||G||_eps against the real-case bound (b = 1)

        w2(E-basis) E||sum_t g_t e_t||_F + w2(F-basis) E||sum_s g_s e_s||_E,

    both expectations estimated from the rows / columns of the same samples.
    """
    e, f = spaces
    norms, row_norms, col_norms = [], [], []
    for i in range(trials):
        g = gaussian_matrix(n, m, stream.child(i))
        norms.append(injective_norm(g, spaces))
        row_norms.extend(_norm(g, f, axis=1))     # each row is a Gaussian vector in F
        col_norms.extend(_norm(g.T, e, axis=1))   # each column is a Gaussian vector in E
    mean = float(np.mean(norms))
    bound = weak_l2(e, n) * float(np.mean(row_norms)) + weak_l2(f, m) * float(np.mean(col_norms))
    return {"pair": [e, f], "n": n, "m": m, "trials": trials, "b": 1.0, "statistic": mean,
            "bound": bound, "threshold": bound * (1 + slack), "pass": bool(mean <= bound * (1 + slack))}


def x_norm(y, t: float, q: float) -> float:
    """Norm of X_t^q = t^(-1/q) K(t; l_inf, l_2, l_1)."""
    return t ** (-1.0 / q) * k_norm_certified(y, t).value


def _ascent(op, u, t, q, max_iter=200):
    """Monotone norm ascent u <- op^T a / |op^T a| with a the dual witness of op u."""
    val = x_norm(op @ u, t, q)
    for _ in range(max_iter):
        a = k_norm_certified(op @ u, t).witness
        w = op.T @ a
        nw = np.linalg.norm(w)
        if nw == 0:
            break
        u_new = w / nw
        new = x_norm(op @ u_new, t, q)
        if new <= val * (1 + 1e-12):
            break
        u, val = u_new, new
    return val, u


def lemma_epsilon_monitor(params: ConstructionParams, trials: int, probes: int = 64) -> dict:
    """Lower estimates of || m^(-1/q) g : l2^n -> X_t^q || per trial, divided by sqrt(q)."""
    n, m, q, t = params.n, params.m, params.q, params.t
    probe_vals, ascent_vals = [], []
    for i in range(trials):
        stream = RngStream(params.seed, 1000 + i)
        op = m ** (-1.0 / q) * gaussian_matrix(n, m, stream).T     # R^n -> R^m
        dirs = stream.child(0).normal((probes, n))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        vals = [x_norm(op @ u, t, q) for u in dirs]
        j = int(np.argmax(vals))
        best, _ = _ascent(op, dirs[j], t, q)
        probe_vals.append(float(vals[j]))
        ascent_vals.append(float(best))
    ratios = np.array(ascent_vals) / math.sqrt(q)
    return {"params": params.as_dict(), "trials": trials, "probes": probes, "kind": "proxy",
            "probe": quartiles(probe_vals), "ascent": quartiles(ascent_vals),
            "ratio_to_sqrt_q": quartiles(ratios), "ratio_p95": float(np.percentile(ratios, 95)),
            "lower_bound_valid": bool(all(p <= a * (1 + 1e-12) for p, a in zip(probe_vals, ascent_vals)))}


def lemma_epsilon_trend(ns, q: float, trials: int, seed: int = 0, growth_slack: float = 1.25) -> dict:
    """n-independence check: the 95th percentile ratio at the largest n stays within
    ``growth_slack`` of the largest value seen at smaller n."""
    rows = [lemma_epsilon_monitor(ConstructionParams(n, q, seed=seed), trials) for n in ns]
    p95 = [r["ratio_p95"] for r in rows]
    ok = len(p95) < 2 or p95[-1] <= growth_slack * max(p95[:-1])
    return {"q": q, "ns": list(ns), "ratio_p95": p95, "threshold": growth_slack, "pass": bool(ok), "rows": rows}


def lemma_min_terms(g, t: float, q: float) -> dict:
    """Scalar-level proxies of the three terms for an n x m matrix g."""
    n, m = g.shape
    op = injective_norm(g.T, ("l1", "l2"))            # sup over signs s of ||g s||_2
    fro = float(np.linalg.norm(g))
    col = float(np.sqrt((g * g).sum(axis=0)).max(initial=0.0))
    weighted = t ** (1.0 / q) * np.array([op, t ** -0.5 * fro, t ** -1.0 * col])
    scale = m ** (1 - 1.0 / q) * n ** (1.0 / q)
    c_mn = 1 + math.sqrt(math.log(m)) / n
    return {"op_linf_l2": op, "frobenius": fro, "max_column": col,
            "combined_max": float(weighted.max()), "combined_sum": float(weighted.sum()),
            "ratio": float(weighted.max() / scale), "ratio_with_C": float(weighted.max() / (scale * c_mn))}


def lemma_min_monitor(params: ConstructionParams, trials: int) -> dict:
    n, m, q, t = params.n, params.m, params.q, params.t
    if m > 20:
        raise BudgetExceeded("lemma_min_monitor needs m <= 20 for sign enumeration", m, 20)
    rows = [lemma_min_terms(gaussian_matrix(n, m, RngStream(params.seed, 2000 + i)), t, q) for i in range(trials)]
    return {"params": params.as_dict(), "trials": trials, "kind": "proxy",
            "frobenius_over_sqrt_nm": quartiles([r["frobenius"] / math.sqrt(n * m) for r in rows]),
            "max_column_over_sqrt_n_plus_log": quartiles(
                [r["max_column"] / (math.sqrt(n) + math.sqrt(2 * math.log(max(m, 2)))) for r in rows]),
            "ratio": quartiles([r["ratio"] for r in rows]),
            "ratio_with_C": quartiles([r["ratio_with_C"] for r in rows])}


def positive_sum_identity(ts) -> dict:
    """|| sum T_i || against || sum b_i b_i^* ||^(1/2) || sum c_i^* c_i ||^(1/2), b_i = c_i = T_i^(1/2)."""
    ts = [np.asarray(t, float) for t in ts]
    roots = []
    for t in ts:
        if np.max(np.abs(t - t.T)) > 1e-12 * max(1.0, np.abs(t).max()):
            raise ValidationError("operators must be symmetric")
        w, v = np.linalg.eigh(t)
        if w[0] < -1e-12 * max(1.0, abs(w[-1])):
            raise ValidationError("operators must be positive semidefinite")
        roots.append((v * np.sqrt(np.clip(w, 0, None))) @ v.T)
    lhs = float(np.linalg.norm(sum(ts), 2))
    bb = sum(b @ b.T for b in roots)
    cc = sum(c.T @ c for c in roots)
    rhs = float(np.sqrt(np.linalg.norm(bb, 2)) * np.sqrt(np.linalg.norm(cc, 2)))
    return {"lhs": lhs, "rhs": rhs, "residual": abs(lhs - rhs)}

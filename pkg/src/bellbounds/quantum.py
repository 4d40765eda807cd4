"""Quantum values of Bell functionals.

The see-saw alternates three exactly solvable steps on tr(B rho):

* state:     top eigenvector of the Bell operator;
* Alice:     for each input x, max_E sum_a tr(E_a R_a) over incomplete POVMs;
* Bob:       the same with the roles exchanged.

The measurement step is a small SDP.  It is solved through its dual
``min tr(Y) s.t. Y >= R_a, Y >= 0`` with a log-barrier path-following Newton
method; at a central point ``E_a = (Y - R_a)^{-1} / t`` is an exactly feasible
(incomplete) POVM and ``tr(Y) - value`` certifies the optimality gap.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .local import LOWER_BOUND, EXACT, SolveReport, classical_bound, nu_of_behavior
from .model import Behavior, BellFunctional, QuantumModel, Scenario, behavior_from_quantum
from .parallel import pmap
from .solvers.rng import RngStream

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Bell operator and state step


def bell_operator(m: BellFunctional, povm_a, povm_b) -> np.ndarray:
    """B = sum M[x,y,a,b] E_x^a (x) F_y^b as a (dA dB) x (dA dB) matrix."""
    ea, fb = np.asarray(povm_a, float), np.asarray(povm_b, float)
    if ea.shape[:2] != m.m.shape[0::2] or fb.shape[:2] != m.m.shape[1::2]:
        raise ValidationError("POVM input/output counts do not match the functional")
    da, db = ea.shape[-1], fb.shape[-1]
    t = np.einsum("xyab,ybkl->xakl", m.m, fb, optimize=True)
    b4 = np.einsum("xaij,xakl->ikjl", ea, t, optimize=True)
    b = b4.reshape(da * db, da * db)
    return 0.5 * (b + b.T)


def optimize_state(b) -> tuple:
    """Top eigenvector of B and its eigenvalue."""
    b = np.asarray(b, float)
    w, v = np.linalg.eigh(0.5 * (b + b.T))
    psi = v[:, -1]
    # fix the sign so results are reproducible
    i = int(np.argmax(np.abs(psi)))
    if psi[i] < 0:
        psi = -psi
    return psi, float(w[-1])


# ---------------------------------------------------------------------------
# measurement step


@dataclass
class PovmSolution:
    povm: np.ndarray     # (B, K, d, d)
    value: np.ndarray    # (B,)
    dual: np.ndarray     # (B, d, d)
    gap: np.ndarray      # (B,)


def _sym(a):
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def _inv_sqrt(s):
    w, v = np.linalg.eigh(s)
    return np.einsum("...ij,...j,...kj->...ik", v, 1.0 / np.sqrt(w), v)


def solve_povm_batch(rewards, complete: bool = False, gap_target: float = 1e-11,
                     growth: float = 100.0, max_newton: int = 60) -> PovmSolution:
    """max sum_a tr(E_a R_a) over (in)complete POVMs, independently per batch entry.

    ``rewards`` has shape (B, K, d, d).  Incomplete problems get an extra
    zero-reward outcome that absorbs the slack 1 - sum_a E_a.

    Log-barrier on the dual  min tr Y  s.t.  Y > R_a.  Every iterate Y is
    strictly dual feasible and the recovered E is rescaled onto the feasible
    set, so the returned gap certifies the value however loosely the path
    was followed; only the last stage is centred tightly.
    """
    r = _sym(np.asarray(rewards, float))
    if r.ndim != 4 or r.shape[2] != r.shape[3]:
        raise ValidationError(f"rewards must have shape (B, K, d, d), got {r.shape}")
    nb, k, d, _ = r.shape
    full = r if complete else np.concatenate([r, np.zeros((nb, 1, d, d))], axis=1)
    slots = full.shape[1]
    eye = np.eye(d)
    lam = np.linalg.eigvalsh(full)            # (B, A, d)
    scale = np.maximum(1.0, np.abs(lam).max(axis=(1, 2)))
    y = (lam[..., -1].max(axis=1) + scale)[:, None, None] * eye
    t = np.ones(nb) / scale
    target = gap_target * scale

    def centre(y, t, tol):
        for _ in range(max_newton):
            zinv = np.linalg.inv(y[:, None] - full)
            grad = t[:, None, None] * eye - zinv.sum(axis=1)
            hess = np.einsum("baij,bakl->bikjl", zinv, zinv).reshape(nb, d * d, d * d)
            step = -np.linalg.solve(hess, grad.reshape(nb, d * d, 1))[..., 0]
            dec = np.sqrt(np.maximum(-(grad.reshape(nb, -1) * step).sum(axis=1), 0.0))
            if dec.max() < tol:
                break
            # damped Newton keeps Y - R_a positive definite (self-concordance)
            damp = np.where(dec > 0.25, 1.0 / (1.0 + dec), 1.0)
            y = _sym(y + damp[:, None, None] * step.reshape(nb, d, d))
        return y

    while True:
        done = slots * d / t <= target
        y = centre(y, t, 1e-9 if np.all(done) else 1e-2)
        if np.all(done):
            break
        t = np.where(done, t, t * growth)

    z = y[:, None] - full
    e = np.linalg.inv(z) / t[:, None, None, None]
    s_inv = _inv_sqrt(_sym(e.sum(axis=1)))
    e = _sym(np.einsum("bij,bajk,bkl->bail", s_inv, e, s_inv))
    e = e[:, :k]
    value = np.einsum("baij,baji->b", e, r)
    gap = np.trace(y, axis1=1, axis2=2) - value
    return PovmSolution(e, value, y, gap)


def optimize_povm_input(rewards, complete: bool = False, warm=None):
    """Single-input measurement step; returns (povm (K, d, d), value, dual Y, gap).

    With a warm start the returned value is never below the warm start's.
    """
    r = np.asarray(rewards, float)
    if np.max(np.abs(r - r.swapaxes(1, 2)), initial=0.0) > 1e-12 * max(1.0, np.abs(r).max(initial=0.0)):
        raise ValidationError("rewards must be symmetric")
    sol = solve_povm_batch(r[None], complete)
    e, val, y = sol.povm[0], float(sol.value[0]), sol.dual[0]
    if warm is not None:
        wv = float(np.einsum("aij,aji->", warm, r))
        if wv > val:
            e, val = np.asarray(warm, float), wv
    return e, val, y, float(np.trace(y) - val)


# ---------------------------------------------------------------------------
# see-saw


@dataclass(frozen=True)
class SeesawConfig:
    d_a: int = 2
    d_b: int = 2
    restarts: int = 20
    max_sweeps: int = 500
    tol: float = 1e-8
    stream: RngStream = field(default_factory=lambda: RngStream(0))
    complete: bool = False
    jobs: int = 1

    def __post_init__(self):
        if self.d_a < 1 or self.d_b < 1:
            raise ValidationError("dimensions must be >= 1")
        if self.tol <= 0:
            raise ValidationError("tol must be positive")

    def as_dict(self) -> dict:
        return {"d_a": self.d_a, "d_b": self.d_b, "restarts": self.restarts, "max_sweeps": self.max_sweeps,
                "tol": self.tol, "seed": self.stream.seed, "stream": self.stream.stream,
                "complete": self.complete}


@dataclass
class SeesawRun:
    value: float
    sign: float
    psi: np.ndarray
    povm_a: np.ndarray
    povm_b: np.ndarray
    history: list
    sweeps: int
    max_gap: float


def random_projective(n: int, k: int, d: int, gen: np.random.Generator) -> np.ndarray:
    """Random rank-one projective measurements: QR frames, vectors dealt to random outputs."""
    out = np.zeros((n, k, d, d))
    for x in range(n):
        q, rr = np.linalg.qr(gen.standard_normal((d, d)))
        q = q * np.sign(np.where(np.diag(rr) == 0, 1.0, np.diag(rr)))
        labels = gen.integers(0, k, size=d)
        for j in range(d):
            out[x, labels[j]] += np.outer(q[:, j], q[:, j])
    return out


def random_povm(n: int, k: int, d: int, gen: np.random.Generator) -> np.ndarray:
    """Generic full-rank complete POVMs: Wishart elements rescaled to sum to I.

    Used as see-saw starts; unlike random projective measurements they never
    start on a trivial (single-output) measurement, a common stationary point.
    """
    g = gen.standard_normal((n, k, d, d))
    w = np.einsum("xaij,xakj->xaik", g, g)
    s = _inv_sqrt(w.sum(axis=1))
    return _sym(np.einsum("xij,xajk,xkl->xail", s, w, s))


def _alice_rewards(m, psi_mat, fb):
    t = np.einsum("ik,ybkl,jl->ybij", psi_mat, fb, psi_mat, optimize=True)
    return np.einsum("xyab,ybij->xaij", m, t, optimize=True)


def _bob_rewards(m, psi_mat, ea):
    t = np.einsum("ik,xaij,jl->xakl", psi_mat, ea, psi_mat, optimize=True)
    return np.einsum("xyab,xakl->ybkl", m, t, optimize=True)


def embed_local_strategy(alice, bob, k: int, d_a: int, d_b: int) -> tuple:
    """Deterministic (possibly abstaining) strategies as rank-one POVMs on |0>; -1 means no click."""
    def ops(strategy, d):
        out = np.zeros((len(strategy), k, d, d))
        for x, a in enumerate(strategy):
            if a >= 0:
                out[x, a, 0, 0] = 1.0
        return out
    return ops(alice, d_a), ops(bob, d_b)


def _single_run(m: BellFunctional, cfg: SeesawConfig, sign: float, stream: RngStream,
                start=None) -> SeesawRun:
    gen = stream.generator()
    t = sign * m.m
    sm = BellFunctional(m.scenario, t)
    n, _, k, _ = t.shape
    da, db = cfg.d_a, cfg.d_b
    if start is None:
        ea = random_povm(n, k, da, gen)
        fb = random_povm(n, k, db, gen)
    else:
        ea, fb = (np.array(v, float) for v in start)
    psi, val = optimize_state(bell_operator(sm, ea, fb))
    history = [val]
    max_gap = 0.0
    sweeps = 0
    for sweeps in range(1, cfg.max_sweeps + 1):
        start = val
        pm = psi.reshape(da, db)
        sol = solve_povm_batch(_alice_rewards(t, pm, fb), cfg.complete)
        new = float(sol.value.sum())
        max_gap = max(max_gap, float(sol.gap.max()))
        if new >= val:
            ea, val = sol.povm, new
        history.append(val)

        sol = solve_povm_batch(_bob_rewards(t, pm, ea), cfg.complete)
        new = float(sol.value.sum())
        max_gap = max(max_gap, float(sol.gap.max()))
        if new >= val:
            fb, val = sol.povm, new
        history.append(val)

        psi_new, new = optimize_state(bell_operator(sm, ea, fb))
        if new >= val:
            psi, val = psi_new, new
        history.append(val)
        if val - start <= cfg.tol * max(1.0, abs(val)):
            break
    return SeesawRun(val, sign, psi, ea, fb, history, sweeps, max_gap)


def _run_job(args):
    m, cfg, sign, stream, start = args
    return _single_run(m, cfg, sign, stream, start)


def seesaw(m: BellFunctional, cfg: SeesawConfig | None = None, starts=()) -> tuple:
    """Lower bound on B_Q(M) = sup |<M, P>| over incomplete quantum behaviors.

    Runs ``cfg.restarts`` random restarts for each sign of M, plus one run per
    sign from each ``(povm_a, povm_b)`` pair in ``starts``, and returns
    ``(SolveReport, QuantumModel)`` for the best run.
    """
    cfg = cfg or SeesawConfig()
    jobs = [(m, cfg, sign, cfg.stream.child(2 * i + (sign < 0)), None)
            for i in range(cfg.restarts) for sign in (1.0, -1.0)]
    jobs += [(m, cfg, sign, cfg.stream, st) for st in starts for sign in (1.0, -1.0)]
    runs = pmap(_run_job, jobs, cfg.jobs)
    best = max(runs, key=lambda r: r.value)
    model = QuantumModel(cfg.d_a, cfg.d_b, best.psi, best.povm_a, best.povm_b, complete=cfg.complete)
    rep = SolveReport(max(best.value, 0.0), LOWER_BOUND, iterations=sum(r.sweeps for r in runs),
                      residual=max(r.max_gap for r in runs), method="seesaw",
                      witness={"sign": best.sign, "history": best.history, "run_values": [r.value for r in runs]})
    return rep, model


# ---------------------------------------------------------------------------
# reports


def _canonical_scale(m: BellFunctional) -> float:
    """Power of two near max|M|; rescaling M by a power of two leaves the scaled tensor unchanged."""
    peak = float(np.abs(m.m).max())
    if peak == 0.0:
        return 1.0
    return float(2.0 ** np.frexp(peak)[1])


@dataclass
class ViolationReport:
    classical: SolveReport
    quantum: SolveReport
    ratio: float
    confirmed: bool
    model: QuantumModel = field(repr=False, default=None)

    def as_dict(self) -> dict:
        return {"value": self.quantum.value, "ratio": self.ratio,
                "certificates": {"classical": self.classical.as_dict(), "quantum": self.quantum.as_dict(),
                                 "status": "confirmed" if self.confirmed else "unconfirmed"}}


def drop_null_outputs(m: BellFunctional) -> tuple:
    """Remove outputs whose coefficients vanish for both parties.

    Under incomplete measurements such an output is interchangeable with not
    clicking, so classical and quantum values are unchanged.  Returns the
    reduced functional and the kept output indices.
    """
    t = m.m
    k = t.shape[2]
    null = [c for c in range(k) if not t[:, :, c, :].any() and not t[:, :, :, c].any()]
    keep = [c for c in range(k) if c not in null]
    if not null or not keep:
        return m, list(range(k))
    idx = np.array(keep)
    return BellFunctional(Scenario(m.scenario.inputs, len(keep)), t[:, :, idx][:, :, :, idx]), keep


def violation_report(m: BellFunctional, cfg: SeesawConfig | None = None, classical_mode: str = "auto",
                     degenerate_tol: float = 1e-12) -> ViolationReport:
    """LV(M) lower bound = (see-saw value) / B_C(M).

    With incomplete measurements (the default) outputs carrying no
    coefficients are dropped first, so padding M does not change the search;
    the returned model then lives on the kept outputs.
    """
    cfg = cfg or SeesawConfig()
    if not cfg.complete:
        m, _ = drop_null_outputs(m)
    scale = _canonical_scale(m)
    mn = BellFunctional(m.scenario, m.m / scale)
    bc = classical_bound(mn, classical_mode, stream=cfg.stream.child(10**6))
    if bc.value <= degenerate_tol:
        raise ValidationError("B_C(M) = 0: degenerate functional (then B_Q(M) = 0 as well)")
    starts = [embed_local_strategy(bc.witness["alice"], bc.witness["bob"], m.scenario.n_out, cfg.d_a, cfg.d_b)]
    bq, model = seesaw(mn, cfg, starts)
    bc_s = SolveReport(bc.value * scale, bc.certificate, bc.iterations, bc.residual * scale, bc.method, bc.witness)
    bq_s = SolveReport(bq.value * scale, bq.certificate, bq.iterations, bq.residual * scale, bq.method, bq.witness)
    return ViolationReport(bc_s, bq_s, bq.value / bc.value, bc.certificate == EXACT, model)


MONITOR_CONSTANT = 16.0


@dataclass
class MonitorFlags:
    nu: float
    dim: int
    outputs: int
    nu_over_dim: float
    nu_over_outputs_sq: float
    threshold: float
    passed: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def upper_bound_monitor(p: Behavior, dim: int, outputs: int, nu: float | None = None) -> MonitorFlags:
    """Flag nu(P) above 16 * min(d, k^2), a conservative stand-in for the O(d) and O(k^2) bounds."""
    if nu is None:
        nu = nu_of_behavior(p).nu
    threshold = MONITOR_CONSTANT * min(dim, outputs ** 2)
    flags = MonitorFlags(nu, dim, outputs, nu / dim, nu / outputs ** 2, threshold, nu <= threshold)
    log.info("upper-bound monitor: nu=%.6g nu/d=%.4g nu/k^2=%.4g threshold=%.4g", nu, nu / dim,
             nu / outputs ** 2, threshold)
    return flags


@dataclass
class WitnessRow:
    dim: int
    value: float
    ratio_to_previous: float | None


@dataclass
class WitnessReport:
    rows: list
    monotone: bool
    noise_tol: float

    def as_dict(self) -> dict:
        return {"per_dim_table": [r.__dict__ for r in self.rows], "monotone": self.monotone,
                "noise_tol": self.noise_tol}


def dimension_witness_report(m: BellFunctional, dims, cfg: SeesawConfig | None = None,
                             noise_tol: float = 1e-6) -> WitnessReport:
    """Best see-saw value per local dimension d (both parties), ascending d."""
    dims = list(dims)
    if dims != sorted(dims) or len(set(dims)) != len(dims):
        raise ValidationError("dims must be strictly ascending")
    cfg = cfg or SeesawConfig()
    # the embedded classical optimum is a start at every d, so each row is >= B_C
    bc = classical_bound(m, stream=cfg.stream.child(10**6))
    rows, prev = [], None
    monotone = True
    for d in dims:
        c = SeesawConfig(d, d, cfg.restarts, cfg.max_sweeps, cfg.tol, cfg.stream.child(d), cfg.complete, cfg.jobs)
        starts = [embed_local_strategy(bc.witness["alice"], bc.witness["bob"], m.scenario.n_out, d, d)]
        rep, _ = seesaw(m, c, starts)
        ratio = None
        if prev is not None:
            ratio = rep.value / prev if prev > 0 else None
            if rep.value < prev - noise_tol * max(1.0, prev):
                monotone = False
                log.warning("dimension witness: value dropped from %.8g to %.8g at d=%d", prev, rep.value, d)
        rows.append(WitnessRow(d, rep.value, ratio))
        prev = rep.value
    return WitnessReport(rows, monotone, noise_tol)


def quantum_behavior(model: QuantumModel, scenario) -> Behavior:
    return behavior_from_quantum(model, scenario)

"""Tensor data model for bipartite Bell scenarios.

Everything is a dense real 4-tensor indexed ``[x, y, a, b]`` (Alice input, Bob
input, Alice output, Bob output).  Outputs are 0-based; when a scenario has a
"no detection" outcome it is always the last output index.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import config
from .errors import ValidationError

QUANTUM = "quantum"
LOCAL = "local"
RAW = "nonsignalling-raw"
PROVENANCES = (QUANTUM, LOCAL, RAW)


def _frozen(arr, dtype=float) -> np.ndarray:
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Scenario:
    inputs: int
    outputs: int
    has_bottom: bool = False

    def __post_init__(self):
        if int(self.inputs) < 1 or int(self.outputs) < 1:
            raise ValidationError(f"scenario needs inputs, outputs >= 1, got {self.inputs}, {self.outputs}")
        object.__setattr__(self, "inputs", int(self.inputs))
        object.__setattr__(self, "outputs", int(self.outputs))
        object.__setattr__(self, "has_bottom", bool(self.has_bottom))

    @property
    def n_out(self) -> int:
        """Effective output count, including the bottom outcome."""
        return self.outputs + int(self.has_bottom)

    @property
    def bottom(self) -> int | None:
        return self.outputs if self.has_bottom else None

    @property
    def shape(self) -> tuple:
        return (self.inputs, self.inputs, self.n_out, self.n_out)

    def padded(self) -> "Scenario":
        """Scenario with one extra trailing output reserved for 'no detection'."""
        return Scenario(self.inputs, self.n_out, True)


def _check_shape(scenario: Scenario, tensor: np.ndarray, what: str):
    if tensor.shape != scenario.shape:
        raise ValidationError(f"{what} tensor shape {tensor.shape} does not match scenario {scenario.shape}")


@dataclass(frozen=True)
class BellFunctional:
    scenario: Scenario
    m: np.ndarray

    def __post_init__(self):
        m = _frozen(self.m)
        _check_shape(self.scenario, m, "functional")
        if not np.all(np.isfinite(m)):
            raise ValidationError("functional has non-finite entries")
        object.__setattr__(self, "m", m)

    def __mul__(self, c: float) -> "BellFunctional":
        return BellFunctional(self.scenario, c * self.m)

    __rmul__ = __mul__

    def __add__(self, other: "BellFunctional") -> "BellFunctional":
        if other.scenario != self.scenario:
            raise ValidationError("cannot add functionals on different scenarios")
        return BellFunctional(self.scenario, self.m + other.m)

    def swapped(self) -> "BellFunctional":
        """Exchange the roles of Alice and Bob."""
        return BellFunctional(self.scenario, self.m.transpose(1, 0, 3, 2))

    def matrix(self) -> np.ndarray:
        """The (N K) x (N K) matrix with rows (x, a) and columns (y, b)."""
        n, _, k, _ = self.m.shape
        return self.m.transpose(0, 2, 1, 3).reshape(n * k, n * k)


@dataclass(frozen=True)
class Behavior:
    scenario: Scenario
    p: np.ndarray
    provenance: str = RAW

    def __post_init__(self):
        p = _frozen(self.p)
        _check_shape(self.scenario, p, "behavior")
        if self.provenance not in PROVENANCES:
            raise ValidationError(f"unknown provenance {self.provenance!r}")
        if not np.all(np.isfinite(p)):
            raise ValidationError("behavior has non-finite entries")
        object.__setattr__(self, "p", p)

    def alice_marginal(self) -> np.ndarray:
        """P(a|x) read at y = 0; shape (N, K')."""
        return self.p[:, 0].sum(axis=2)

    def bob_marginal(self) -> np.ndarray:
        return self.p[0].sum(axis=1)


@dataclass(frozen=True)
class DeterministicLocalPoint:
    alice_map: tuple
    bob_map: tuple

    def tensor(self, scenario: Scenario) -> np.ndarray:
        n, k = scenario.inputs, scenario.n_out
        if len(self.alice_map) != n or len(self.bob_map) != n:
            raise ValidationError("deterministic point does not cover every input")
        if not all(0 <= v < k for v in (*self.alice_map, *self.bob_map)):
            raise ValidationError("deterministic point output out of range")
        pa = np.zeros((n, k))
        pa[np.arange(n), list(self.alice_map)] = 1.0
        pb = np.zeros((n, k))
        pb[np.arange(n), list(self.bob_map)] = 1.0
        return np.einsum("xa,yb->xyab", pa, pb)


@dataclass(frozen=True)
class SignedStrategy:
    """One (output, sign) choice per input: an extreme point of the signed ball."""
    choices: tuple

    def __post_init__(self):
        for out, sign in self.choices:
            if sign not in (-1, 1) or out < 0:
                raise ValidationError(f"invalid signed choice {(out, sign)}")

    def vector(self, outputs: int) -> np.ndarray:
        q = np.zeros((len(self.choices), outputs))
        for x, (out, sign) in enumerate(self.choices):
            q[x, out] = sign
        return q


@dataclass(frozen=True)
class LocalDecomposition:
    weights: np.ndarray
    points: tuple

    def __post_init__(self):
        w = _frozen(self.weights)
        if w.ndim != 1 or w.size != len(self.points):
            raise ValidationError("one weight per point required")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "points", tuple(self.points))

    @property
    def l1(self) -> float:
        return float(np.abs(self.weights).sum())


@dataclass(frozen=True)
class QuantumModel:
    """State on R^dA (x) R^dB plus (possibly incomplete) POVMs.

    ``povm_a`` has shape (N, K', dA, dA), ``povm_b`` (N, K', dB, dB).  ``state``
    is either a unit vector of length dA*dB or a density matrix.
    """
    d_a: int
    d_b: int
    state: np.ndarray
    povm_a: np.ndarray
    povm_b: np.ndarray
    complete: bool = True
    tol: float = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        tol = self.tol if self.tol is not None else config.TOL.norm
        state = _frozen(self.state)
        ea, fb = _frozen(self.povm_a), _frozen(self.povm_b)
        d = self.d_a * self.d_b
        if state.ndim == 1:
            if state.size != d:
                raise ValidationError(f"state vector has length {state.size}, expected {d}")
            if abs(np.linalg.norm(state) - 1.0) > tol:
                raise ValidationError("pure state is not normalized")
        elif state.shape == (d, d):
            if np.max(np.abs(state - state.T)) > tol:
                raise ValidationError("density matrix is not symmetric")
            if abs(np.trace(state) - 1.0) > tol:
                raise ValidationError("density matrix does not have unit trace")
            if np.linalg.eigvalsh(state)[0] < -tol:
                raise ValidationError("density matrix is not positive semidefinite")
        else:
            raise ValidationError(f"state has shape {state.shape}, expected ({d},) or ({d}, {d})")
        for name, ops, dim in (("A", ea, self.d_a), ("B", fb, self.d_b)):
            if ops.ndim != 4 or ops.shape[2:] != (dim, dim):
                raise ValidationError(f"POVM {name} has shape {ops.shape}, expected (N, K, {dim}, {dim})")
            if np.max(np.abs(ops - ops.swapaxes(2, 3)), initial=0.0) > tol:
                raise ValidationError(f"POVM {name} elements are not symmetric")
            if ops.size and np.linalg.eigvalsh(ops).min() < -tol:
                raise ValidationError(f"POVM {name} has a non-positive element")
            slack = np.eye(dim) - ops.sum(axis=1)
            ev = np.linalg.eigvalsh(slack)
            if ev.min() < -tol:
                raise ValidationError(f"POVM {name}: sum of elements exceeds the identity")
            if self.complete and np.max(np.abs(ev)) > tol:
                raise ValidationError(f"POVM {name} is marked complete but does not sum to the identity")
        if ea.shape[:2] != fb.shape[:2]:
            raise ValidationError("Alice and Bob must share input/output counts")
        object.__setattr__(self, "state", state)
        object.__setattr__(self, "povm_a", ea)
        object.__setattr__(self, "povm_b", fb)

    @property
    def density(self) -> np.ndarray:
        if self.state.ndim == 1:
            return np.outer(self.state, self.state)
        return self.state


# ---------------------------------------------------------------------------
# operations


def pair(m: BellFunctional, p: Behavior) -> float:
    """<M, P> = sum M[x,y,a,b] P[x,y,a,b]."""
    if m.scenario.shape != p.scenario.shape:
        raise ValidationError(f"shape mismatch: functional {m.scenario.shape} vs behavior {p.scenario.shape}")
    # fsum is exactly rounded, so padding with zero entries cannot change the result
    return math.fsum((m.m * p.p).ravel())


def quantum_tensor(state, povm_a, povm_b, d_a, d_b) -> np.ndarray:
    if state.ndim == 1:
        psi = state.reshape(d_a, d_b)
        return np.einsum("ik,xaij,ybkl,jl->xyab", psi, povm_a, povm_b, psi, optimize=True)
    rho4 = state.reshape(d_a, d_b, d_a, d_b)
    return np.einsum("xaij,ybkl,jlik->xyab", povm_a, povm_b, rho4, optimize=True)


def behavior_from_quantum(q: QuantumModel, scenario: Scenario | None = None) -> Behavior:
    """P(a,b|x,y) = tr(E_x^a (x) F_y^b rho).

    With a scenario one output wider than the POVMs, the missing weight
    I - sum_a E_x^a is placed on the bottom output.
    """
    ea, fb = q.povm_a, q.povm_b
    if scenario is not None and scenario.has_bottom and scenario.n_out == ea.shape[1] + 1:
        ea = np.concatenate([ea, (np.eye(q.d_a) - ea.sum(axis=1))[:, None]], axis=1)
        fb = np.concatenate([fb, (np.eye(q.d_b) - fb.sum(axis=1))[:, None]], axis=1)
    p = quantum_tensor(q.state, ea, fb, q.d_a, q.d_b)
    if scenario is None:
        scenario = Scenario(p.shape[0], p.shape[2])
    return Behavior(scenario, p, QUANTUM)


def behavior_from_local(d: LocalDecomposition, scenario: Scenario) -> Behavior:
    if not d.points:
        raise ValidationError("empty local decomposition")
    p = np.zeros(scenario.shape)
    for w, pt in zip(d.weights, d.points):
        p += w * pt.tensor(scenario)
    return Behavior(scenario, p, LOCAL)


def pad_functional(m: BellFunctional) -> BellFunctional:
    """Append a 'no detection' output whose coefficients are all zero."""
    sc = m.scenario.padded()
    out = np.zeros(sc.shape)
    k = m.scenario.n_out
    out[:, :, :k, :k] = m.m
    return BellFunctional(sc, out)


def pad_behavior(p: Behavior) -> Behavior:
    """Embed P into the padded scenario with zero probability on the new output."""
    sc = p.scenario.padded()
    out = np.zeros(sc.shape)
    k = p.scenario.n_out
    out[:, :, :k, :k] = p.p
    return Behavior(sc, out, p.provenance)


def mix_detector_noise(p: Behavior, eta: float) -> Behavior:
    """Detectors firing with efficiency eta on both sides.

    eta^2 P + eta(1-eta) P(a|x) [b=bot] + eta(1-eta) [a=bot] P(b|y) + (1-eta)^2 [a=b=bot]
    """
    if not 0.0 <= eta <= 1.0:
        raise ValidationError(f"detector efficiency must lie in [0, 1], got {eta}")
    padded = pad_behavior(p)
    bot = padded.scenario.n_out - 1
    k = p.scenario.n_out
    out = eta * eta * padded.p
    # marginals read per (x, y) so normalization holds exactly even off the NS set
    pa = p.p.sum(axis=3)   # (x, y, a)
    pb = p.p.sum(axis=2)   # (x, y, b)
    out[:, :, :k, bot] += eta * (1 - eta) * pa
    out[:, :, bot, :k] += eta * (1 - eta) * pb
    out[:, :, bot, bot] += (1 - eta) ** 2
    return Behavior(padded.scenario, out, p.provenance)


@dataclass(frozen=True)
class ValidationReport:
    nonneg: float
    normalized: float
    nonsignalling: float

    def ok(self, tol_nonneg=None, tol_norm=None, tol_ns=None) -> bool:
        t = config.TOL
        return (self.nonneg <= (t.nonneg if tol_nonneg is None else tol_nonneg)
                and self.normalized <= (t.norm if tol_norm is None else tol_norm)
                and self.nonsignalling <= (t.ns if tol_ns is None else tol_ns))

    def as_dict(self) -> dict:
        return {"nonneg": self.nonneg, "normalized": self.normalized, "nonsignalling": self.nonsignalling}


def validate(p: Behavior) -> ValidationReport:
    """Residuals only; never raises for a bad behavior."""
    t = p.p
    nonneg = max(0.0, -float(t.min()))
    normalized = float(np.max(np.abs(t.sum(axis=(2, 3)) - 1.0)))
    pa = t.sum(axis=3)  # (x, y, a): must not depend on y
    pb = t.sum(axis=2)  # (x, y, b): must not depend on x
    ns_a = float(np.max(pa.max(axis=1) - pa.min(axis=1)))
    ns_b = float(np.max(pb.max(axis=0) - pb.min(axis=0)))
    return ValidationReport(nonneg, normalized, max(ns_a, ns_b))


# ---------------------------------------------------------------------------
# standard objects


def chsh_functional() -> BellFunctional:
    """M = (-1)^(a + b + x y): the CHSH expression in full-probability form."""
    m = np.zeros((2, 2, 2, 2))
    for x, y, a, b in itertools.product(range(2), repeat=4):
        m[x, y, a, b] = (-1) ** (a + b + x * y)
    return BellFunctional(Scenario(2, 2), m)


def pr_box() -> Behavior:
    p = np.zeros((2, 2, 2, 2))
    for x, y, a, b in itertools.product(range(2), repeat=4):
        if (a ^ b) == (x & y):
            p[x, y, a, b] = 0.5
    return Behavior(Scenario(2, 2), p, RAW)


def projector(theta: float) -> np.ndarray:
    v = np.array([np.cos(theta), np.sin(theta)])
    return np.outer(v, v)


def chsh_tsirelson_model() -> QuantumModel:
    """Phi+ with Alice at angles 0, pi/4 and Bob at pi/8, -pi/8 (real qubit observables)."""
    state = np.array([1.0, 0.0, 0.0, 1.0]) / np.sqrt(2.0)

    def povm(angles):
        return np.array([[projector(t), projector(t + np.pi / 2)] for t in angles])

    return QuantumModel(2, 2, state, povm([0.0, np.pi / 4]), povm([np.pi / 8, -np.pi / 8]))


def chsh_tsirelson_behavior() -> Behavior:
    return behavior_from_quantum(chsh_tsirelson_model())


def deterministic_behavior(scenario: Scenario, alice: Sequence[int], bob: Sequence[int]) -> Behavior:
    pt = DeterministicLocalPoint(tuple(alice), tuple(bob))
    return Behavior(scenario, pt.tensor(scenario), LOCAL)

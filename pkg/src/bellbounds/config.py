"""Global tolerances and budgets.

Values are module-level so that callers (and the CLI ``--tol`` / ``--budget``
flags) can adjust them with :func:`configure`.
"""
from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Tolerances:
    norm: float = 1e-9
    ns: float = 1e-9
    nonneg: float = 1e-12
    lp: float = 1e-8


@dataclass(frozen=True)
class Budgets:
    # strategy evaluations allowed for exhaustive enumeration
    strategies: int = 10**7
    # deterministic product points allowed in the nu / pi LPs
    lp_points: int = 4096
    # desk-scale guardrails for the Gaussian construction
    construction_inputs: int = 10**5
    construction_entries: int = 2 * 10**8
    # sign vectors for exact injective norms
    sign_vectors: int = 2**20


TOL = Tolerances()
BUDGET = Budgets()


def configure(tol: float | None = None, budget: int | None = None) -> None:
    """Override the global tolerance scale and/or strategy budget."""
    global TOL, BUDGET
    if tol is not None:
        if tol <= 0:
            raise ValueError("tolerance must be positive")
        # default ratios: nonneg = 1e-3 * tol, lp = 10 * tol
        TOL = Tolerances(norm=tol, ns=tol, nonneg=1e-3 * tol, lp=10.0 * tol)
    if budget is not None:
        if budget < 1:
            raise ValueError("budget must be positive")
        BUDGET = replace(BUDGET, strategies=int(budget))


def reset() -> None:
    global TOL, BUDGET
    TOL = Tolerances()
    BUDGET = Budgets()

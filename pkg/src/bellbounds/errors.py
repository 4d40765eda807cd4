class BellBoundsError(Exception):
    """Base class for library errors."""


class BudgetExceeded(BellBoundsError):
    """An exact computation was refused because it exceeds the configured budget."""

    def __init__(self, message: str, required: float, budget: float):
        super().__init__(f"{message} (required {required:.6g}, budget {budget:.6g})")
        self.required = required
        self.budget = budget


class ValidationError(BellBoundsError, ValueError):
    """Input data violates a model invariant."""


class InfeasibleError(BellBoundsError):
    """A linear program has no feasible point."""


class NumericalStall(BellBoundsError):
    """An iterative kernel failed to make progress."""

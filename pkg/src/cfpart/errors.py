"""Exception types shared across the package."""


class InvalidDecomposition(ValueError):
    """A decomposition breaks a structural requirement of the operation."""


class InfeasibleProblem(ValueError):
    """No assignment can satisfy the requested constraints."""


class EnumerationBudgetExceeded(RuntimeError):
    """Exhaustive search would enumerate more partitions than the budget allows."""

    def __init__(self, required, budget):
        self.required = required
        self.budget = budget
        super().__init__(
            f"exhaustive search needs {required} partitions, budget is {budget}"
        )

"""Exception and warning types shared across the package."""


class ConfigurationError(ValueError):
    """Inconsistent or out-of-range scenario configuration."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class SingularChannelError(RuntimeError):
    """Channel matrix is rank deficient where an inverse is required."""


class DegenerateGeometryError(RuntimeError):
    """A per-coefficient curvature is nonpositive, so no minimizer exists."""


class DivergenceError(RuntimeError):
    """Gradient recursion diverged; carries the offending step size."""

    def __init__(self, mu, iteration):
        self.mu = float(mu)
        self.iteration = int(iteration)
        super().__init__(
            f"power allocation recursion diverged at iteration {iteration} "
            f"with step size mu={mu:.6g}"
        )


class BudgetExceededError(RuntimeError):
    """An exhaustive search would exceed its candidate budget."""

    def __init__(self, count, budget):
        self.count = int(count)
        self.budget = int(budget)
        super().__init__(
            f"exhaustive search needs {count} candidates, above the budget of {budget}"
        )


class UnstableGeometryWarning(UserWarning):
    """A printed-form step-size bound is nonpositive for this instance."""

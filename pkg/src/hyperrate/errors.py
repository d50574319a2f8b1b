"""Exception hierarchy shared by every module."""


class HyperrateError(Exception):
    """Base class for all library errors."""


class BudgetExceeded(HyperrateError):
    """An evaluation would exceed the configured work budget."""

    def __init__(self, required, budget):
        self.required = required
        self.budget = budget
        super().__init__(
            f"evaluation needs {required} terms, budget is {budget} "
            "(raise it with HYPERRATE_BUDGET)"
        )


class SizeLimitExceeded(HyperrateError):
    pass


class DomainError(HyperrateError, ValueError):
    pass


class NoFeasiblePoint(HyperrateError):
    """No point satisfying the constraint was found.

    ``best`` carries the best (possibly infeasible) iterate when one exists.
    """

    def __init__(self, message, best=None):
        self.best = best
        super().__init__(message)


class DegenerateWidth(HyperrateError):
    pass


class GraphFormatError(HyperrateError, ValueError):
    pass

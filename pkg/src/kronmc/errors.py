class InvalidInputError(ValueError):
    """A precondition on user-supplied data was violated."""


class NumericalError(RuntimeError):
    """A numerically infeasible operation (failed factorization, zero weight,
    non-monotone exact minimizer, ...)."""

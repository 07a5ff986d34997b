"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """A distribution or model parameter is outside its valid domain."""


class DataValidationError(ValueError):
    """Input data violates a structural requirement (shape, symmetry, schema)."""


class NumericalError(RuntimeError):
    """A numerical routine failed beyond recovery.

    Carries ``min_eigenvalue`` when the failure is a non-positive-definite
    matrix (estimated from the symmetrized matrix that refused a Cholesky
    factorization), and ``context`` describing where the failure occurred.
    """

    def __init__(self, message, min_eigenvalue=None, context=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue
        self.context = context


class ChainError(RuntimeError):
    """A Gibbs chain aborted mid-run.

    ``iteration`` is the 0-based sweep index that failed, ``block`` the update
    responsible, and ``partial`` whatever samples were recorded before the
    failure (may be None).
    """

    def __init__(self, message, iteration=None, block=None, partial=None):
        super().__init__(message)
        self.iteration = iteration
        self.block = block
        self.partial = partial

"""
Exception types raised by the sparse recovery toolkit
"""


class SparseRecoveryError(Exception):
    """Base class for all toolkit errors"""


class InvalidInputError(SparseRecoveryError, ValueError):
    """Malformed data: dimension mismatch, non-finite entries, bad sparsity"""


class InvalidParameterError(SparseRecoveryError, ValueError):
    """Penalty or solver parameter outside its domain"""


class FactorizationError(SparseRecoveryError, ArithmeticError):
    """Cholesky factorization of the x-update system broke down"""

    def __init__(self, message, rho, condition=None):
        super().__init__(f"{message} (rho={rho!r}, condition estimate={condition!r})")
        self.rho = rho
        self.condition = condition


class SolverDivergenceError(SparseRecoveryError, RuntimeError):
    """An iterate became non-finite or exceeded the divergence bound"""

    def __init__(self, message, trace=None, iteration=None):
        super().__init__(message)
        self.trace = trace
        self.iteration = iteration


class LambdaSelectionError(SparseRecoveryError, RuntimeError):
    """Every run of the lambda grid search failed"""

    def __init__(self, message, statuses):
        super().__init__(message)
        self.statuses = statuses

class STFemError(Exception):
    """Base class for solver errors."""


class DegenerateCellError(STFemError, ValueError):
    pass


class InvalidMeshError(STFemError, ValueError):
    pass


class SingularMatrixError(STFemError):
    pass


class ConvergenceError(STFemError):
    """Iterative solve stopped before reaching the requested tolerance."""

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class UndefinedRatioError(STFemError, ValueError):
    pass


class ResourceLimitError(STFemError):
    """A run was refused or aborted because it would not fit in memory."""

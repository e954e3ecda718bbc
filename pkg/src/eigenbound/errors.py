"""Exception types raised by eigenbound."""


class EigenboundError(Exception):
    """Base class for all package errors."""


class InvalidGeometryError(EigenboundError, ValueError):
    pass


class MeshParseError(EigenboundError, ValueError):
    def __init__(self, lineno, message):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}")


class TopologyError(EigenboundError):
    pass


class ParameterError(EigenboundError, ValueError):
    pass


class ContractError(EigenboundError, ValueError):
    """An argument violates an operation's preconditions."""


class UnsupportedBoundaryError(EigenboundError, ValueError):
    pass


class DefinitenessError(EigenboundError, ValueError):
    """A matrix expected to be positive definite is not.

    ``pivot`` is the 1-based pivot index where Cholesky broke down, when known.
    """

    def __init__(self, message, pivot=None):
        self.pivot = pivot
        super().__init__(message)


class KernelError(EigenboundError, ValueError):
    pass


class IllPosedRatioError(EigenboundError, ValueError):
    pass


class PreconditionError(EigenboundError):
    pass

"""Exception types shared across the package."""


class FsbcError(Exception):
    """Base class for all fsbclab errors."""


class DimensionMismatch(FsbcError):
    """Tensor shape disagrees with the declared alphabet sizes."""


class NegativeEntry(FsbcError):
    """A probability table contains a negative entry."""


class NotStochastic(FsbcError):
    """A conditional law does not normalize within tolerance."""


class InvalidSpec(FsbcError):
    """A channel description violates its declared constraints."""


class DomainError(FsbcError):
    """A scalar argument lies outside its admissible interval."""


class BudgetExceeded(FsbcError):
    """An enumeration would exceed the configured cell budget."""


class RateTooHigh(FsbcError):
    """Requested rates produce a message set above the hard cap."""


class GridMismatch(FsbcError):
    """Operands were computed on different lambda grids."""


class EmptySupport(FsbcError):
    """A support function with no grid points cannot be used."""


class SolverStalled(FsbcError):
    """An iterative solver made no progress; carries the best iterate."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class SpecParseError(FsbcError):
    """A channel spec file is not valid JSON."""


class SpecValidationError(FsbcError):
    """A channel spec file misses or mistypes a required field."""

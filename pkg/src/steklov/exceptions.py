"""Exception types raised by the solver pipeline."""


class SteklovError(Exception):
    """Base class for all package errors."""


class ShapeError(SteklovError, ValueError):
    """Invalid boundary description."""


class NonpositiveRadius(ShapeError):
    """The polar radius is not strictly positive on the check grid."""


class OddNodeCount(SteklovError, ValueError):
    """Node counts must be even and at least 8."""


class NumericalError(SteklovError, RuntimeError):
    """Base class for failures of the numerical pipeline."""


class EigendecompositionFailure(NumericalError):
    """The dense generalized eigensolver did not converge."""


class InsufficientResolution(NumericalError):
    """Too few trustworthy eigenvalues for the requested count."""


class NormalizationViolated(NumericalError):
    """An eigenfunction trace is not unit-normalized on the boundary."""


class SeedInvalid(ShapeError):
    """Optimizer seed does not describe a valid star-shaped domain."""

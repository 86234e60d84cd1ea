"""Exception types raised across the package."""

from __future__ import annotations


class PseudoPosteriorError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(PseudoPosteriorError, ValueError):
    pass


class SingularDesign(PseudoPosteriorError, ValueError):
    """Gram matrix of the design is (numerically) singular."""


class EmptyBatch(PseudoPosteriorError, ValueError):
    pass


class EmptyInput(PseudoPosteriorError, ValueError):
    pass


class EmptyChain(PseudoPosteriorError, ValueError):
    pass


class NonPositiveBandwidth(PseudoPosteriorError, ValueError):
    pass


class NonPositiveCovariate(PseudoPosteriorError, ValueError):
    pass


class NonFiniteH(PseudoPosteriorError, ValueError):
    pass


class NonFiniteTarget(PseudoPosteriorError, ValueError):
    pass


class LengthMismatch(PseudoPosteriorError, ValueError):
    pass


class ZeroNormalizer(PseudoPosteriorError, ArithmeticError):
    pass


class CouplingViolated(PseudoPosteriorError, ValueError):
    """m * tau**2 fell below the coupling constant K."""


class ScheduleViolation(PseudoPosteriorError, ValueError):
    pass


class DatasetFormatError(PseudoPosteriorError, ValueError):
    """Malformed dataset or config file; message names the offending row."""

"""Exception hierarchy shared by every module."""


class ThetaToolError(Exception):
    """Base class for all errors raised by thetatool."""


class DimensionError(ThetaToolError, ValueError):
    """Operands carry inconsistent dimensions."""


class NotSymplecticError(ThetaToolError, ValueError):
    """A matrix violates ``g J g^T = J`` beyond tolerance."""


class NotPositiveDefiniteError(ThetaToolError, ValueError):
    """A symmetric matrix failed the pivot test of the UVU^T factorization."""


class NotPrimitiveError(ThetaToolError, ValueError):
    """An integer vector has a common divisor greater than one."""


class BudgetExceededError(ThetaToolError, RuntimeError):
    """A lattice or enumeration budget was exceeded."""


class HypothesisNotMetError(ThetaToolError, ValueError):
    """Input does not satisfy the cusp condition required for a parabolic reduction."""


class ConfigError(ThetaToolError, ValueError):
    """Invalid configuration value."""

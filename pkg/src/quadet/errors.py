"""Exception types shared across the package."""


class QuadetError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(QuadetError, ValueError):
    """An argument violates its documented domain."""


class CovarianceError(QuadetError, ValueError):
    """A covariance matrix fails a structural requirement."""


class SingularityError(QuadetError, ValueError):
    """A matrix or spectrum is singular beyond the configured tolerance."""


class DimensionError(QuadetError, ValueError):
    """Array shapes do not match."""


class GeometryError(QuadetError, ArithmeticError):
    """The requested likelihood intersection does not exist."""


class DegenerateConfigurationError(QuadetError, RuntimeError):
    """A derived configuration (thresholds, ratios) is degenerate."""


class IdentifiabilityError(QuadetError, ValueError):
    """The hypothesis pair or constellation is not uniquely identifiable."""

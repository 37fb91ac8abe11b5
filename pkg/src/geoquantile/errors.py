"""Exception types raised across the package."""


class GeoQuantileError(Exception):
    """Base class for package errors."""


class FormatError(GeoQuantileError, ValueError):
    """Malformed input file (ragged rows, bad header)."""


class EmptyError(GeoQuantileError, ValueError):
    """Input holds no atoms."""


class UnsupportedNorm(GeoQuantileError, ValueError):
    """Operation is only defined for the Euclidean norm."""


class InvalidDirection(GeoQuantileError, ValueError):
    """Quantile direction does not satisfy ||ell|| < 1."""


class DomainError(GeoQuantileError, ValueError):
    """Argument outside the domain of a formula (e.g. a zero base point)."""


class DegenerateError(GeoQuantileError, ArithmeticError):
    """Every atom coincides with the evaluation point."""


class SingularHessian(GeoQuantileError, ArithmeticError):
    """Curvature matrix is not invertible (measure close to a line)."""


class ConfigError(GeoQuantileError, ValueError):
    """Invalid distribution or experiment configuration."""

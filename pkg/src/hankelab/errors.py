"""Exception types shared across the package."""


class HankelabError(Exception):
    """Base class for all package errors."""


class ConfigError(HankelabError, ValueError):
    """Invalid or out-of-range experiment configuration."""


class GeometryError(HankelabError, ValueError):
    """A domain violates a geometric hypothesis (disconnected lens, off-boundary center, ...)."""


class NumericalError(HankelabError, ArithmeticError):
    """A numerical stage failed a consistency check."""

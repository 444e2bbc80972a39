"""Exception and warning types raised across the package."""


class ReltoaError(Exception):
    """Base class for all package errors."""


class NonConvergence(ReltoaError):
    pass


class BracketInvalid(ReltoaError):
    pass


class NoSignChange(ReltoaError):
    pass


class SupportNotPositive(ReltoaError, ValueError):
    pass


class DomainError(ReltoaError, ValueError):
    pass


class GridTooCoarse(ReltoaError):
    pass


class FourierGridError(ReltoaError):
    pass


class ZeroMass(ReltoaError):
    pass


class ConfigError(ReltoaError, ValueError):
    """Malformed or inconsistent experiment definition."""


class NegativeDensity(UserWarning):
    pass


class RegimeWarning(UserWarning):
    pass

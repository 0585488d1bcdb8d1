"""Exception hierarchy shared by all modules."""


class FinslerError(Exception):
    """Base class for every error raised by the package."""


class DomainError(FinslerError, ValueError):
    """A field was evaluated outside its domain (e.g. u = 0, log of a negative)."""


class ProfileDomainError(DomainError):
    """A radial profile was evaluated at t <= 0."""


class NotPositiveDefinite(FinslerError):
    """The fundamental tensor failed the Cholesky test."""


class SingularMetric(FinslerError):
    """A metric matrix could not be inverted."""


class DegenerateMetric(FinslerError):
    """An F-natural metric is degenerate at the requested point."""


class SingularSystem(FinslerError):
    """A linear system is too badly conditioned to solve reliably."""


class NotKKType(FinslerError):
    """A Kaluza-Klein type metric (a2 = b2 = 0) was required."""


class ParseError(FinslerError):
    """An expression or configuration file could not be parsed."""


class ValidationError(FinslerError):
    """A configuration value is invalid; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str = ""):
        self.key = key
        super().__init__(f"{key}: {message}" if message else key)

"""Exception hierarchy.

Everything raised for a numerically invalid input derives from
:class:`DomainError`; the CLI maps that family to exit code 3.
"""


class SeedbankError(Exception):
    """Base class for all package errors."""


class DomainError(SeedbankError, ValueError):
    """Input outside the mathematical domain of an operation."""


class InvalidParameter(DomainError):
    pass


class InvalidModel(DomainError):
    pass


class NotRankOne(DomainError):
    pass


class NotStochasticShape(DomainError):
    pass


class ShapeMismatch(DomainError):
    pass


class NonPositiveTrace(DomainError):
    pass


class SchemePreconditionFailed(DomainError):
    pass


class NonErgodicChain(DomainError):
    """A finite Markov chain lacks a unique aperiodic recurrent class."""


class ReducibleChain(NonErgodicChain):
    pass


class PeriodicChain(NonErgodicChain):
    pass


class NoValidSample(DomainError):
    pass


class ZeroVector(DomainError):
    pass


class KTooLarge(DomainError):
    pass


class UnfairConfiguration(DomainError):
    pass


class ConfigError(SeedbankError):
    """Malformed or out-of-range run configuration."""

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if path else message)

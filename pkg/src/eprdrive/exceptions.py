"""Exception types shared across the package."""


class EprdriveError(Exception):
    """Base class for all package errors."""


class InvalidStateError(EprdriveError):
    """A covariance matrix violates a physical-state invariant."""


class ConfigurationError(EprdriveError):
    """A run configuration or discretization parameter is unusable."""


class PropagationError(EprdriveError):
    """An invariant was breached during time evolution.

    Carries the time of the breach in ``time`` when known.
    """

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class UsageError(EprdriveError):
    """An operation was called without the data it requires."""


class ParseError(EprdriveError):
    """An input file could not be parsed; the message carries the location."""

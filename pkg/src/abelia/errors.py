"""Error hierarchy shared by every module."""


class AbeliaError(Exception):
    """Base class for all library errors."""


class ArgumentError(AbeliaError, ValueError):
    """An argument violates an operation's precondition."""


class PreconditionError(ArgumentError):
    """A structural precondition on the input distribution does not hold."""


class DomainError(AbeliaError, ValueError):
    """A mathematically infeasible request (e.g. a negative mixture part)."""


class ResourceError(AbeliaError, RuntimeError):
    """An enumeration or materialization budget would be exceeded."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class SearchFailure(AbeliaError, RuntimeError):
    """A bounded search terminated without finding a witness."""


class FileError(AbeliaError, OSError):
    """A referenced input file is missing or unreadable."""


class ParseError(AbeliaError, ValueError):
    """An input document or config could not be parsed."""


class InvariantViolation(AbeliaError, AssertionError):
    """An asserted runtime invariant failed."""

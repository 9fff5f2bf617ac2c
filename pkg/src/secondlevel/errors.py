class SecondLevelError(Exception):
    """Base class for toolkit errors."""


class InvalidParameter(SecondLevelError, ValueError):
    """A parameter is outside the range an operation accepts."""


class MissingReference(SecondLevelError):
    """A second-level mode needs a reference sample or distribution that is absent."""

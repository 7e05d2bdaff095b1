"""Exception hierarchy.

Everything derives from ``ValueError`` so callers that only care about bad
input can catch the builtin.
"""


class FocalZoneError(ValueError):
    """Base class for all package errors."""


class ValidationError(FocalZoneError):
    """An argument or configuration violates a documented precondition."""


class FormatError(FocalZoneError):
    """A file does not follow the expected layout (ragged rows, empty file)."""


class ParseError(FocalZoneError):
    """A cell could not be parsed as a number."""


class StageError(FocalZoneError):
    """Failure inside a pipeline stage; message is prefixed with the stage name."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")

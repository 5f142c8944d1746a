"""Exception types shared across the package."""


class HoseqError(Exception):
    """Base class for all package-specific errors."""


class InvalidArea(HoseqError):
    """Service area has non-positive width or height."""


class EmptyDeployment(HoseqError):
    """A deployment needs at least one base station."""


class VocabularyError(HoseqError):
    """A cell or beam ID falls outside the task vocabulary {1..L}."""


class SplitError(HoseqError):
    """Too few windows to partition into train and validation sets."""


class ParseError(HoseqError):
    """Malformed input file; carries the offending line number when known."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class ShapeError(HoseqError):
    """Array dimensions do not match the model."""


class CacheError(HoseqError):
    """Backward pass invoked with a cache built by a different forward call."""


class EmptyDatasetError(HoseqError):
    """Operation requires a non-empty dataset."""


class TaskMismatchError(HoseqError):
    """Model, dataset, or trace file disagree on the prediction task."""


class UsageError(HoseqError):
    """Bad command-line invocation or configuration file."""

"""Exception types shared across the toolkit."""


class SkelAnonError(Exception):
    """Base class for all toolkit errors."""


class MalformedFile(SkelAnonError):
    """Raw skeleton file violates the container format.

    Carries the 1-based line number where parsing failed.
    """

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class EmptyPartition(SkelAnonError):
    """A dataset split left train or val empty."""


class BadConfig(SkelAnonError):
    """A configuration value is out of its legal range."""


class ShapeMismatch(SkelAnonError):
    """Tensor shape incompatible with the model or operation."""


class LabelOutOfRange(SkelAnonError):
    """A categorical label index exceeds the class count."""


class VersionMismatch(SkelAnonError):
    """Parameter file written by an unknown (newer) format version."""


class CorruptFile(SkelAnonError):
    """Parameter file is truncated or fails structural validation."""


class NonFiniteLoss(SkelAnonError):
    """Training diverged; carries the offending step index."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class EmptyInput(SkelAnonError):
    """An operation requiring a nonempty collection got an empty one."""


class IndexOutOfRange(SkelAnonError):
    """A frame or sample index is outside its valid range."""


class IoError(SkelAnonError):
    """Filesystem-level failure while writing an artifact."""

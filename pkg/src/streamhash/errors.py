"""Exception hierarchy shared across the package."""


class StreamHashError(Exception):
    """Base class for every error raised by streamhash."""


class AdmissibilityViolated(StreamHashError, ValueError):
    """Target diagonal value cannot be reached by a single plane rotation."""


class DegeneratePlane(StreamHashError, ValueError):
    """The 2x2 block is a multiple of the identity and differs from the target."""


class IndexOutOfRange(StreamHashError, IndexError):
    pass


class NotSymmetric(StreamHashError, ValueError):
    pass


class NonFiniteEntry(StreamHashError, ValueError):
    pass


class NonFiniteInput(StreamHashError, ValueError):
    pass


class BadDimensions(StreamHashError, ValueError):
    pass


class DimensionMismatch(StreamHashError, ValueError):
    pass


class EmptyEncoder(StreamHashError, RuntimeError):
    """Query encoding requested before the encoder has seen any sample."""


class LengthMismatch(StreamHashError, ValueError):
    pass


class BadSignValue(StreamHashError, ValueError):
    pass


class TooFewPoints(StreamHashError, ValueError):
    pass


class SizeMismatch(StreamHashError, ValueError):
    pass


class TruncatedRecord(StreamHashError, ValueError):
    pass


class InconsistentDimension(StreamHashError, ValueError):
    pass


class NegativeDimension(StreamHashError, ValueError):
    pass


class BadSpec(StreamHashError, ValueError):
    pass


class CodeFileError(StreamHashError, ValueError):
    """Malformed or unsupported binary code file."""

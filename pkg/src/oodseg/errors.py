"""Exception hierarchy shared across the toolkit.

Two branches matter for the CLI: DataError maps to exit code 2 (broken or
inconsistent inputs), DegeneracyError maps to exit code 3 (inputs that are
well-formed but numerically unusable, e.g. zero-variance scores).
"""


class OodsegError(Exception):
    """Base class for all toolkit errors."""


class DataError(OodsegError):
    """Malformed, inconsistent, or missing input data."""


class MalformedHeaderError(DataError):
    """Array file header is not a valid little-endian C-order NPY v1.0 header."""


class UnsupportedDtypeError(DataError):
    """Array dtype outside the supported set {<f4, <f8, |u1, <u2, <i4}."""


class TruncatedPayloadError(DataError):
    """Array payload is shorter than the header-declared element count."""


class ManifestError(DataError):
    """Dataset manifest violates its schema or invariants."""


class ShapeMismatchError(DataError):
    """Arrays of one sample (or of one operation) disagree in shape."""


class OrientationError(DataError):
    """A score map arrived with the wrong higher-means-OOD/ID orientation."""


class EmptyPoolError(DataError):
    """An operation that needs pixels received none."""


class DegeneracyError(OodsegError):
    """Numerically degenerate statistics (signals a broken feature/logit dump)."""


class DegenerateVarianceError(DegeneracyError):
    """Feature buffer carries no variance (all rows identical)."""


class DegenerateScoreError(DegeneracyError):
    """Raw score distribution has (near-)zero spread on the fitting split."""

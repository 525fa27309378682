"""Exception types shared across the package."""


class IKDError(Exception):
    """Base class for every error raised by this package."""


class DataError(IKDError, ValueError):
    """Invalid or degenerate input: bad shapes, out-of-domain values, malformed CSV."""


class NumericalError(IKDError, RuntimeError):
    """A numerical routine failed to converge or produced no usable result."""


class DisconnectedGraphError(DataError):
    """The thresholded covariance graph has more than one connected component."""


class MergeError(DataError):
    """Blockwise merging cannot proceed (a block shares too few points)."""

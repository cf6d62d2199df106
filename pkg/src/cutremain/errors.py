"""Exception taxonomy shared by every module.

The kinds below are part of the public contract: CLI error lines and the
buffer-kernel endpoint report the class name as ``kind``, so renaming one
is a breaking change.
"""


class CutremainError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(CutremainError, ValueError):
    """A scalar argument violates its precondition (non-positive factor, bad gamma, ...)."""


class EmptyRegionError(CutremainError, ValueError):
    """A box clipped against the image bounds covers no pixel."""


class EmptyMaskError(CutremainError, ValueError):
    """A mask that must select at least one pixel selects none."""


class ShapeMismatchError(CutremainError, ValueError):
    """Two operands that must share dimensions do not."""


class PlacementError(CutremainError, RuntimeError):
    """No valid random placement was found within the attempt budget."""


class UndefinedMetricError(CutremainError, ValueError):
    """The requested metric is undefined for the given inputs (single-class labels, zero-norm vector)."""


class ParseError(CutremainError, ValueError):
    """An input document is malformed; the message names the offending record."""


class ManifestError(CutremainError, ValueError):
    """A dataset or batch manifest violates one of its invariants."""

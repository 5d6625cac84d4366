"""Exception classes shared across the toolkit.

Every error raised by library code derives from VsrError so CLI entry
points can map failures to exit codes uniformly.
"""


class VsrError(Exception):
    pass


class UnreadableSource(VsrError):
    """Input is not a decodable video, or an empty/unreadable frame directory."""


class InconsistentDimensions(VsrError):
    """Frames within one source differ in size."""


class DegenerateOutput(VsrError):
    """A resize would produce a zero-sized dimension."""


class BadRatios(VsrError):
    """Split ratios are negative or do not sum to 1."""


class EmptyCorpus(VsrError):
    """No clips available where at least one is required."""


class BadIndex(VsrError):
    """Frame/row index outside the valid range."""


class DimensionMismatch(VsrError):
    """Two arrays that must share spatial dimensions do not."""


class ConfigMismatch(VsrError):
    """Input structure is incompatible with the configured model."""


class IdenticalInputs(VsrError):
    """PSNR of two identical images; callers treat this as a perfect match."""


class TooSmall(VsrError):
    """Image smaller than the metric window."""


class EmptySequence(VsrError):
    """Sequence average of an empty list."""


class NonFiniteLoss(VsrError):
    """A training loss became NaN/Inf; carries the offending batch identity."""


class VersionMismatch(VsrError):
    """Checkpoint format_version is not supported."""


class ShapeMismatch(VsrError):
    """Checkpoint parameter shapes do not fit the configured model."""

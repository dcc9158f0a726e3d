"""Exception hierarchy shared by the codec, the file format and the harness."""


class MojetteError(Exception):
    """Base class for every error raised by this package."""


class InsufficientProjections(MojetteError):
    """No reconstructible bin is left although pixels remain unknown."""


class InconsistentProjections(MojetteError):
    """The reconstructed grid does not re-encode to the supplied bins."""


class ScheduleMismatch(MojetteError):
    """Projections handed to a scheduled decode do not fit the schedule."""


class NotEnoughProjections(MojetteError):
    """Fewer than k distinct projections were supplied for decoding."""


class BlockTooLarge(MojetteError):
    """The block would need more than 2**32 - 1 columns."""


class TooManySubsets(MojetteError):
    """Subset enumeration exceeds the configured cap."""


class FormatError(MojetteError):
    """A projection file is truncated or structurally malformed."""

    def __init__(self, message, path=None):
        super().__init__(message if path is None else f"{path}: {message}")
        self.path = path


class CrcMismatch(FormatError):
    """A header or payload checksum does not match its content."""


class HeaderMismatch(MojetteError):
    """Projection files passed together do not describe the same block."""


class TimerResolutionTooCoarse(MojetteError):
    """The clock cannot resolve 1% of the measured interval."""

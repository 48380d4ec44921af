"""Exception types raised by the analysis modules.

Every error derives from :class:`AcaError` so callers (the CLI in particular)
can catch library failures in one place. Input-validation errors also derive
from ``ValueError``.
"""


class AcaError(Exception):
    """Base class for all library errors."""


# signal-io
class MalformedContainer(AcaError, ValueError):
    pass


class UnsupportedFormat(AcaError, ValueError):
    pass


class EmptyAudio(AcaError, ValueError):
    pass


class IoFailure(AcaError, OSError):
    pass


class AliasedFrequency(AcaError, ValueError):
    pass


# spectral-core
class NonPowerOfTwoLength(AcaError, ValueError):
    pass


class NonPositiveFrequency(AcaError, ValueError):
    pass


class BinOutOfRange(AcaError, ValueError):
    pass


# features / pitch
class InvalidBandCount(AcaError, ValueError):
    pass


class BlockTooShort(AcaError, ValueError):
    pass


class InvalidOrder(AcaError, ValueError):
    pass


# harmony / ml / sequence
class DimensionMismatch(AcaError, ValueError):
    pass


class EmptyInput(AcaError, ValueError):
    pass


class AudioTooShort(AcaError, ValueError):
    pass


class LengthMismatch(AcaError, ValueError):
    pass


class EmptyTrainingSet(AcaError, ValueError):
    pass


class KTooLarge(AcaError, ValueError):
    pass


class DegenerateData(AcaError, ValueError):
    pass


class TooFewObservations(AcaError, ValueError):
    pass


class NegativeInput(AcaError, ValueError):
    pass


class RankTooLarge(AcaError, ValueError):
    pass


class EmptyMatrix(AcaError, ValueError):
    pass


class NegativeCost(AcaError, ValueError):
    pass


class AllPathsImpossible(AcaError):
    """No state sequence has non-zero probability under the model."""

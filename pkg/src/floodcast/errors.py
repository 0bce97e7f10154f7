"""Exception hierarchy for the toolkit.

Every failure the pipeline can signal deliberately derives from
FloodcastError, so the CLI can map "our" errors to exit code 1 and leave
genuine bugs to traceback.
"""


class FloodcastError(Exception):
    """Base class for all toolkit errors."""


# --- ingest ---------------------------------------------------------------

class IngestError(FloodcastError):
    pass


class MissingHeaderError(IngestError):
    pass


class NonMonotonicTimestampError(IngestError):
    pass


class UnparseableRowError(IngestError):
    pass


class ThresholdOrderViolationError(IngestError):
    pass


class NonPositiveMinorError(IngestError):
    pass


class HorizonExceededError(IngestError):
    pass


class EmptyJoinError(IngestError):
    pass


# --- hydrology ------------------------------------------------------------

class UnknownGaugeError(FloodcastError):
    pass


class NonPositiveTtpError(FloodcastError):
    pass


# --- features -------------------------------------------------------------

class InsufficientCoverageError(FloodcastError):
    pass


class UnfittedNormalizerError(FloodcastError):
    pass


class NoPriorMonthError(FloodcastError):
    pass


class TooFewGaugesError(FloodcastError):
    pass


# --- models ---------------------------------------------------------------

class EmptyDatasetError(FloodcastError):
    pass


class SingleClassLabelsError(FloodcastError):
    pass


class NonFiniteLossError(FloodcastError):
    pass


class DimensionMismatchError(FloodcastError):
    pass


class EmptyGridError(FloodcastError):
    pass


# --- evaluation -----------------------------------------------------------

class NoPositivesError(FloodcastError):
    pass


class LengthMismatchError(FloodcastError):
    pass


class NoOverlapError(FloodcastError):
    pass


# --- synth ----------------------------------------------------------------

class InfeasibleRateError(FloodcastError):
    pass

"""Exception hierarchy.

Class names double as the error identifiers reported by the command line,
so they intentionally omit the usual ``Error`` suffix.
"""


class MotorSigError(Exception):
    """Base class for all package errors."""


class ValidationError(MotorSigError, ValueError):
    """Bad arguments or inputs that violate an operation's preconditions."""


class ComputationError(MotorSigError):
    """An operation ran but could not produce a result."""


class FormatError(MotorSigError):
    """Malformed or unreadable input file."""


# bdf_io
class BadMagic(FormatError):
    pass


class TruncatedPayload(FormatError):
    pass


class InvalidScaling(FormatError):
    pass


class InvalidHeader(FormatError):
    pass


class ValueOutOfDigitalRange(ValidationError):
    pass


class ChannelIndexOutOfRange(ValidationError):
    pass


# precondition
class EmptySignal(ValidationError):
    pass


class WindowTooLarge(ValidationError):
    pass


class SignalTooShort(ValidationError):
    pass


class OddOrder(ValidationError):
    pass


class BandOutOfNyquist(ValidationError):
    pass


# erp
class TrialTooShort(ValidationError):
    pass


class EmptyTrialSet(ValidationError):
    pass


class ReferenceOutsideSignal(ValidationError):
    pass


class ZeroReference(ComputationError):
    pass


class UnknownMethod(ValidationError):
    pass


# connectivity
class LengthMismatch(ValidationError):
    pass


class EmptyPhase(ValidationError):
    pass


class WindowOutsideTrials(ValidationError):
    pass


class BadPair(ValidationError):
    pass


class WindowTooShortForSegments(ValidationError):
    pass


# emg
class NoOnsetDetected(ComputationError):
    pass


class SamplingTooLow(ValidationError):
    pass


# synth
class InvalidSpec(ValidationError):
    pass

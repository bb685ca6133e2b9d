"""Exception hierarchy shared across the package."""


class SpatSimError(Exception):
    """Base class for all errors raised by this package."""


# --- envelope parsing ---------------------------------------------------

class MalformedRecord(SpatSimError):
    """Record line is not a structurally valid RSU envelope."""


class MissingPayload(SpatSimError):
    """Envelope carries no usable payload."""


class BadHex(SpatSimError):
    """Payload hex string is odd-length, non-hex, or too short."""


class UnsupportedEncoding(SpatSimError):
    """Envelope payload encoding label is not UPER."""


class PayloadTooShort(SpatSimError):
    """Payload is too short to carry a message-frame header."""


# --- codec --------------------------------------------------------------

class CodecError(SpatSimError):
    """Base class for bitstream encode/decode failures."""


class WrongMessageId(CodecError):
    """Frame identifier does not name a SPaT message."""

    def __init__(self, msg_id: int):
        super().__init__(f"frame id {msg_id} is not SPaT (19)")
        self.msg_id = msg_id


class TruncatedBitstream(CodecError):
    """A read ran past the end of the buffer."""


class ConstraintViolation(CodecError):
    """A field value falls outside its declared range."""


class UnsupportedExtension(CodecError):
    """Extension or optional content present that this subset cannot skip safely."""

    def __init__(self, bit_offset: int, context: str):
        super().__init__(f"unsupported content in {context} at bit {bit_offset}")
        self.bit_offset = bit_offset
        self.context = context


# --- snapshot processing --------------------------------------------------

class SpecialTimeMark(SpatSimError):
    """TimeMark above 36000 carries a reserved meaning, not a clock value."""

    def __init__(self, value: int):
        super().__init__(f"time mark {value} is a reserved code, not a time")
        self.value = value


class MissingTimestamp(SpatSimError):
    """Message lacks the minute/millisecond stamps needed for remaining time."""


# --- phase table construction --------------------------------------------

class PhaseError(SpatSimError):
    """Base class for phase-table construction failures."""


class UnmappedGroup(PhaseError):
    """A signal group in the snapshot has no approach assignment."""

    def __init__(self, group: int):
        super().__init__(f"signal group {group} has no approach mapping")
        self.group = group


class EmptyStream(PhaseError):
    """Fewer than two snapshots; no phase durations can be measured."""


class NonMonotonicTime(PhaseError):
    """Snapshot timestamps are not strictly increasing."""


class GapTooLarge(PhaseError):
    """Data dropout between snapshots exceeds the configured maximum."""


class SamplePeriodTooCoarse(PhaseError):
    """Sampling period exceeds the shortest phase duration."""


class PhaseConflict(PhaseError):
    """Both approaches green in one phase (protected conflict rule)."""


# --- simulation -----------------------------------------------------------

class ConfigInvalid(SpatSimError):
    """Simulation configuration violates a declared constraint."""


class NoLights(SpatSimError):
    """Centroid requested for an empty set of light positions."""


# --- scenario output -------------------------------------------------------

class IoFailure(SpatSimError):
    """Filesystem write or read failed."""


class VehicleOutsideGrid(SpatSimError):
    """Vehicle position falls outside the occupancy grid (strict mode only)."""

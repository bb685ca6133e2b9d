"""SAE J2735 SPaT subset codec over unaligned PER (UPER).

Grammar subset (field order and option bitmaps follow the standard's
declaration order):

    MessageFrame        ::= ext, messageId (0..32767), value (open type)
    SPAT                ::= ext, [timeStamp (0..527040)], [name], intersections (1..32), [regional]
    IntersectionState   ::= ext, [name], id{[region], id}, revision (0..127),
                            status (16 bits), [moy], [timeStamp=DSecond],
                            [enabledLanes], states (1..255), [maneuverAssistList], [regional]
    MovementState       ::= ext, [movementName], signalGroup (0..255),
                            state-time-speed (1..16), [maneuverAssistList], [regional]
    MovementEvent       ::= ext, eventState (10-value enum, 4 bits),
                            [timing], [speeds], [regional]
    TimeChangeDetails   ::= [startTime], minEndTime (0..36011), [maxEndTime],
                            [likelyTime], [confidence (0..15)], [nextTime]

Extension bits and optional content outside the subset raise
UnsupportedExtension rather than guessing skip lengths. Decoding is a pure
function of the payload bytes; distinct payloads decode in parallel safely.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass

from .bitio import BitReader, BitWriter, read_constrained_int, write_constrained_int
from .errors import ConstraintViolation, UnsupportedExtension, WrongMessageId

SPAT_MESSAGE_ID = 19
MAP_MESSAGE_ID = 18
BSM_MESSAGE_ID = 20

MOY_MAX = 527040          # minutes per year
DSECOND_MAX = 65535       # milliseconds within the current minute
TIME_MARK_MAX = 36011     # tenths of a second within the hour; >36000 reserved
TIME_MARK_SPECIAL = 36000
NAME_MAX_LEN = 63


class MovementPhase(enum.IntEnum):
    """Signal indication enumeration, wire index = enum value."""

    UNAVAILABLE = 0
    DARK = 1
    STOP_THEN_PROCEED = 2
    STOP_AND_REMAIN = 3
    PRE_MOVEMENT = 4
    PERMISSIVE_MOVEMENT_ALLOWED = 5
    PROTECTED_MOVEMENT_ALLOWED = 6
    PERMISSIVE_CLEARANCE = 7
    PROTECTED_CLEARANCE = 8
    CAUTION_CONFLICTING_TRAFFIC = 9

    @property
    def label(self) -> str:
        return _PHASE_LABELS[self]

    @classmethod
    def from_label(cls, label: str) -> "MovementPhase":
        try:
            return _PHASE_BY_LABEL[label]
        except KeyError:
            raise ValueError(f"unknown event state label {label!r}") from None


_PHASE_LABELS = {
    MovementPhase.UNAVAILABLE: "unavailable",
    MovementPhase.DARK: "dark",
    MovementPhase.STOP_THEN_PROCEED: "stop-Then-Proceed",
    MovementPhase.STOP_AND_REMAIN: "stop-And-Remain",
    MovementPhase.PRE_MOVEMENT: "pre-Movement",
    MovementPhase.PERMISSIVE_MOVEMENT_ALLOWED: "permissive-Movement-Allowed",
    MovementPhase.PROTECTED_MOVEMENT_ALLOWED: "protected-Movement-Allowed",
    MovementPhase.PERMISSIVE_CLEARANCE: "permissive-clearance",
    MovementPhase.PROTECTED_CLEARANCE: "protected-clearance",
    MovementPhase.CAUTION_CONFLICTING_TRAFFIC: "caution-Conflicting-Traffic",
}
_PHASE_BY_LABEL = {v: k for k, v in _PHASE_LABELS.items()}

# Named bits of the 16-bit intersection status field, leading bit first.
STATUS_FLAG_NAMES = (
    "manualControlIsEnabled",
    "stopTimeIsActivated",
    "failureFlash",
    "preemptIsActive",
    "signalPriorityIsActive",
    "fixedTimeOperation",
    "trafficDependentOperation",
    "standbyOperation",
    "failureMode",
    "off",
    "recentMAPmessageUpdate",
    "recentChangeInMAPassignedLanesIDsUsed",
    "noValidMAPisAvailableAtThisTime",
    "noValidSPATisAvailableAtThisTime",
)


def status_flags(status: int) -> tuple[str, ...]:
    """Names of the set bits in a raw 16-bit status value."""
    return tuple(
        name for i, name in enumerate(STATUS_FLAG_NAMES) if status >> (15 - i) & 1
    )


def is_special_time_mark(value: int) -> bool:
    return value > TIME_MARK_SPECIAL


@dataclass
class TimeChangeDetails:
    min_end_time: int
    start_time: int | None = None
    max_end_time: int | None = None
    likely_time: int | None = None
    confidence: int | None = None
    next_time: int | None = None


@dataclass
class MovementEvent:
    event_state: MovementPhase
    timing: TimeChangeDetails | None = None

    @property
    def min_end_time(self) -> int | None:
        return self.timing.min_end_time if self.timing else None

    @property
    def has_special_timing(self) -> bool:
        return self.timing is not None and is_special_time_mark(self.timing.min_end_time)


@dataclass
class MovementState:
    signal_group: int
    events: list[MovementEvent]
    movement_name: str | None = None


@dataclass
class IntersectionState:
    id: int
    revision: int
    status: int
    movements: list[MovementState]
    region: int | None = None
    name: str | None = None
    moy: int | None = None
    dsecond: int | None = None


@dataclass
class SpatMessage:
    intersections: list[IntersectionState]
    moy: int | None = None
    name: str | None = None
    message_id: int = SPAT_MESSAGE_ID


# --------------------------------------------------------------------------
# decoding

def _expect_no_extension(r: BitReader, context: str) -> None:
    if r.read_bit():
        raise UnsupportedExtension(r.pos - 1, context)


def _reject_option(present: int, bit_pos: int, context: str) -> None:
    if present:
        raise UnsupportedExtension(bit_pos, context)


def _read_ia5(r: BitReader) -> str:
    length = read_constrained_int(r, 1, NAME_MAX_LEN)
    return "".join(chr(r.read_bits(7)) for _ in range(length))


def _read_open_type(r: BitReader) -> bytes:
    form = r.read_bit()
    if form == 0:
        length = r.read_bits(7)
    elif r.read_bit() == 0:
        length = r.read_bits(14)
    else:
        raise UnsupportedExtension(r.pos - 2, "fragmented open-type length")
    return r.read_bytes(length)


def _decode_timing(r: BitReader) -> TimeChangeDetails:
    has_start = r.read_bit()
    has_max = r.read_bit()
    has_likely = r.read_bit()
    has_conf = r.read_bit()
    has_next = r.read_bit()
    start = read_constrained_int(r, 0, TIME_MARK_MAX) if has_start else None
    min_end = read_constrained_int(r, 0, TIME_MARK_MAX)
    max_end = read_constrained_int(r, 0, TIME_MARK_MAX) if has_max else None
    likely = read_constrained_int(r, 0, TIME_MARK_MAX) if has_likely else None
    conf = read_constrained_int(r, 0, 15) if has_conf else None
    nxt = read_constrained_int(r, 0, TIME_MARK_MAX) if has_next else None
    return TimeChangeDetails(min_end, start, max_end, likely, conf, nxt)


def _decode_event(r: BitReader) -> MovementEvent:
    _expect_no_extension(r, "movement event")
    opts_pos = r.pos
    has_timing = r.read_bit()
    has_speeds = r.read_bit()
    has_regional = r.read_bit()
    _reject_option(has_speeds, opts_pos + 1, "advisory speeds")
    _reject_option(has_regional, opts_pos + 2, "movement event regional data")
    state = MovementPhase(read_constrained_int(r, 0, 9))
    timing = _decode_timing(r) if has_timing else None
    return MovementEvent(state, timing)


def _decode_movement(r: BitReader) -> MovementState:
    _expect_no_extension(r, "movement state")
    opts_pos = r.pos
    has_name = r.read_bit()
    has_assist = r.read_bit()
    has_regional = r.read_bit()
    _reject_option(has_assist, opts_pos + 1, "maneuver assist list")
    _reject_option(has_regional, opts_pos + 2, "movement regional data")
    name = _read_ia5(r) if has_name else None
    group = read_constrained_int(r, 0, 255)
    count = read_constrained_int(r, 1, 16)
    events = [_decode_event(r) for _ in range(count)]
    return MovementState(group, events, name)


def _decode_intersection(r: BitReader) -> IntersectionState:
    _expect_no_extension(r, "intersection state")
    opts_pos = r.pos
    has_name = r.read_bit()
    has_moy = r.read_bit()
    has_dsecond = r.read_bit()
    has_lanes = r.read_bit()
    has_assist = r.read_bit()
    has_regional = r.read_bit()
    _reject_option(has_lanes, opts_pos + 3, "enabled lanes")
    _reject_option(has_assist, opts_pos + 4, "maneuver assist list")
    _reject_option(has_regional, opts_pos + 5, "intersection regional data")
    name = _read_ia5(r) if has_name else None
    has_region = r.read_bit()
    region = read_constrained_int(r, 0, 65535) if has_region else None
    ident = read_constrained_int(r, 0, 65535)
    revision = read_constrained_int(r, 0, 127)
    status = r.read_bits(16)
    moy = read_constrained_int(r, 0, MOY_MAX) if has_moy else None
    dsecond = read_constrained_int(r, 0, DSECOND_MAX) if has_dsecond else None
    count = read_constrained_int(r, 1, 255)
    movements = [_decode_movement(r) for _ in range(count)]
    seen: set[int] = set()
    for mv in movements:
        if mv.signal_group in seen:
            raise ConstraintViolation(f"duplicate signal group {mv.signal_group}")
        seen.add(mv.signal_group)
    return IntersectionState(
        ident, revision, status, movements,
        region=region, name=name, moy=moy, dsecond=dsecond,
    )


def _decode_spat_body(r: BitReader) -> SpatMessage:
    _expect_no_extension(r, "signal timing body")
    opts_pos = r.pos
    has_moy = r.read_bit()
    has_name = r.read_bit()
    has_regional = r.read_bit()
    _reject_option(has_regional, opts_pos + 2, "message regional data")
    moy = read_constrained_int(r, 0, MOY_MAX) if has_moy else None
    name = _read_ia5(r) if has_name else None
    count = read_constrained_int(r, 1, 32)
    intersections = [_decode_intersection(r) for _ in range(count)]
    return SpatMessage(intersections, moy=moy, name=name)


def decode_spat(payload: bytes) -> SpatMessage:
    """Decode a complete UPER message frame carrying a SPaT payload.

    Raises WrongMessageId for any other frame type, TruncatedBitstream on
    short input, ConstraintViolation on out-of-range fields, and
    UnsupportedExtension when content outside the subset is present.
    Trailing pad bits are not validated.
    """
    r = BitReader(bytes(payload))
    frame_ext = r.read_bit()
    msg_id = read_constrained_int(r, 0, 32767)
    if msg_id != SPAT_MESSAGE_ID:
        raise WrongMessageId(msg_id)
    if frame_ext:
        raise UnsupportedExtension(0, "message frame")
    content = _read_open_type(r)
    return _decode_spat_body(BitReader(content))


# --------------------------------------------------------------------------
# encoding

def _validate_optional(value: int | None, lo: int, hi: int, what: str) -> None:
    if value is not None and not lo <= value <= hi:
        raise ConstraintViolation(f"{what} {value} outside [{lo}, {hi}]")


def _write_ia5(w: BitWriter, text: str) -> None:
    if not 1 <= len(text) <= NAME_MAX_LEN:
        raise ConstraintViolation(f"name length {len(text)} outside [1, {NAME_MAX_LEN}]")
    write_constrained_int(w, len(text), 1, NAME_MAX_LEN)
    for ch in text:
        code = ord(ch)
        if code > 127:
            raise ConstraintViolation(f"non-IA5 character {ch!r}")
        w.write_bits(code, 7)


def _write_timing(w: BitWriter, t: TimeChangeDetails) -> None:
    _validate_optional(t.start_time, 0, TIME_MARK_MAX, "startTime")
    _validate_optional(t.max_end_time, 0, TIME_MARK_MAX, "maxEndTime")
    _validate_optional(t.likely_time, 0, TIME_MARK_MAX, "likelyTime")
    _validate_optional(t.confidence, 0, 15, "confidence")
    _validate_optional(t.next_time, 0, TIME_MARK_MAX, "nextTime")
    for opt in (t.start_time, t.max_end_time, t.likely_time, t.confidence, t.next_time):
        w.write_bit(0 if opt is None else 1)
    if t.start_time is not None:
        write_constrained_int(w, t.start_time, 0, TIME_MARK_MAX)
    write_constrained_int(w, t.min_end_time, 0, TIME_MARK_MAX)
    if t.max_end_time is not None:
        write_constrained_int(w, t.max_end_time, 0, TIME_MARK_MAX)
    if t.likely_time is not None:
        write_constrained_int(w, t.likely_time, 0, TIME_MARK_MAX)
    if t.confidence is not None:
        write_constrained_int(w, t.confidence, 0, 15)
    if t.next_time is not None:
        write_constrained_int(w, t.next_time, 0, TIME_MARK_MAX)


def _write_event(w: BitWriter, ev: MovementEvent) -> None:
    w.write_bit(0)
    w.write_bit(0 if ev.timing is None else 1)
    w.write_bit(0)  # speeds absent
    w.write_bit(0)  # regional absent
    write_constrained_int(w, int(ev.event_state), 0, 9)
    if ev.timing is not None:
        _write_timing(w, ev.timing)


def _write_movement(w: BitWriter, mv: MovementState) -> None:
    w.write_bit(0)
    w.write_bit(0 if mv.movement_name is None else 1)
    w.write_bit(0)  # maneuver assist absent
    w.write_bit(0)  # regional absent
    if mv.movement_name is not None:
        _write_ia5(w, mv.movement_name)
    write_constrained_int(w, mv.signal_group, 0, 255)
    if not 1 <= len(mv.events) <= 16:
        raise ConstraintViolation(f"event count {len(mv.events)} outside [1, 16]")
    write_constrained_int(w, len(mv.events), 1, 16)
    for ev in mv.events:
        _write_event(w, ev)


def _write_intersection(w: BitWriter, inter: IntersectionState) -> None:
    w.write_bit(0)
    w.write_bit(0 if inter.name is None else 1)
    w.write_bit(0 if inter.moy is None else 1)
    w.write_bit(0 if inter.dsecond is None else 1)
    w.write_bit(0)  # enabled lanes absent
    w.write_bit(0)  # maneuver assist absent
    w.write_bit(0)  # regional absent
    if inter.name is not None:
        _write_ia5(w, inter.name)
    w.write_bit(0 if inter.region is None else 1)
    if inter.region is not None:
        write_constrained_int(w, inter.region, 0, 65535)
    write_constrained_int(w, inter.id, 0, 65535)
    write_constrained_int(w, inter.revision, 0, 127)
    if not 0 <= inter.status <= 0xFFFF:
        raise ConstraintViolation(f"status {inter.status} outside 16 bits")
    w.write_bits(inter.status, 16)
    if inter.moy is not None:
        write_constrained_int(w, inter.moy, 0, MOY_MAX)
    if inter.dsecond is not None:
        write_constrained_int(w, inter.dsecond, 0, DSECOND_MAX)
    if not 1 <= len(inter.movements) <= 255:
        raise ConstraintViolation(f"movement count {len(inter.movements)} outside [1, 255]")
    groups = [mv.signal_group for mv in inter.movements]
    if len(set(groups)) != len(groups):
        raise ConstraintViolation("duplicate signal groups in one intersection")
    write_constrained_int(w, len(inter.movements), 1, 255)
    for mv in inter.movements:
        _write_movement(w, mv)


def encode_frame(msg_id: int, content: bytes) -> bytes:
    """Wrap already-encoded content bytes in a message frame."""
    w = BitWriter()
    w.write_bit(0)
    write_constrained_int(w, msg_id, 0, 32767)
    n = len(content)
    if n < 128:
        w.write_bits(n, 8)
    elif n < 16384:
        w.write_bits(0b10, 2)
        w.write_bits(n, 14)
    else:
        raise ConstraintViolation(f"open type of {n} bytes needs fragmentation")
    w.write_bytes(content)
    return w.to_bytes()


def encode_spat(message: SpatMessage) -> bytes:
    """Encode a SpatMessage; decode_spat maps the result back to an equal value."""
    if message.message_id != SPAT_MESSAGE_ID:
        raise ConstraintViolation(f"can only encode frame id {SPAT_MESSAGE_ID}")
    if not 1 <= len(message.intersections) <= 32:
        raise ConstraintViolation(
            f"intersection count {len(message.intersections)} outside [1, 32]"
        )
    _validate_optional(message.moy, 0, MOY_MAX, "timeStamp")
    body = BitWriter()
    body.write_bit(0)
    body.write_bit(0 if message.moy is None else 1)
    body.write_bit(0 if message.name is None else 1)
    body.write_bit(0)  # regional absent
    if message.moy is not None:
        write_constrained_int(body, message.moy, 0, MOY_MAX)
    if message.name is not None:
        _write_ia5(body, message.name)
    write_constrained_int(body, len(message.intersections), 1, 32)
    for inter in message.intersections:
        _write_intersection(body, inter)
    return encode_frame(SPAT_MESSAGE_ID, body.to_bytes())


# --------------------------------------------------------------------------
# decoded-text serialization (the reference key/value dump shape)

def to_decoded_dict(message: SpatMessage) -> dict:
    value: dict = {}
    if message.moy is not None:
        value["timeStamp"] = message.moy
    if message.name is not None:
        value["name"] = message.name
    value["intersections"] = [_intersection_dict(i) for i in message.intersections]
    return {"messageId": message.message_id, "value": value}


def _intersection_dict(inter: IntersectionState) -> dict:
    d: dict = {}
    if inter.dsecond is not None:
        d["timeStamp"] = inter.dsecond
    if inter.name is not None:
        d["name"] = inter.name
    ident: dict = {}
    if inter.region is not None:
        ident["region"] = inter.region
    ident["id"] = inter.id
    d["id"] = ident
    d["revision"] = inter.revision
    d["status"] = f"{inter.status:04x}"
    if inter.moy is not None:
        d["moy"] = inter.moy
    d["states"] = [_movement_dict(m) for m in inter.movements]
    return d


def _movement_dict(mv: MovementState) -> dict:
    d: dict = {"state-time-speed": [_event_dict(e) for e in mv.events]}
    if mv.movement_name is not None:
        d["movementName"] = mv.movement_name
    d["signalGroup"] = mv.signal_group
    return d


def _event_dict(ev: MovementEvent) -> dict:
    d: dict = {"eventState": ev.event_state.label}
    if ev.timing is not None:
        t: dict = {}
        if ev.timing.start_time is not None:
            t["startTime"] = ev.timing.start_time
        t["minEndTime"] = ev.timing.min_end_time
        if ev.timing.max_end_time is not None:
            t["maxEndTime"] = ev.timing.max_end_time
        if ev.timing.likely_time is not None:
            t["likelyTime"] = ev.timing.likely_time
        if ev.timing.confidence is not None:
            t["confidence"] = ev.timing.confidence
        if ev.timing.next_time is not None:
            t["nextTime"] = ev.timing.next_time
        d["timing"] = t
    return d


def to_decoded_json(message: SpatMessage) -> str:
    return json.dumps(to_decoded_dict(message), separators=(",", ":"))


def from_decoded_dict(d: dict) -> SpatMessage:
    """Rebuild a SpatMessage from the decoded-text dump shape."""
    value = d["value"]
    intersections = []
    for idict in value["intersections"]:
        ident = idict["id"]
        status = idict.get("status", "0000")
        movements = []
        for mdict in idict["states"]:
            events = []
            for edict in mdict["state-time-speed"]:
                timing = None
                if "timing" in edict:
                    t = edict["timing"]
                    timing = TimeChangeDetails(
                        min_end_time=t["minEndTime"],
                        start_time=t.get("startTime"),
                        max_end_time=t.get("maxEndTime"),
                        likely_time=t.get("likelyTime"),
                        confidence=t.get("confidence"),
                        next_time=t.get("nextTime"),
                    )
                events.append(
                    MovementEvent(MovementPhase.from_label(edict["eventState"]), timing)
                )
            movements.append(
                MovementState(mdict["signalGroup"], events, mdict.get("movementName"))
            )
        intersections.append(
            IntersectionState(
                id=ident["id"],
                revision=idict["revision"],
                status=int(status, 16) if isinstance(status, str) else int(status),
                movements=movements,
                region=ident.get("region"),
                name=idict.get("name"),
                moy=idict.get("moy"),
                dsecond=idict.get("timeStamp"),
            )
        )
    return SpatMessage(
        intersections,
        moy=value.get("timeStamp"),
        name=value.get("name"),
        message_id=d["messageId"],
    )

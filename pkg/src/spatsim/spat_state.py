"""Human-interpretable signal snapshots: light color and remaining seconds.

Converts a decoded SPaT message into one (state, remaining) entry per
signal group. Remaining time is reconstructed from the hour-relative
minEndTime against the message's minute-of-year and millisecond stamps.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple

from .codec import MovementPhase, SpatMessage, TIME_MARK_SPECIAL
from .errors import MissingTimestamp, SpecialTimeMark


class LightColor(enum.Enum):
    GREEN = "Green"
    YELLOW = "Yellow"
    RED = "Red"
    UNKNOWN = "Unknown"


_COLOR_BY_PHASE = {
    MovementPhase.PROTECTED_MOVEMENT_ALLOWED: LightColor.GREEN,
    MovementPhase.PERMISSIVE_MOVEMENT_ALLOWED: LightColor.GREEN,
    MovementPhase.PROTECTED_CLEARANCE: LightColor.YELLOW,
    MovementPhase.PERMISSIVE_CLEARANCE: LightColor.YELLOW,
    MovementPhase.CAUTION_CONFLICTING_TRAFFIC: LightColor.YELLOW,
    MovementPhase.STOP_AND_REMAIN: LightColor.RED,
    MovementPhase.STOP_THEN_PROCEED: LightColor.RED,
    MovementPhase.PRE_MOVEMENT: LightColor.RED,
    MovementPhase.DARK: LightColor.UNKNOWN,
    MovementPhase.UNAVAILABLE: LightColor.UNKNOWN,
}


def color_of(event_state: MovementPhase | str) -> LightColor:
    """Total mapping from signal indication to display color."""
    if isinstance(event_state, str):
        event_state = MovementPhase.from_label(event_state)
    return _COLOR_BY_PHASE[event_state]


def remaining_seconds(min_end_time: int, moy: int, dsecond: int) -> float:
    """Seconds until the event's minimum end, wrapped across the hour boundary.

    min_end_time is in tenths of a second within the hour, moy in minutes
    of the year, dsecond in milliseconds of the current minute. Events
    ending after the top of the hour wrap by +3600 s; the result is
    always in [0, 3600).
    """
    if min_end_time > TIME_MARK_SPECIAL:
        raise SpecialTimeMark(min_end_time)
    now = (moy % 60) * 60.0 + dsecond / 1000.0
    return (min_end_time / 10.0 - now) % 3600.0


class GroupSignal(NamedTuple):
    state: str
    remaining: float | None


@dataclass
class SignalSnapshot:
    """Per-signal-group view of one intersection at one instant.

    time_s is seconds since the start of the year for real captures, or
    run-relative seconds for synthesized streams; it orders snapshots in
    downstream phase reconstruction.
    """

    label: str
    time_s: float
    minute_of_hour: int
    second_of_minute: float
    groups: dict[int, GroupSignal]
    intersection_id: int | None = None
    next_states: dict[int, tuple[GroupSignal, ...]] = field(default_factory=dict)


def snapshot(
    message: SpatMessage,
    label: str,
    intersection_id: int | None = None,
    special_marks: str = "raise",
) -> SignalSnapshot:
    """Build the per-group snapshot for one intersection of the message.

    Uses the first intersection unless intersection_id selects another.
    The first event of each movement is the current state; later events
    are kept as next_states metadata. special_marks: "raise" propagates
    SpecialTimeMark for reserved minEndTime codes, "null" records the
    state with no remaining value.
    """
    if intersection_id is None:
        inter = message.intersections[0]
    else:
        matches = [i for i in message.intersections if i.id == intersection_id]
        if not matches:
            raise ValueError(f"intersection {intersection_id} not in message")
        inter = matches[0]
    moy = inter.moy if inter.moy is not None else message.moy
    if moy is None or inter.dsecond is None:
        raise MissingTimestamp(
            f"intersection {inter.id}: no minute-of-year or millisecond stamp"
        )

    def entry(event) -> GroupSignal:
        state_label = event.event_state.label
        if event.timing is None:
            return GroupSignal(state_label, None)
        try:
            return GroupSignal(
                state_label, remaining_seconds(event.timing.min_end_time, moy, inter.dsecond)
            )
        except SpecialTimeMark:
            if special_marks == "null":
                return GroupSignal(state_label, None)
            raise

    groups: dict[int, GroupSignal] = {}
    next_states: dict[int, tuple[GroupSignal, ...]] = {}
    for mv in inter.movements:
        groups[mv.signal_group] = entry(mv.events[0])
        if len(mv.events) > 1:
            next_states[mv.signal_group] = tuple(entry(e) for e in mv.events[1:])

    return SignalSnapshot(
        label=label,
        time_s=moy * 60.0 + inter.dsecond / 1000.0,
        minute_of_hour=moy % 60,
        second_of_minute=inter.dsecond / 1000.0,
        groups=groups,
        intersection_id=inter.id,
        next_states=next_states,
    )


def clock_label(snap: SignalSnapshot, tz_offset_min: int = 0) -> str:
    """12-hour wall-clock display. The hour depends on the configured UTC
    offset; minute and second come straight from the message stamps."""
    total_min = int(round((snap.time_s - snap.second_of_minute) / 60.0))
    second = int(round(snap.second_of_minute))
    minute = snap.minute_of_hour
    hour = ((total_min + tz_offset_min) % 1440) // 60
    if second >= 60:
        second -= 60
        minute += 1
        if minute >= 60:
            minute -= 60
            hour = (hour + 1) % 24
    suffix = "AM" if hour < 12 else "PM"
    hour12 = hour % 12 or 12
    return f"{hour12}:{minute:02d}:{second:02d} {suffix}"


def render_record(snap: SignalSnapshot, tz_offset_min: int = 0) -> dict:
    """Structured record mirroring the processed-message layout: label,
    timestamp, then groups ascending. Remaining values print 3 decimals."""
    groups = {}
    for g in sorted(snap.groups):
        state, remaining = snap.groups[g]
        groups[str(g)] = [state, None if remaining is None else round(remaining, 3)]
    record = {
        "intersection": snap.label,
        "timestamp": clock_label(snap, tz_offset_min),
        "minute": snap.minute_of_hour,
        "second": round(snap.second_of_minute, 3),
        "time_s": snap.time_s,
        "groups": groups,
    }
    if snap.intersection_id is not None:
        record["intersection_id"] = snap.intersection_id
    return record


def snapshot_from_record(record: dict) -> SignalSnapshot:
    """Inverse of render_record (up to display rounding of remaining)."""
    groups = {
        int(g): GroupSignal(state, remaining)
        for g, (state, remaining) in record["groups"].items()
    }
    return SignalSnapshot(
        label=record["intersection"],
        time_s=record["time_s"],
        minute_of_hour=record["minute"],
        second_of_minute=record["second"],
        groups=groups,
        intersection_id=record.get("intersection_id"),
    )

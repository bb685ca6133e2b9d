"""Reconstruction of cyclic signal phase tables from snapshot streams.

A phase is a maximal run of constant (north-south, east-west) color; its
duration is the time between transition boundaries. synthesize_stream is
the exact inverse and doubles as the round-trip test oracle.
"""

from __future__ import annotations

import enum
import json
from bisect import bisect_right
from dataclasses import dataclass, field

from .errors import (
    EmptyStream,
    GapTooLarge,
    NonMonotonicTime,
    PhaseConflict,
    SamplePeriodTooCoarse,
    UnmappedGroup,
)
from .spat_state import GroupSignal, LightColor, SignalSnapshot, color_of

DEFAULT_MAX_GAP_S = 2.0

# most restrictive first; used to resolve disagreeing groups on one approach
_RESTRICTIVENESS = (
    LightColor.RED,
    LightColor.YELLOW,
    LightColor.GREEN,
    LightColor.UNKNOWN,
)

# representative indication per color for synthesized streams
_STATE_FOR_COLOR = {
    LightColor.GREEN: "protected-Movement-Allowed",
    LightColor.YELLOW: "protected-clearance",
    LightColor.RED: "stop-And-Remain",
    LightColor.UNKNOWN: "unavailable",
}


class Approach(enum.Enum):
    NORTH_SOUTH = "north_south"
    EAST_WEST = "east_west"


@dataclass(frozen=True)
class ApproachMapping:
    ns_groups: frozenset[int]
    ew_groups: frozenset[int]

    def __post_init__(self):
        if not self.ns_groups or not self.ew_groups:
            raise ValueError("both approaches need at least one signal group")
        if self.ns_groups & self.ew_groups:
            raise ValueError("a signal group cannot serve both approaches")

    @classmethod
    def default(cls) -> "ApproachMapping":
        return cls(frozenset({1, 2, 5, 6}), frozenset({3, 4, 7, 8}))

    @classmethod
    def from_dict(cls, d: dict) -> "ApproachMapping":
        return cls(frozenset(d["north_south"]), frozenset(d["east_west"]))

    def groups_of(self, approach: Approach) -> frozenset[int]:
        return self.ns_groups if approach is Approach.NORTH_SOUTH else self.ew_groups

    def approach_of(self, group: int) -> Approach:
        if group in self.ns_groups:
            return Approach.NORTH_SOUTH
        if group in self.ew_groups:
            return Approach.EAST_WEST
        raise UnmappedGroup(group)


def approach_color(
    snap: SignalSnapshot, mapping: ApproachMapping, approach: Approach
) -> LightColor:
    """Shared color of the approach's groups; disagreements resolve to the
    most restrictive color present (red > yellow > green > unknown)."""
    for group in snap.groups:
        mapping.approach_of(group)  # UnmappedGroup if coverage is incomplete
    members = mapping.groups_of(approach)
    colors = {
        color_of(sig.state) for g, sig in snap.groups.items() if g in members
    }
    for color in _RESTRICTIVENESS:
        if color in colors:
            return color
    return LightColor.UNKNOWN


@dataclass(frozen=True)
class Phase:
    duration: float
    ns_color: LightColor
    ew_color: LightColor

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError(f"phase duration must be positive, got {self.duration}")
        if self.ns_color is LightColor.GREEN and self.ew_color is LightColor.GREEN:
            raise PhaseConflict("both approaches green in one phase")

    @property
    def pair(self) -> tuple[LightColor, LightColor]:
        return (self.ns_color, self.ew_color)


@dataclass
class PhaseTable:
    phases: list[Phase]
    cycle_boundaries: list[int] = field(default_factory=list)

    @classmethod
    def from_phases(cls, phases: list[Phase]) -> "PhaseTable":
        """Build a table, deriving cycle boundaries as every recurrence of
        the first phase's color pair."""
        if not phases:
            raise ValueError("phase list is empty")
        for prev, cur in zip(phases, phases[1:]):
            if prev.pair == cur.pair:
                raise ValueError("consecutive phases must differ in some color")
        boundaries = [
            i for i in range(1, len(phases)) if phases[i].pair == phases[0].pair
        ]
        return cls(list(phases), boundaries)

    @property
    def total_duration(self) -> float:
        return sum(p.duration for p in self.phases)

    def cumulative(self) -> list[float]:
        """Phase start times: cum[i] is when phase i begins."""
        starts = [0.0]
        for p in self.phases[:-1]:
            starts.append(starts[-1] + p.duration)
        return starts

    def phase_index_at(self, t: float) -> int:
        starts = self.cumulative()
        return min(max(bisect_right(starts, t) - 1, 0), len(self.phases) - 1)

    def colors_at(self, t: float) -> tuple[LightColor, LightColor]:
        return self.phases[self.phase_index_at(t)].pair

    def cycle_position(self, index: int) -> int:
        """1-based position of a phase within its cycle."""
        start = 0
        for b in self.cycle_boundaries:
            if b <= index:
                start = b
        return index - start + 1


def _round_near_integer(duration: float, threshold: float = 0.25) -> float:
    nearest = round(duration)
    if abs(duration - nearest) <= threshold and nearest > 0:
        return float(nearest)
    return duration


def build_phase_table(
    snapshots: list[SignalSnapshot],
    mapping: ApproachMapping,
    max_gap: float = DEFAULT_MAX_GAP_S,
) -> PhaseTable:
    """Collapse a time-ordered snapshot stream into phases.

    One phase per maximal run of constant (ns, ew) colors; a run's
    duration spans from its first snapshot to the next run's first
    snapshot, the final run extending one sample interval past the last
    snapshot. Durations within 0.25 s of an integer are snapped to it.
    """
    if len(snapshots) < 2:
        raise EmptyStream(f"need at least 2 snapshots, got {len(snapshots)}")
    times = [s.time_s for s in snapshots]
    for prev, cur in zip(times, times[1:]):
        if cur <= prev:
            raise NonMonotonicTime(f"timestamps {prev} -> {cur} not increasing")
        if cur - prev > max_gap:
            raise GapTooLarge(f"{cur - prev:.3f} s gap exceeds {max_gap} s")

    pairs = [
        (
            approach_color(s, mapping, Approach.NORTH_SOUTH),
            approach_color(s, mapping, Approach.EAST_WEST),
        )
        for s in snapshots
    ]
    boundaries = [0]
    for i in range(1, len(pairs)):
        if pairs[i] != pairs[i - 1]:
            boundaries.append(i)
    end_time = times[-1] + (times[-1] - times[-2])

    phases = []
    for j, start_idx in enumerate(boundaries):
        start_t = times[start_idx]
        stop_t = times[boundaries[j + 1]] if j + 1 < len(boundaries) else end_time
        ns, ew = pairs[start_idx]
        phases.append(Phase(_round_near_integer(stop_t - start_t), ns, ew))
    return PhaseTable.from_phases(phases)


def synthesize_stream(
    table: PhaseTable, sample_period: float, mapping: ApproachMapping
) -> list[SignalSnapshot]:
    """Sample the table's schedule at a fixed period, emitting snapshots
    whose group states follow the approach colors and whose remaining
    times count down to the approach's next color change."""
    if sample_period <= 0:
        raise SamplePeriodTooCoarse("sample period must be positive")
    shortest = min(p.duration for p in table.phases)
    if sample_period > shortest:
        raise SamplePeriodTooCoarse(
            f"period {sample_period} s exceeds shortest phase {shortest} s"
        )
    total = table.total_duration
    starts = table.cumulative()

    def next_change(index: int, approach_is_ns: bool, t: float) -> float:
        current = table.phases[index].pair[0 if approach_is_ns else 1]
        for j in range(index + 1, len(table.phases)):
            if table.phases[j].pair[0 if approach_is_ns else 1] != current:
                return starts[j] - t
        return total - t

    snapshots = []
    k = 0
    while True:
        t = k * sample_period
        if t >= total - 1e-9:
            break
        idx = table.phase_index_at(t)
        ns_color, ew_color = table.phases[idx].pair
        ns_remaining = next_change(idx, True, t)
        ew_remaining = next_change(idx, False, t)
        groups: dict[int, GroupSignal] = {}
        for g in sorted(mapping.ns_groups):
            groups[g] = GroupSignal(_STATE_FOR_COLOR[ns_color], ns_remaining)
        for g in sorted(mapping.ew_groups):
            groups[g] = GroupSignal(_STATE_FOR_COLOR[ew_color], ew_remaining)
        snapshots.append(
            SignalSnapshot(
                label="synthetic",
                time_s=t,
                minute_of_hour=int(t // 60) % 60,
                second_of_minute=t % 60.0,
                groups=groups,
            )
        )
        k += 1
    return snapshots


# --------------------------------------------------------------------------
# serialization

CSV_HEADER = "phase,duration_s,north_south,east_west"


def table_to_csv(table: PhaseTable) -> str:
    lines = [CSV_HEADER]
    for i, phase in enumerate(table.phases):
        lines.append(
            f"{table.cycle_position(i)},{phase.duration:g},"
            f"{phase.ns_color.value},{phase.ew_color.value}"
        )
    return "\n".join(lines) + "\n"


def table_from_csv(text: str) -> PhaseTable:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"bad phase CSV header: {lines[:1]!r}")
    phases = []
    for ln in lines[1:]:
        _, duration, ns, ew = ln.split(",")
        phases.append(Phase(float(duration), LightColor(ns), LightColor(ew)))
    return PhaseTable.from_phases(phases)


def table_to_json(table: PhaseTable) -> str:
    doc = {
        "phases": [
            {"duration": p.duration, "ns": p.ns_color.value, "ew": p.ew_color.value}
            for p in table.phases
        ],
        "cycle_boundaries": table.cycle_boundaries,
    }
    return json.dumps(doc, indent=2) + "\n"


def table_from_json(text: str) -> PhaseTable:
    doc = json.loads(text)
    phases = [
        Phase(p["duration"], LightColor(p["ns"]), LightColor(p["ew"]))
        for p in doc["phases"]
    ]
    return PhaseTable.from_phases(phases)

"""Shared fixtures: the golden capture vector, random message and phase-table
generators, and the reference phase schedule."""

import random

import pytest

from spatsim.codec import (
    IntersectionState,
    MovementEvent,
    MovementPhase,
    MovementState,
    SpatMessage,
    TimeChangeDetails,
)
from spatsim.phase_builder import ApproachMapping, Phase, PhaseTable
from spatsim.spat_state import LightColor

# One production frame captured from a roadside unit: 61-byte UPER message
# frame whose decoded form is pinned in GOLDEN_DECODED_DICT below.
GOLDEN_HEX = (
    "00133a44414b00863057f00008ab40700804302f498038218178940081180"
    "bbe600208a05df300304302f12802021817a4c0141140bbe600c08c05df30"
)

GOLDEN_RAW_LINE = (
    '{"msg-wave":[{"dot3":{"chan":"SCH1","dest":"ffffffffffff","ll":3,'
    '"priority":3,"psid":"8002","security":{"cert":true,"crypt":false,"prof":false,'
    '"sign":false},"slot":"CONTINUOUS","xtension":0},"encoding":"UPER",'
    f'"payload":"{GOLDEN_HEX}"}}],"seqno":1,"pkgno":0}}'
)

# stream order of the eight movements: (signalGroup, eventState, minEndTime)
GOLDEN_MOVEMENTS = [
    (8, "stop-And-Remain", 24211),
    (7, "stop-And-Remain", 24101),
    (2, "protected-Movement-Allowed", 24051),
    (1, "permissive-Movement-Allowed", 24051),
    (3, "stop-And-Remain", 24101),
    (4, "stop-And-Remain", 24211),
    (5, "permissive-Movement-Allowed", 24051),
    (6, "protected-Movement-Allowed", 24051),
]

GOLDEN_MOY = 278859
GOLDEN_DSECOND = 35508
GOLDEN_INTERSECTION_ID = 50698

GOLDEN_DECODED_DICT = {
    "messageId": 19,
    "value": {
        "timeStamp": GOLDEN_MOY,
        "intersections": [
            {
                "timeStamp": GOLDEN_DSECOND,
                "id": {"id": GOLDEN_INTERSECTION_ID},
                "revision": 127,
                "status": "0000",
                "states": [
                    {
                        "state-time-speed": [
                            {"eventState": state, "timing": {"minEndTime": met}}
                        ],
                        "signalGroup": group,
                    }
                    for group, state, met in GOLDEN_MOVEMENTS
                ],
            }
        ],
    },
}

# processed view of the golden message: group -> (state, remaining seconds)
GOLDEN_SNAPSHOT_GROUPS = {
    1: ("permissive-Movement-Allowed", 29.592),
    2: ("protected-Movement-Allowed", 29.592),
    3: ("stop-And-Remain", 34.592),
    4: ("stop-And-Remain", 45.592),
    5: ("permissive-Movement-Allowed", 29.592),
    6: ("protected-Movement-Allowed", 29.592),
    7: ("stop-And-Remain", 34.592),
    8: ("stop-And-Remain", 45.592),
}

# reference 3-cycle schedule: (duration, ns, ew)
REFERENCE_SCHEDULE = [
    (28.0, LightColor.GREEN, LightColor.RED),
    (3.0, LightColor.YELLOW, LightColor.RED),
    (20.0, LightColor.RED, LightColor.GREEN),
    (3.0, LightColor.RED, LightColor.YELLOW),
    (35.0, LightColor.GREEN, LightColor.RED),
    (3.0, LightColor.YELLOW, LightColor.RED),
    (20.0, LightColor.RED, LightColor.GREEN),
    (3.0, LightColor.RED, LightColor.YELLOW),
    (35.0, LightColor.GREEN, LightColor.RED),
    (3.0, LightColor.YELLOW, LightColor.RED),
    (20.0, LightColor.RED, LightColor.GREEN),
    (3.0, LightColor.RED, LightColor.YELLOW),
]


@pytest.fixture(scope="session")
def golden_payload() -> bytes:
    return bytes.fromhex(GOLDEN_HEX)


@pytest.fixture(scope="session")
def reference_table() -> PhaseTable:
    return PhaseTable.from_phases([Phase(d, ns, ew) for d, ns, ew in REFERENCE_SCHEDULE])


@pytest.fixture(scope="session")
def default_mapping() -> ApproachMapping:
    return ApproachMapping.default()


# --------------------------------------------------------------------------
# randomized generators (seeded by callers for reproducibility)

def random_spat_message(rng: random.Random) -> SpatMessage:
    """A constraint-respecting message of modest size."""

    def maybe(p, fn):
        return fn() if rng.random() < p else None

    def rand_name():
        return "".join(rng.choice("ABCDEFGHIJKLMNOPQRSTUVWXYZ-") for _ in range(rng.randint(1, 12)))

    def rand_timing():
        return TimeChangeDetails(
            min_end_time=rng.randint(0, 36011),
            start_time=maybe(0.25, lambda: rng.randint(0, 36011)),
            max_end_time=maybe(0.25, lambda: rng.randint(0, 36011)),
            likely_time=maybe(0.2, lambda: rng.randint(0, 36011)),
            confidence=maybe(0.2, lambda: rng.randint(0, 15)),
            next_time=maybe(0.2, lambda: rng.randint(0, 36011)),
        )

    def rand_event():
        return MovementEvent(
            event_state=MovementPhase(rng.randint(0, 9)),
            timing=maybe(0.9, rand_timing),
        )

    def rand_movement(group):
        return MovementState(
            signal_group=group,
            events=[rand_event() for _ in range(rng.randint(1, 3))],
            movement_name=maybe(0.15, rand_name),
        )

    def rand_intersection():
        groups = rng.sample(range(256), rng.randint(1, 6))
        return IntersectionState(
            id=rng.randint(0, 65535),
            revision=rng.randint(0, 127),
            status=rng.randint(0, 0xFFFF),
            movements=[rand_movement(g) for g in groups],
            region=maybe(0.3, lambda: rng.randint(0, 65535)),
            name=maybe(0.15, rand_name),
            moy=maybe(0.3, lambda: rng.randint(0, 527040)),
            dsecond=maybe(0.9, lambda: rng.randint(0, 65535)),
        )

    return SpatMessage(
        intersections=[rand_intersection() for _ in range(rng.randint(1, 3))],
        moy=maybe(0.7, lambda: rng.randint(0, 527040)),
        name=maybe(0.2, rand_name),
    )


def capture_lines(
    table: PhaseTable,
    mapping: ApproachMapping,
    period: float = 1.0,
    start_moy: int = 300000,
    intersection_id: int = GOLDEN_INTERSECTION_ID,
) -> list[str]:
    """Synthesize a raw capture: one envelope line per sample whose encoded
    message reproduces the schedule (state labels plus hour-relative
    minEndTime marks). start_moy defaults to the top of an hour so short
    captures avoid the hour wrap."""
    from spatsim.codec import encode_spat
    from spatsim.envelope import format_record
    from spatsim.phase_builder import synthesize_stream

    lines = []
    for seq, snap in enumerate(synthesize_stream(table, period, mapping)):
        t = snap.time_s
        minute = int(t // 60)
        moy = start_moy + minute
        dsecond = int(round((t - 60 * minute) * 1000))
        hour_seconds = (moy % 60) * 60 + dsecond / 1000.0
        movements = []
        for group in sorted(snap.groups):
            state, remaining = snap.groups[group]
            mark = int(round((hour_seconds + remaining) * 10)) % 36000
            movements.append(
                MovementState(
                    group,
                    [MovementEvent(MovementPhase.from_label(state), TimeChangeDetails(mark))],
                )
            )
        message = SpatMessage(
            intersections=[
                IntersectionState(
                    id=intersection_id,
                    revision=seq % 128,
                    status=0,
                    movements=movements,
                    dsecond=dsecond,
                )
            ],
            moy=moy,
        )
        lines.append(format_record(encode_spat(message), seqno=seq))
    return lines


def random_phase_table(rng: random.Random, max_phases: int = 8) -> PhaseTable:
    """Durations on the 0.5 s grid so sampling at 0.5 s round-trips exactly;
    consecutive phases always differ and never conflict (one green rule)."""
    choices = [
        (LightColor.GREEN, LightColor.RED),
        (LightColor.YELLOW, LightColor.RED),
        (LightColor.RED, LightColor.GREEN),
        (LightColor.RED, LightColor.YELLOW),
        (LightColor.RED, LightColor.RED),
    ]
    n = rng.randint(2, max_phases)
    phases = []
    prev = None
    for _ in range(n):
        pair = rng.choice([c for c in choices if c != prev])
        prev = pair
        phases.append(Phase(rng.randint(1, 24) * 0.5, pair[0], pair[1]))
    return PhaseTable.from_phases(phases)

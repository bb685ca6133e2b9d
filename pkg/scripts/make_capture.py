#!/usr/bin/env python3
"""Synthesize a raw RSU capture file from a phase schedule.

Writes newline-delimited envelope records whose encoded messages replay the
schedule at a fixed sampling rate, suitable as input to `spatsim generate`.

    python scripts/make_capture.py --out capture.ndjson --cycles 3 --period 1.0
"""

import argparse
import sys
from pathlib import Path

from spatsim.codec import (
    IntersectionState,
    MovementEvent,
    MovementPhase,
    MovementState,
    SpatMessage,
    TimeChangeDetails,
    encode_spat,
)
from spatsim.envelope import format_record
from spatsim.phase_builder import ApproachMapping, Phase, PhaseTable, synthesize_stream
from spatsim.spat_state import LightColor

G, Y, R = LightColor.GREEN, LightColor.YELLOW, LightColor.RED

# observed cycle structure at the reference intersection: a short first
# green, then steady 61 s cycles
CYCLE_1 = [(28.0, G, R), (3.0, Y, R), (20.0, R, G), (3.0, R, Y)]
CYCLE_N = [(35.0, G, R), (3.0, Y, R), (20.0, R, G), (3.0, R, Y)]


def reference_table(cycles: int) -> PhaseTable:
    rows = list(CYCLE_1)
    for _ in range(cycles - 1):
        rows += CYCLE_N
    return PhaseTable.from_phases([Phase(d, ns, ew) for d, ns, ew in rows])


def capture_lines(table, mapping, period, start_moy, intersection_id):
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


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="output capture path")
    parser.add_argument("--cycles", type=int, default=3)
    parser.add_argument("--period", type=float, default=1.0, help="sampling period, s")
    parser.add_argument("--start-moy", type=int, default=300000,
                        help="minute-of-year of the first sample")
    parser.add_argument("--intersection-id", type=int, default=50698)
    args = parser.parse_args(argv)

    table = reference_table(args.cycles)
    lines = capture_lines(
        table, ApproachMapping.default(), args.period, args.start_moy,
        args.intersection_id,
    )
    Path(args.out).write_text("".join(s + "\n" for s in lines), encoding="utf-8")
    print(f"wrote {len(lines)} records covering {table.total_duration:g} s to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

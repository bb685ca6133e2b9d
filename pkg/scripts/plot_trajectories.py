#!/usr/bin/env python3
"""Plot an exported trajectory CSV: positions colored by time, plus a
speed-over-time panel for the vehicles that pass through the middle of the
run. Requires matplotlib (pip install spatsim[plot]).

    python scripts/plot_trajectories.py --input out/trajectories.csv --out traj.png
"""

import argparse
import sys

from spatsim.scenario_io import parse_trajectories


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--input", required=True, help="trajectories.csv path")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--half-extent", type=float, default=35.0,
                        help="intersection square half-width to draw")
    args = parser.parse_args(argv)

    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
        from matplotlib.patches import Rectangle
    except ImportError:
        print("matplotlib is not installed; pip install matplotlib", file=sys.stderr)
        return 1

    records = parse_trajectories(args.input)
    if not records:
        print("no records to plot", file=sys.stderr)
        return 1

    fig, (ax_xy, ax_v) = plt.subplots(1, 2, figsize=(13, 6))

    times = [r.time for r in records]
    sc = ax_xy.scatter(
        [r.x for r in records], [r.y for r in records],
        c=times, s=2, cmap="viridis", linewidths=0,
    )
    half = args.half_extent
    ax_xy.add_patch(Rectangle((-half, -half), 2 * half, 2 * half,
                              fill=False, linestyle="--", color="gray"))
    ax_xy.set_xlabel("x, m")
    ax_xy.set_ylabel("y, m")
    ax_xy.set_title("vehicle positions over the run")
    ax_xy.set_aspect("equal")
    fig.colorbar(sc, ax=ax_xy, label="time, s")

    by_vehicle = {}
    for r in records:
        by_vehicle.setdefault(r.vehicle_id, []).append(r)
    mid = (min(times) + max(times)) / 2
    shown = 0
    for vid, rows in sorted(by_vehicle.items()):
        if shown >= 12:
            break
        if not any(abs(r.time - mid) < 30 for r in rows):
            continue
        ax_v.plot([r.time for r in rows], [r.speed for r in rows], lw=0.8, label=str(vid))
        shown += 1
    ax_v.set_xlabel("time, s")
    ax_v.set_ylabel("speed, m/s")
    ax_v.set_title("speed profiles (mid-run vehicles)")

    fig.tight_layout()
    fig.savefig(args.out, dpi=130)
    print(f"wrote {args.out} ({len(records)} records, {len(by_vehicle)} vehicles)")
    return 0


if __name__ == "__main__":
    sys.exit(main())

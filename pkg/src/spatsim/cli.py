"""Pipeline CLI: decode -> process -> phases -> simulate, plus generate.

Each stage reads and writes files so stages compose; generate chains all
four and keeps the intermediates. Behavior never depends on environment
variables.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .codec import decode_spat, from_decoded_dict, to_decoded_json
from .envelope import classify_payload, parse_envelope
from .errors import MissingTimestamp, SpatSimError
from .phase_builder import (
    ApproachMapping,
    build_phase_table,
    table_from_csv,
    table_from_json,
    table_to_csv,
    table_to_json,
)
from .scenario_io import (
    build_manifest,
    export_trajectories,
    grid_for_geometry,
    rasterize_bev,
    sha256_hex,
    write_manifest,
    write_pgm,
)
from .simulation import SimConfig, run_simulation
from .spat_state import render_record, snapshot, snapshot_from_record

log = logging.getLogger("spatsim")

DECODED_NAME = "decoded.ndjson"
SNAPSHOTS_NAME = "snapshots.ndjson"
PHASES_CSV_NAME = "phases.csv"
PHASES_JSON_NAME = "phases.json"
TRAJECTORIES_NAME = "trajectories.csv"
MANIFEST_NAME = "manifest.json"
BEV_DIR_NAME = "bev"


class StageError(SpatSimError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"stage {stage} failed: {message}")
        self.stage = stage


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise StageError("config", f"cannot read config {path}: {exc}") from exc


def _mapping_from_config(cfg: dict) -> ApproachMapping:
    if "approach_mapping" in cfg:
        return ApproachMapping.from_dict(cfg["approach_mapping"])
    return ApproachMapping.default()


def _prepare_outputs(out_dir: Path, names: list[str], force: bool) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    if force:
        return
    existing = [n for n in names if (out_dir / n).exists()]
    if existing:
        raise StageError(
            "output", f"{existing} already in {out_dir}; pass --force to overwrite"
        )


# --------------------------------------------------------------------------
# stages

def decode_stage(in_path: Path, out_path: Path, strict: bool) -> tuple[int, int, int]:
    """Returns (decoded, skipped, failed) line counts."""
    decoded = skipped = failed = 0
    out_lines = []
    try:
        lines = in_path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise StageError("decode", f"cannot read {in_path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            env = parse_envelope(line)
            kind = classify_payload(env.payload)
            if not kind.is_spat:
                skipped += 1
                log.info("line %d: %s frame (id %d) skipped", lineno, kind.family.value, kind.msg_id)
                continue
            out_lines.append(to_decoded_json(decode_spat(env.payload)))
            decoded += 1
        except SpatSimError as exc:
            failed += 1
            log.warning("line %d: %s: %s", lineno, type(exc).__name__, exc)
            if strict:
                raise StageError("decode", f"line {lineno}: {exc}") from exc
    out_path.write_text("".join(s + "\n" for s in out_lines), encoding="utf-8")
    log.info("decode: %d decoded, %d skipped, %d failed", decoded, skipped, failed)
    return decoded, skipped, failed


def process_stage(
    in_path: Path,
    out_path: Path,
    labels: dict,
    tz_offset_min: int,
    intersection_id: int | None,
    strict: bool,
) -> tuple[int, int]:
    """Returns (written, skipped) snapshot counts."""
    written = skipped = 0
    out_lines = []
    try:
        lines = in_path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise StageError("process", f"cannot read {in_path}: {exc}") from exc
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            message = from_decoded_dict(json.loads(line))
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            skipped += 1
            log.warning("line %d: unreadable decoded record: %s", lineno, exc)
            if strict:
                raise StageError("process", f"line {lineno}: {exc}") from exc
            continue
        ids = [i.id for i in message.intersections]
        if intersection_id is not None:
            ids = [i for i in ids if i == intersection_id]
        for iid in ids:
            try:
                snap = snapshot(
                    message,
                    label=labels.get(str(iid), str(iid)),
                    intersection_id=iid,
                    special_marks="null",
                )
            except MissingTimestamp as exc:
                skipped += 1
                log.warning("line %d: MissingTimestamp: %s", lineno, exc)
                if strict:
                    raise StageError("process", f"line {lineno}: {exc}") from exc
                continue
            out_lines.append(json.dumps(render_record(snap, tz_offset_min)))
            written += 1
    out_path.write_text("".join(s + "\n" for s in out_lines), encoding="utf-8")
    log.info("process: %d snapshots, %d skipped", written, skipped)
    return written, skipped


def phases_stage(
    in_path: Path,
    out_csv: Path,
    out_json: Path,
    mapping: ApproachMapping,
    intersection_id: int | None,
    max_gap: float,
):
    try:
        lines = [
            json.loads(ln)
            for ln in in_path.read_text(encoding="utf-8").splitlines()
            if ln.strip()
        ]
    except (OSError, json.JSONDecodeError) as exc:
        raise StageError("phases", f"cannot read {in_path}: {exc}") from exc
    if intersection_id is not None:
        lines = [d for d in lines if d.get("intersection_id") == intersection_id]
    ids = {d.get("intersection_id") for d in lines}
    if len(ids) > 1:
        raise StageError(
            "phases",
            f"snapshots mix intersections {sorted(ids)}; pass --intersection-id",
        )
    snaps = [snapshot_from_record(d) for d in lines]
    try:
        table = build_phase_table(snaps, mapping, max_gap=max_gap)
    except SpatSimError as exc:
        raise StageError("phases", str(exc)) from exc
    out_csv.write_text(table_to_csv(table), encoding="utf-8")
    out_json.write_text(table_to_json(table), encoding="utf-8")
    log.info("phases: %d phases, %d cycles", len(table.phases), len(table.cycle_boundaries) + 1)
    return table


def _load_phase_table(path: Path):
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise StageError("simulate", f"cannot read {path}: {exc}") from exc
    try:
        if path.suffix == ".json":
            return table_from_json(text), text.encode("utf-8")
        return table_from_csv(text), text.encode("utf-8")
    except (ValueError, KeyError, SpatSimError) as exc:
        raise StageError("simulate", f"bad phase table {path}: {exc}") from exc


def simulate_stage(
    phase_path: Path,
    out_dir: Path,
    sim_overrides: dict,
    bev_every: int,
) -> dict:
    table, table_bytes = _load_phase_table(phase_path)
    try:
        config = SimConfig(phase_table=table, **sim_overrides)
        records = run_simulation(config)
    except SpatSimError as exc:
        raise StageError("simulate", str(exc)) from exc

    outputs = {"trajectories": TRAJECTORIES_NAME}
    export_trajectories(records, out_dir / TRAJECTORIES_NAME)

    if bev_every > 0:
        bev_dir = out_dir / BEV_DIR_NAME
        bev_dir.mkdir(exist_ok=True)
        spec = grid_for_geometry(config.geometry)
        by_time: dict[float, list] = {}
        for r in records:
            by_time.setdefault(r.time, []).append(r)
        index_lines = []
        for i, t in enumerate(sorted(by_time)):
            if i % bev_every:
                continue
            frame = f"frame_{i:06d}.pgm"
            write_pgm(rasterize_bev(by_time[t], spec), bev_dir / frame)
            index_lines.append(f"{frame}\t{t:.6f}")
        (bev_dir / "index.txt").write_text(
            "".join(s + "\n" for s in index_lines), encoding="utf-8"
        )
        outputs["bev"] = BEV_DIR_NAME

    manifest = build_manifest(
        config_echo=config.as_dict(),
        phase_table_digest=sha256_hex(table_bytes),
        record_count=len(records),
        code_version=__version__,
        outputs=outputs,
    )
    write_manifest(manifest, out_dir / MANIFEST_NAME)
    log.info("simulate: %d records over %g s", len(records), table.total_duration)
    return manifest


# --------------------------------------------------------------------------
# subcommands

def cmd_decode(args) -> int:
    out_dir = Path(args.out_dir)
    _prepare_outputs(out_dir, [DECODED_NAME], args.force)
    decoded, skipped, failed = decode_stage(
        Path(args.input), out_dir / DECODED_NAME, args.strict
    )
    total = decoded + skipped + failed
    print(f"decoded {decoded}, skipped {skipped}, failed {failed} of {total} lines")
    return 1 if (total > 0 and failed == total) else 0


def cmd_process(args) -> int:
    cfg = _load_config_file(args.config)
    out_dir = Path(args.out_dir)
    _prepare_outputs(out_dir, [SNAPSHOTS_NAME], args.force)
    written, skipped = process_stage(
        Path(args.input),
        out_dir / SNAPSHOTS_NAME,
        labels=cfg.get("intersection_labels", {}),
        tz_offset_min=args.tz_offset_min,
        intersection_id=args.intersection_id,
        strict=args.strict,
    )
    print(f"wrote {written} snapshots, skipped {skipped}")
    return 1 if (written == 0 and skipped > 0) else 0


def cmd_phases(args) -> int:
    cfg = _load_config_file(args.config)
    out_dir = Path(args.out_dir)
    _prepare_outputs(out_dir, [PHASES_CSV_NAME, PHASES_JSON_NAME], args.force)
    table = phases_stage(
        Path(args.input),
        out_dir / PHASES_CSV_NAME,
        out_dir / PHASES_JSON_NAME,
        mapping=_mapping_from_config(cfg),
        intersection_id=args.intersection_id,
        max_gap=args.max_gap,
    )
    print(f"built {len(table.phases)} phases, total {table.total_duration:g} s")
    return 0


def _sim_overrides(args, cfg: dict) -> dict:
    overrides = dict(cfg.get("sim", {}))
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.vehicles is not None:
        overrides["vehicle_count"] = args.vehicles
    if args.speed_limit is not None:
        overrides["speed_limit"] = args.speed_limit
    if args.tick is not None:
        overrides["tick"] = args.tick
    return overrides


def cmd_simulate(args) -> int:
    cfg = _load_config_file(args.config)
    out_dir = Path(args.out_dir)
    _prepare_outputs(out_dir, [TRAJECTORIES_NAME, MANIFEST_NAME], args.force)
    manifest = simulate_stage(
        Path(args.input), out_dir, _sim_overrides(args, cfg), args.bev_every
    )
    print(
        f"simulated {manifest['record_count']} records "
        f"({manifest['config']['vehicle_count']} vehicles, seed {manifest['seed']})"
    )
    return 0


def cmd_generate(args) -> int:
    cfg = _load_config_file(args.config)
    out_dir = Path(args.out_dir)
    stages = ["decode", "process", "phases", "simulate"]
    until = stages.index(args.until)
    stage_outputs = [
        [DECODED_NAME],
        [SNAPSHOTS_NAME],
        [PHASES_CSV_NAME, PHASES_JSON_NAME],
        [TRAJECTORIES_NAME, MANIFEST_NAME],
    ]
    names = [n for level in range(until + 1) for n in stage_outputs[level]]
    _prepare_outputs(out_dir, names, args.force)

    decoded, skipped, failed = decode_stage(
        Path(args.input), out_dir / DECODED_NAME, args.strict
    )
    if decoded == 0:
        raise StageError("decode", f"no messages decoded ({failed} failures)")
    if until == 0:
        return 0
    written, _ = process_stage(
        out_dir / DECODED_NAME,
        out_dir / SNAPSHOTS_NAME,
        labels=cfg.get("intersection_labels", {}),
        tz_offset_min=args.tz_offset_min,
        intersection_id=args.intersection_id,
        strict=args.strict,
    )
    if written == 0:
        raise StageError("process", "no snapshots produced")
    if until == 1:
        return 0
    phases_stage(
        out_dir / SNAPSHOTS_NAME,
        out_dir / PHASES_CSV_NAME,
        out_dir / PHASES_JSON_NAME,
        mapping=_mapping_from_config(cfg),
        intersection_id=args.intersection_id,
        max_gap=args.max_gap,
    )
    if until == 2:
        return 0
    manifest = simulate_stage(
        out_dir / PHASES_CSV_NAME, out_dir, _sim_overrides(args, cfg), args.bev_every
    )
    print(f"scenario complete: {manifest['record_count']} trajectory records in {out_dir}")
    return 0


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spatsim",
        description="Decode RSU SPaT captures, rebuild signal phases, and "
        "replay them in a deterministic intersection simulator.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", required=True, help="input file for this stage")
    common.add_argument("--out-dir", required=True, help="output directory")
    common.add_argument("--force", action="store_true", help="overwrite existing outputs")
    common.add_argument("--config", help="pipeline config JSON")
    common.add_argument("--strict", action="store_true",
                        help="abort on the first per-record failure")
    common.add_argument("-v", "--verbose", action="store_true")

    proc_opts = argparse.ArgumentParser(add_help=False)
    proc_opts.add_argument("--intersection-id", type=int, default=None)
    proc_opts.add_argument("--tz-offset-min", type=int, default=0)

    phase_opts = argparse.ArgumentParser(add_help=False)
    phase_opts.add_argument("--max-gap", type=float, default=2.0,
                            help="maximum inter-snapshot gap in seconds")

    sim_opts = argparse.ArgumentParser(add_help=False)
    sim_opts.add_argument("--seed", type=int, default=None)
    sim_opts.add_argument("--vehicles", type=int, default=None)
    sim_opts.add_argument("--speed-limit", type=float, default=None)
    sim_opts.add_argument("--tick", type=float, default=None)
    sim_opts.add_argument("--bev-every", type=int, default=0, metavar="K",
                          help="write an occupancy frame every K ticks (0 = off)")

    p = sub.add_parser("decode", parents=[common], help="raw capture -> decoded messages")
    p.set_defaults(func=cmd_decode)
    p = sub.add_parser("process", parents=[common, proc_opts],
                       help="decoded messages -> signal snapshots")
    p.set_defaults(func=cmd_process)
    p = sub.add_parser("phases", parents=[common, proc_opts, phase_opts],
                       help="snapshots -> phase table")
    p.set_defaults(func=cmd_phases)
    p = sub.add_parser("simulate", parents=[common, sim_opts],
                       help="phase table -> scenario outputs")
    p.set_defaults(func=cmd_simulate)
    p = sub.add_parser("generate", parents=[common, proc_opts, phase_opts, sim_opts],
                       help="full pipeline, intermediates retained")
    p.add_argument("--until", choices=["decode", "process", "phases", "simulate"],
                   default="simulate", help="stop after this stage")
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
    )
    try:
        return args.func(args)
    except StageError as exc:
        log.error("%s", exc)
        print(str(exc), file=sys.stderr)
        return 1
    except SpatSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Scenario serialization: trajectory CSV, occupancy rasters, run manifest.

All writers are byte-deterministic for identical input: fixed 6-decimal
numeric formatting, fixed row ordering, sorted manifest keys.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from .errors import IoFailure, VehicleOutsideGrid


class TrajectoryRecord(NamedTuple):
    time: float
    vehicle_id: int
    x: float
    y: float
    heading: float
    speed: float
    accel: float
    target_speed: float
    light_state: str
    in_area: bool
    connected: bool


CSV_COLUMNS = (
    "time",
    "vehicle_id",
    "x",
    "y",
    "heading",
    "speed",
    "accel",
    "target_speed",
    "light_state",
    "in_area",
    "connected",
)
CSV_HEADER = ",".join(CSV_COLUMNS)


def trajectories_to_csv(records: Iterable[TrajectoryRecord]) -> str:
    rows = sorted(records, key=lambda r: (r.time, r.vehicle_id))
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(
            f"{r.time:.6f},{r.vehicle_id},{r.x:.6f},{r.y:.6f},{r.heading:.6f},"
            f"{r.speed:.6f},{r.accel:.6f},{r.target_speed:.6f},"
            f"{r.light_state},{'true' if r.in_area else 'false'},"
            f"{'true' if r.connected else 'false'}"
        )
    return "\n".join(lines) + "\n"


def export_trajectories(records: Iterable[TrajectoryRecord], destination) -> Path:
    path = Path(destination)
    try:
        path.write_text(trajectories_to_csv(records), encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return path


def parse_trajectories(source) -> list[TrajectoryRecord]:
    """Read back an exported CSV; values round-trip within 1e-6."""
    text = source if isinstance(source, str) and "\n" in source else Path(source).read_text()
    lines = text.splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"bad trajectory header: {lines[:1]!r}")
    records = []
    for line in lines[1:]:
        f = line.split(",")
        records.append(
            TrajectoryRecord(
                time=float(f[0]),
                vehicle_id=int(f[1]),
                x=float(f[2]),
                y=float(f[3]),
                heading=float(f[4]),
                speed=float(f[5]),
                accel=float(f[6]),
                target_speed=float(f[7]),
                light_state=f[8],
                in_area=f[9] == "true",
                connected=f[10] == "true",
            )
        )
    return records


# --------------------------------------------------------------------------
# bird's-eye occupancy raster

@dataclass(frozen=True)
class GridSpec:
    origin: tuple[float, float]   # world coordinates of the grid's min corner
    cell_size: float
    width: int
    height: int

    def __post_init__(self):
        if self.cell_size <= 0:
            raise ValueError("cell_size must be positive")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("grid dimensions must be positive")


def grid_for_geometry(geometry, cell_size: float = 1.0) -> GridSpec:
    """1 m-class grid covering the intersection square."""
    side = 2.0 * geometry.half_extent
    cells = int(math.ceil(side / cell_size))
    return GridSpec(
        origin=(geometry.center[0] - geometry.half_extent,
                geometry.center[1] - geometry.half_extent),
        cell_size=cell_size,
        width=cells,
        height=cells,
    )


@dataclass(eq=False)
class OccupancyGrid:
    origin: tuple[float, float]
    cell_size: float
    width: int
    height: int
    cells: np.ndarray            # uint8, shape (height, width), row 0 at min y
    skipped: tuple[int, ...] = ()


def rasterize_bev(
    records: Iterable[TrajectoryRecord], spec: GridSpec, strict: bool = False
) -> OccupancyGrid:
    """Mark the cell containing each vehicle's position (point footprint).

    Vehicles outside the grid are recorded in skipped and dropped, or
    raise VehicleOutsideGrid in strict mode.
    """
    cells = np.zeros((spec.height, spec.width), dtype=np.uint8)
    skipped = []
    for r in records:
        col = int(math.floor((r.x - spec.origin[0]) / spec.cell_size))
        row = int(math.floor((r.y - spec.origin[1]) / spec.cell_size))
        if 0 <= col < spec.width and 0 <= row < spec.height:
            cells[row, col] = 1
        elif strict:
            raise VehicleOutsideGrid(
                f"vehicle {r.vehicle_id} at ({r.x:.2f}, {r.y:.2f}) outside grid"
            )
        else:
            skipped.append(r.vehicle_id)
    return OccupancyGrid(
        origin=spec.origin,
        cell_size=spec.cell_size,
        width=spec.width,
        height=spec.height,
        cells=cells,
        skipped=tuple(skipped),
    )


def grid_to_pgm(grid: OccupancyGrid) -> str:
    """Plain portable graymap (P2), maxval 1, top row at max y (north up)."""
    lines = ["P2", f"{grid.width} {grid.height}", "1"]
    for row in range(grid.height - 1, -1, -1):
        lines.append(" ".join(str(int(v)) for v in grid.cells[row]))
    return "\n".join(lines) + "\n"


def write_pgm(grid: OccupancyGrid, destination) -> Path:
    path = Path(destination)
    try:
        path.write_text(grid_to_pgm(grid), encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return path


# --------------------------------------------------------------------------
# run manifest

# camera rig parameters carried as descriptive metadata for downstream
# renderers; nothing in this package consumes them
SENSOR_GEOMETRY = {
    "rgb_camera": {"resolution": [640, 480], "fov_deg": 110},
    "semantic_camera": {"resolution": [640, 480], "fov_deg": 110},
    "depth_camera": {"resolution": [640, 480], "fov_deg": 110},
    "bev_camera": {
        "resolution": [640, 480],
        "fov_deg": 110,
        "height_m": 25,
        "pitch_deg": -90,
    },
    "roadside_camera": {
        "resolution": [640, 480],
        "fov_deg": 110,
        "height_m": 20,
        "pitch_deg": -50,
        "yaw_deg": 25,
    },
}


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def build_manifest(
    config_echo: dict,
    phase_table_digest: str,
    record_count: int,
    code_version: str,
    outputs: dict | None = None,
) -> dict:
    return {
        "code_version": code_version,
        "config": config_echo,
        "seed": config_echo.get("seed"),
        "phase_table_digest": phase_table_digest,
        "record_count": record_count,
        "sensor_geometry": SENSOR_GEOMETRY,
        "outputs": outputs or {},
    }


def manifest_to_json(manifest: dict) -> str:
    return json.dumps(manifest, indent=2, sort_keys=True) + "\n"


def write_manifest(manifest: dict, destination) -> Path:
    path = Path(destination)
    try:
        path.write_text(manifest_to_json(manifest), encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return path

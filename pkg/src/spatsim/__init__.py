"""spatsim: decode RSU SPaT broadcasts, rebuild signal phase schedules, and
replay them in a deterministic connected-vehicle intersection simulator."""

__version__ = "0.1.0"

from .codec import MovementPhase, SpatMessage, decode_spat, encode_spat
from .envelope import RawEnvelope, classify_payload, parse_envelope
from .phase_builder import (
    Approach,
    ApproachMapping,
    Phase,
    PhaseTable,
    build_phase_table,
    synthesize_stream,
)
from .scenario_io import TrajectoryRecord, export_trajectories, rasterize_bev
from .simulation import (
    IntersectionGeometry,
    SimConfig,
    in_intersection_area,
    intersection_center,
    run_simulation,
    target_speed,
)
from .spat_state import LightColor, SignalSnapshot, color_of, remaining_seconds, snapshot

__all__ = [
    "__version__",
    "Approach",
    "ApproachMapping",
    "IntersectionGeometry",
    "LightColor",
    "MovementPhase",
    "Phase",
    "PhaseTable",
    "RawEnvelope",
    "SignalSnapshot",
    "SimConfig",
    "SpatMessage",
    "TrajectoryRecord",
    "build_phase_table",
    "classify_payload",
    "color_of",
    "decode_spat",
    "encode_spat",
    "export_trajectories",
    "in_intersection_area",
    "intersection_center",
    "parse_envelope",
    "rasterize_bev",
    "remaining_seconds",
    "run_simulation",
    "snapshot",
    "synthesize_stream",
    "target_speed",
]

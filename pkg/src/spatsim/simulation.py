"""Deterministic fixed-step simulation of a four-way signalized intersection.

Vehicles cruise under a constant-time-gap baseline controller; connected
vehicles inside the intersection area override their target speed from
the replayed signal schedule: red or yellow ahead means stop when closer
than the near threshold and halve speed otherwise, green restores the
speed limit. The run is a pure function of the configuration, seed
included.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import NamedTuple

from .errors import ConfigInvalid, NoLights
from .phase_builder import Approach, PhaseTable
from .scenario_io import TrajectoryRecord
from .spat_state import LightColor

TIME_GAP_S = 1.5          # baseline car-following headway
MIN_SPAWN_GAP_M = 10.0    # lane entry must be clear before a spawn
DESPAWN_PAST_CENTER_M = 200.0

Point = tuple[float, float]


def intersection_center(
    ns_lights: list[Point] | tuple[Point, ...],
    ew_lights: list[Point] | tuple[Point, ...],
) -> Point:
    """Centroid of all signal-head positions."""
    pts = list(ns_lights) + list(ew_lights)
    if not pts:
        raise NoLights("no light positions given")
    n = len(pts)
    return (math.fsum(p[0] for p in pts) / n, math.fsum(p[1] for p in pts) / n)


@dataclass(frozen=True)
class ApproachLane:
    """One inbound single-lane approach: straight travel along a fixed heading."""

    name: str
    bloc: Approach
    heading: Point          # unit vector of travel
    spawn: Point
    light: Point            # signal head, co-located with the stop line
    stop_s: float           # stop line, meters from spawn along the heading

    def position(self, s: float) -> Point:
        return (self.spawn[0] + self.heading[0] * s, self.spawn[1] + self.heading[1] * s)


@dataclass(frozen=True)
class IntersectionGeometry:
    ns_light_positions: tuple[Point, ...]
    ew_light_positions: tuple[Point, ...]
    center: Point
    half_extent: float = 35.0
    stop_line_offset: float = 15.0
    approach_length: float = 200.0
    lanes: tuple[ApproachLane, ...] = ()

    @property
    def n(self) -> int:
        return len(self.ns_light_positions)

    @property
    def m(self) -> int:
        return len(self.ew_light_positions)

    def lane(self, name: str) -> ApproachLane:
        for ln in self.lanes:
            if ln.name == name:
                return ln
        raise KeyError(name)

    @classmethod
    def four_way(
        cls,
        center: Point = (0.0, 0.0),
        half_extent: float = 35.0,
        stop_line_offset: float = 15.0,
        approach_length: float = 200.0,
        lane_offset: float = 2.0,
    ) -> "IntersectionGeometry":
        """Symmetric layout: one inbound lane per direction, right-hand
        traffic, one signal head per approach placed at its stop line."""
        if not stop_line_offset < half_extent < approach_length:
            raise ConfigInvalid(
                "need stop_line_offset < half_extent < approach_length, got "
                f"{stop_line_offset}, {half_extent}, {approach_length}"
            )
        cx, cy = center
        stop_s = approach_length - stop_line_offset
        specs = [
            # name, bloc, heading, lane anchor offset from center
            ("NB", Approach.NORTH_SOUTH, (0.0, 1.0), (lane_offset, 0.0)),
            ("SB", Approach.NORTH_SOUTH, (0.0, -1.0), (-lane_offset, 0.0)),
            ("EB", Approach.EAST_WEST, (1.0, 0.0), (0.0, -lane_offset)),
            ("WB", Approach.EAST_WEST, (-1.0, 0.0), (0.0, lane_offset)),
        ]
        lanes = []
        for name, bloc, heading, offset in specs:
            spawn = (
                cx + offset[0] - heading[0] * approach_length,
                cy + offset[1] - heading[1] * approach_length,
            )
            light = (
                spawn[0] + heading[0] * stop_s,
                spawn[1] + heading[1] * stop_s,
            )
            lanes.append(ApproachLane(name, bloc, heading, spawn, light, stop_s))
        ns = tuple(ln.light for ln in lanes if ln.bloc is Approach.NORTH_SOUTH)
        ew = tuple(ln.light for ln in lanes if ln.bloc is Approach.EAST_WEST)
        return cls(
            ns_light_positions=ns,
            ew_light_positions=ew,
            center=intersection_center(ns, ew),
            half_extent=half_extent,
            stop_line_offset=stop_line_offset,
            approach_length=approach_length,
            lanes=tuple(lanes),
        )


def in_intersection_area(point: Point, geometry: IntersectionGeometry) -> bool:
    """Axis-aligned square of half-width half_extent, boundary inclusive."""
    cx, cy = geometry.center
    return (
        abs(point[0] - cx) <= geometry.half_extent
        and abs(point[1] - cy) <= geometry.half_extent
    )


class TrafficLightView(NamedTuple):
    light_id: str
    state: LightColor
    distance: float
    green_remaining: float


@dataclass
class VehicleState:
    id: int
    approach: str
    s: float                 # distance traveled along the lane, meters
    speed: float
    target_speed: float
    accel: float = 0.0
    connected: bool = True

    def position(self, lane: ApproachLane) -> Point:
        return lane.position(self.s)


@dataclass
class SimConfig:
    phase_table: PhaseTable
    geometry: IntersectionGeometry | None = None
    vehicle_count: int = 100
    speed_limit: float = 15.0
    tick: float = 0.1
    near_threshold: float = 10.0
    slow_factor: float = 0.5
    accel_max: float = 3.0
    decel_max: float = 5.0
    seed: int = 42
    duration_policy: str = "all-cycles"  # run spans first cycle start to last cycle end

    def __post_init__(self):
        if self.geometry is None:
            self.geometry = IntersectionGeometry.four_way()

    def validate(self) -> None:
        if not self.phase_table.phases:
            raise ConfigInvalid("phase table is empty")
        if self.tick <= 0:
            raise ConfigInvalid(f"tick must be positive, got {self.tick}")
        if not self.near_threshold < self.geometry.half_extent:
            raise ConfigInvalid("near_threshold must be below the area half-extent")
        if not 0 < self.slow_factor < 1:
            raise ConfigInvalid(f"slow_factor must be in (0, 1), got {self.slow_factor}")
        if self.vehicle_count < 0:
            raise ConfigInvalid("vehicle_count cannot be negative")
        if self.speed_limit <= 0 or self.accel_max <= 0 or self.decel_max <= 0:
            raise ConfigInvalid("speed_limit, accel_max, decel_max must be positive")
        if self.duration_policy != "all-cycles":
            raise ConfigInvalid(f"unknown duration policy {self.duration_policy!r}")

    def as_dict(self) -> dict:
        g = self.geometry
        return {
            "vehicle_count": self.vehicle_count,
            "speed_limit": self.speed_limit,
            "tick": self.tick,
            "near_threshold": self.near_threshold,
            "slow_factor": self.slow_factor,
            "accel_max": self.accel_max,
            "decel_max": self.decel_max,
            "seed": self.seed,
            "duration_policy": self.duration_policy,
            "geometry": {
                "center": list(g.center),
                "half_extent": g.half_extent,
                "stop_line_offset": g.stop_line_offset,
                "approach_length": g.approach_length,
                "ns_light_positions": [list(p) for p in g.ns_light_positions],
                "ew_light_positions": [list(p) for p in g.ew_light_positions],
            },
            "phase_table": {
                "rows": [
                    [p.duration, p.ns_color.value, p.ew_color.value]
                    for p in self.phase_table.phases
                ],
                "cycle_boundaries": list(self.phase_table.cycle_boundaries),
            },
        }


class SignalSchedule:
    """Plays a phase table once, from first cycle start to last cycle end."""

    def __init__(self, table: PhaseTable):
        self.table = table
        self.total = table.total_duration
        self._starts = table.cumulative()

    def color_at(self, bloc: Approach, t: float) -> LightColor:
        pair = self.table.colors_at(t)
        return pair[0] if bloc is Approach.NORTH_SOUTH else pair[1]

    def green_remaining(self, bloc: Approach, t: float) -> float:
        """Seconds of green left; 0 when the light is not green."""
        idx = self.table.phase_index_at(t)
        side = 0 if bloc is Approach.NORTH_SOUTH else 1
        if self.table.phases[idx].pair[side] is not LightColor.GREEN:
            return 0.0
        for j in range(idx + 1, len(self.table.phases)):
            if self.table.phases[j].pair[side] is not LightColor.GREEN:
                return self._starts[j] - t
        return self.total - t


def target_speed(
    state: LightColor,
    distance: float,
    current_speed: float,
    speed_limit: float,
    near_threshold: float = 10.0,
    slow_factor: float = 0.5,
) -> float:
    """Commanded speed for a governed vehicle. Unknown is handled like red
    (fail safe)."""
    if state is LightColor.GREEN:
        return speed_limit
    if distance < near_threshold:
        return 0.0
    return slow_factor * current_speed


def controller_tick(
    vehicle: VehicleState,
    schedule: SignalSchedule,
    geometry: IntersectionGeometry,
    config: SimConfig,
    t: float,
) -> tuple[float, TrafficLightView] | None:
    """Target-speed override for a connected vehicle inside the area.

    Returns None when the baseline keeps control: vehicle not connected,
    outside the square, or its governing head already behind it. The
    commanded velocity is the lane heading scaled by the returned target.
    """
    if not vehicle.connected:
        return None
    lane = geometry.lane(vehicle.approach)
    if not in_intersection_area(vehicle.position(lane), geometry):
        return None
    if vehicle.s > lane.stop_s:
        return None  # stop line passed; no head governs this vehicle
    state = schedule.color_at(lane.bloc, t)
    pos = vehicle.position(lane)
    distance = math.hypot(pos[0] - lane.light[0], pos[1] - lane.light[1])
    view = TrafficLightView(
        light_id=f"tl-{lane.name}",
        state=state,
        distance=distance,
        green_remaining=schedule.green_remaining(lane.bloc, t),
    )
    commanded = target_speed(
        state,
        distance,
        vehicle.speed,
        config.speed_limit,
        config.near_threshold,
        config.slow_factor,
    )
    return commanded, view


def baseline_tick(
    vehicle: VehicleState, leader: VehicleState | None, config: SimConfig
) -> float:
    """Free-road cruise at the limit; behind a leader, the speed that keeps
    at least the constant time gap."""
    if leader is None:
        return config.speed_limit
    gap = leader.s - vehicle.s
    return max(0.0, min(config.speed_limit, gap / TIME_GAP_S))


def physics_step(vehicle: VehicleState, dt: float, config: SimConfig) -> VehicleState:
    """Move speed toward the target under accel/decel caps, then advance."""
    speed = vehicle.speed
    target = vehicle.target_speed
    if target > speed:
        speed = min(target, speed + config.accel_max * dt)
    elif target < speed:
        speed = max(target, speed - config.decel_max * dt)
    speed = min(max(speed, 0.0), config.speed_limit)
    vehicle.accel = (speed - vehicle.speed) / dt
    vehicle.speed = speed
    vehicle.s += speed * dt
    return vehicle


def _draw_arrivals(config: SimConfig, total: float) -> list[tuple[float, str]]:
    """Seeded uniform arrival schedule across the four approaches."""
    rng = random.Random(config.seed)
    names = [lane.name for lane in config.geometry.lanes]
    draws = [
        (rng.uniform(0.0, total), rng.choice(names))
        for _ in range(config.vehicle_count)
    ]
    draws.sort(key=lambda d: d[0])
    return draws


def run_simulation(config: SimConfig) -> list[TrajectoryRecord]:
    """Run the schedule once and return every per-tick vehicle record.

    Each tick: signal playback advances, baseline targets are set for all
    vehicles, the connected-vehicle override replaces targets for governed
    vehicles, the pre-move state is recorded, then physics advances.
    Identical config and seed give bit-identical records.
    """
    config.validate()
    geometry = config.geometry
    schedule = SignalSchedule(config.phase_table)
    total = schedule.total
    arrivals = _draw_arrivals(config, total)
    pending: dict[str, list[tuple[float, int]]] = {ln.name: [] for ln in geometry.lanes}
    for vid, (at, name) in enumerate(arrivals):
        pending[name].append((at, vid))

    lanes = {ln.name: ln for ln in geometry.lanes}
    heading_angle = {
        name: math.atan2(ln.heading[1], ln.heading[0]) for name, ln in lanes.items()
    }
    active: dict[str, list[VehicleState]] = {name: [] for name in lanes}
    despawn_s = geometry.approach_length + DESPAWN_PAST_CENTER_M

    records: list[TrajectoryRecord] = []
    n_ticks = int(round(total / config.tick))
    for k in range(n_ticks):
        t = k * config.tick
        # spawn due arrivals whose lane entry is clear (FIFO per approach)
        for name, queue in pending.items():
            while queue and queue[0][0] <= t:
                entry_blocked = any(v.s < MIN_SPAWN_GAP_M for v in active[name])
                if entry_blocked:
                    break
                _, vid = queue.pop(0)
                active[name].append(
                    VehicleState(
                        id=vid,
                        approach=name,
                        s=0.0,
                        speed=config.speed_limit,
                        target_speed=config.speed_limit,
                    )
                )

        for name, vehicles in active.items():
            lane = lanes[name]
            vehicles.sort(key=lambda v: -v.s)
            for i, vehicle in enumerate(vehicles):
                leader = vehicles[i - 1] if i > 0 else None
                vehicle.target_speed = baseline_tick(vehicle, leader, config)
                override = controller_tick(vehicle, schedule, geometry, config, t)
                light_state = LightColor.UNKNOWN
                if override is not None:
                    vehicle.target_speed, view = override
                    light_state = view.state
                x, y = vehicle.position(lane)
                records.append(
                    TrajectoryRecord(
                        time=t,
                        vehicle_id=vehicle.id,
                        x=x,
                        y=y,
                        heading=heading_angle[name],
                        speed=vehicle.speed,
                        accel=vehicle.accel,
                        target_speed=vehicle.target_speed,
                        light_state=light_state.value.lower(),
                        in_area=in_intersection_area((x, y), geometry),
                        connected=vehicle.connected,
                    )
                )
            for vehicle in vehicles:
                physics_step(vehicle, config.tick, config)
            active[name] = [v for v in vehicles if v.s < despawn_s]

    records.sort(key=lambda r: (r.time, r.vehicle_id))
    return records

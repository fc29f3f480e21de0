"""Single-threaded tick loop driving both strategies over the merge scenario.

Vehicles are processed in a fixed order (origin tag, then serial) every
tick: kinematics are computed synchronously from the current state, then
applied, then registrations, injections, recording, collision handling and
exits.  All randomness flows through one seeded generator, so identical
configurations replay identically.

Baseline: every vehicle follows the Krauss rule against its lane leader;
ramp vehicles merge by gap acceptance at the ramp end, braking against a
phantom obstacle there until accepted, with an optional forced merge once
their patience runs out (the source of baseline merge conflicts).

Preemptive: registered vehicles reproduce their approved trajectory sample
by sample; only vehicles that have not yet reached the detection boundary
car-follow.  Ramp admissions and detections that cannot be scheduled yet
are simply retried on later ticks; a vehicle permanently without a schedule
falls back to car-following and is logged as a protocol failure.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from ..coordination import IntentionRejected, RejectionReason
from ..temporal import TemporalConfig
from .geometry import MAIN_LANE, RAMP_LANE, RoadGeometry
from .merging import InfeasibleMerge, PreemptivePlanner
from .vehicles import (
    FORCED_MERGE_WAIT_S,
    MERGE_ANTICIPATION_ZONE,
    KraussParams,
    VehicleState,
    baseline_merge_decision,
    krauss_step,
)

__all__ = ["SimEvent", "VehicleRecord", "World", "advance_tick"]

#: Front distance to the ramp end below which merging/waiting triggers, m.
RAMP_END_TRIGGER = 0.5
#: Speed under which a vehicle at the ramp end counts as waiting, m/s.
WAIT_SPEED = 0.1
#: Ticks a detected vehicle may defer registration before falling back.
MAX_REGISTRATION_DEFER = 1000


@dataclass(frozen=True)
class SimEvent:
    tick: int
    kind: str  # entered | merged | exited | collision | protocol_failure
    vehicle_id: str
    detail: str = ""


@dataclass(frozen=True)
class VehicleRecord:
    """Entry/exit summary of one vehicle, for the metrics layer."""

    vehicle_id: str
    origin: str
    demanded_at: int
    entered_at: int
    exited_at: int
    entry_position: float
    entry_speed: float


class World:
    """Mutable scenario state; one instance per run."""

    def __init__(
        self,
        *,
        geometry: RoadGeometry,
        params: KraussParams,
        temporal: TemporalConfig,
        strategy: str,
        dt: float,
        cell_length: float,
        additional_space: float,
        forced_merge: bool,
        main_arrivals: Iterable[int],
        ramp_arrivals: Iterable[int],
        seed: int,
        record_trajectories: bool = True,
    ) -> None:
        if strategy not in ("baseline", "preemptive"):
            raise ValueError(f"unknown strategy {strategy!r}")
        self.geometry = geometry
        self.params = params
        self.strategy = strategy
        self.dt = dt
        self.forced_merge = forced_merge
        self.patience_ticks = int(round(FORCED_MERGE_WAIT_S / dt))
        self.record_trajectories = record_trajectories

        self.planner: Optional[PreemptivePlanner] = None
        if strategy == "preemptive":
            self.planner = PreemptivePlanner(
                geometry, params, temporal, dt, cell_length, additional_space
            )

        self.rng = np.random.Generator(np.random.PCG64(seed))
        self.vehicles: dict[str, VehicleState] = {}
        self.pending_main: deque[int] = deque(sorted(main_arrivals))
        self.pending_ramp: deque[int] = deque(sorted(ramp_arrivals))
        self.arrival_ticks: list[int] = sorted(
            list(self.pending_main) + list(self.pending_ramp)
        )
        self.demanded = len(self.arrival_ticks)
        self.main_serial = 0
        self.ramp_serial = 0

        self.tick = 0
        self.events: list[SimEvent] = []
        self.trajectory_rows: list[tuple[str, str, int, float, float, str]] = []
        self.exited: list[VehicleRecord] = []
        self.merge_crossings: list[int] = []
        self.collisions = 0
        self.protocol_failures = 0
        self.forced_merges = 0
        self.waiting_ticks = 0
        self.injected = 0

    # -- small queries -------------------------------------------------

    def lane_vehicles(self) -> dict[str, list[VehicleState]]:
        lanes: dict[str, list[VehicleState]] = {MAIN_LANE: [], RAMP_LANE: []}
        for v in self.vehicles.values():
            lanes.setdefault(v.lane, []).append(v)
        for lane in lanes.values():
            lane.sort(key=lambda v: (v.position, v.sort_key()))
        return lanes

    @staticmethod
    def _leader_of(lane: list[VehicleState], idx: int) -> Optional[VehicleState]:
        return lane[idx + 1] if idx + 1 < len(lane) else None

    @staticmethod
    def _main_gaps(main: list[VehicleState], vehicle: VehicleState) -> tuple[float, float]:
        """(lead gap, lag gap) against the mainline at the vehicle's position."""
        positions = [m.position for m in main]
        idx = bisect_left(positions, vehicle.position)
        lead = main[idx] if idx < len(main) else None
        lag = main[idx - 1] if idx > 0 else None
        lead_gap = (lead.rear - vehicle.position) if lead else math.inf
        lag_gap = (vehicle.rear - lag.position) if lag else math.inf
        return lead_gap, lag_gap

    def _entry_clear(self, lane_list: list[VehicleState], entry: float) -> bool:
        positions = [m.position for m in lane_list]
        idx = bisect_left(positions, entry)
        leader = lane_list[idx] if idx < len(lane_list) else None
        if leader is None:
            return True
        return leader.rear >= entry + self.params.min_gap

    def schedule_of(self, vehicle_id: str):
        assert self.planner is not None
        return self.planner.scheduled[vehicle_id]


def _phantom_obstacle(geometry: RoadGeometry, params: KraussParams) -> VehicleState:
    """Stationary virtual leader whose rear sits past the ramp end, so an
    unaccepted ramp vehicle brakes to a stop with its front at the end."""
    return VehicleState(
        vehicle_id="r.-1",
        position=geometry.merge_point + params.min_gap + 5.0,
        speed=0.0,
        entered_at=0,
        length=5.0,
        lane=RAMP_LANE,
    )


def advance_tick(world: World) -> list[SimEvent]:
    """Advance the world by one tick; returns the events it emitted."""
    g, p, dt = world.geometry, world.params, world.dt
    t1 = world.tick + 1
    events: list[SimEvent] = []
    planner = world.planner

    order = sorted(world.vehicles.values(), key=VehicleState.sort_key)
    lanes = world.lane_vehicles()
    index_in_lane = {
        v.vehicle_id: i for lane in lanes.values() for i, v in enumerate(lane)
    }
    phantom = _phantom_obstacle(g, p)

    # ---- stage 1: synchronous kinematics from the current state
    staged: dict[str, tuple[float, float]] = {}
    accepted: dict[str, bool] = {}
    for v in order:
        if v.registered and not v.fallback:
            traj = world.schedule_of(v.vehicle_id)
            idx = t1 - traj.start_tick
            if idx >= len(traj):  # schedule exhausted; hold the final sample
                idx = len(traj) - 1
            staged[v.vehicle_id] = (float(traj.positions[idx]), float(traj.speeds[idx]))
            continue
        lane = lanes[v.lane]
        leader = world._leader_of(lane, index_in_lane[v.vehicle_id])
        if v.lane == RAMP_LANE:
            lead_gap, lag_gap = world._main_gaps(lanes[MAIN_LANE], v)
            ok = baseline_merge_decision(v, lead_gap, lag_gap, p)
            accepted[v.vehicle_id] = ok
            in_zone = v.position >= g.merge_point - MERGE_ANTICIPATION_ZONE
            effective = leader
            if not (in_zone and ok):
                if effective is None or phantom.rear < effective.rear:
                    effective = phantom
            new_speed = krauss_step(v, effective, p, dt, float(world.rng.random()))
        else:
            new_speed = krauss_step(v, leader, p, dt, float(world.rng.random()))
        new_pos = v.position + 0.5 * (v.speed + new_speed) * dt
        staged[v.vehicle_id] = (new_pos, new_speed)

    # ---- stage 2: apply moves, ramp-end waiting and merging, lane switches
    for v in order:
        new_pos, new_speed = staged[v.vehicle_id]
        scheduled = v.registered and not v.fallback
        if v.lane == RAMP_LANE and not scheduled:
            ok = accepted[v.vehicle_id]
            permitted = ok or (world.forced_merge and v.wait_ticks >= world.patience_ticks)
            at_end = new_pos >= g.merge_point - RAMP_END_TRIGGER
            if at_end and permitted:
                v.lane = MAIN_LANE
                v.merged = True
                v.waiting = False
                if not ok:
                    world.forced_merges += 1
                events.append(
                    SimEvent(t1, "merged", v.vehicle_id, "forced" if not ok else "gap")
                )
            elif at_end and new_speed < WAIT_SPEED:
                v.waiting = True
                v.wait_ticks += 1
            else:
                v.waiting = False
        v.acceleration = (new_speed - v.speed) / dt
        v.position, v.speed = new_pos, new_speed
        if scheduled and v.origin == "r" and not v.merged and v.position >= g.merge_point:
            v.lane = MAIN_LANE
            v.merged = True
            events.append(SimEvent(t1, "merged", v.vehicle_id, "scheduled"))
        if v.crossed_merge_at is None and v.position >= g.merge_point:
            v.crossed_merge_at = t1
            world.merge_crossings.append(t1)

    # ---- stage 3: registrations at the detection boundary (preemptive)
    if planner is not None:
        lanes = world.lane_vehicles()
        index_in_lane = {
            v.vehicle_id: i for lane in lanes.values() for i, v in enumerate(lane)
        }
        candidates = [
            v
            for v in order
            if v.vehicle_id in world.vehicles
            and not v.registered
            and not v.fallback
            and v.position >= g.detection_boundary
        ]
        candidates.sort(key=lambda v: -v.position)
        for v in candidates:
            leader = world._leader_of(lanes[v.lane], index_in_lane[v.vehicle_id])
            if leader is not None and not (leader.registered and not leader.fallback):
                # keep a strict front-to-back registration order per lane
                v.defer_ticks += 1
                continue
            try:
                planner.check_new_vehicle(v, now=t1)
                v.registered = True
                v.defer_ticks = 0
            except InfeasibleMerge:
                v.defer_ticks += 1
                if v.defer_ticks > MAX_REGISTRATION_DEFER:
                    v.fallback = True
                    world.protocol_failures += 1
                    events.append(
                        SimEvent(t1, "protocol_failure", v.vehicle_id, "no-feasible-schedule")
                    )
            except IntentionRejected as err:
                v.fallback = True
                world.protocol_failures += 1
                events.append(
                    SimEvent(t1, "protocol_failure", v.vehicle_id, err.reason.value)
                )

    # ---- stage 4: injections
    lanes = world.lane_vehicles()

    while world.pending_main and world.pending_main[0] <= t1:
        if not world._entry_clear(lanes[MAIN_LANE], 0.0):
            break
        demanded = world.pending_main.popleft()
        vid = f"m.{world.main_serial}"
        world.main_serial += 1
        vehicle = VehicleState(
            vehicle_id=vid,
            position=0.0,
            speed=p.v_max,
            entered_at=t1,
            demanded_at=demanded,
            lane=MAIN_LANE,
        )
        world.vehicles[vid] = vehicle
        lanes = world.lane_vehicles()
        world.injected += 1
        events.append(SimEvent(t1, "entered", vid, f"demand={demanded}"))

    ramp_entry = g.ramp_entry
    while world.pending_ramp and world.pending_ramp[0] <= t1:
        if not world._entry_clear(lanes[RAMP_LANE], ramp_entry):
            break
        vid = f"r.{world.ramp_serial}"
        vehicle = VehicleState(
            vehicle_id=vid,
            position=ramp_entry,
            speed=p.v_max,
            entered_at=t1,
            demanded_at=world.pending_ramp[0],
            lane=RAMP_LANE,
        )
        if planner is not None and ramp_entry >= g.detection_boundary:
            # admission gating: enter only with an approved schedule
            try:
                planner.check_new_vehicle(vehicle, now=t1)
                vehicle.registered = True
            except InfeasibleMerge:
                break  # head of the queue waits outside the world
            except IntentionRejected as err:
                vehicle.fallback = True
                world.protocol_failures += 1
                events.append(SimEvent(t1, "protocol_failure", vid, err.reason.value))
        demanded = world.pending_ramp.popleft()
        world.ramp_serial += 1
        world.vehicles[vid] = vehicle
        lanes = world.lane_vehicles()
        world.injected += 1
        events.append(SimEvent(t1, "entered", vid, f"demand={demanded}"))

    # ---- stage 5: trajectory recording
    if world.record_trajectories:
        for v in sorted(world.vehicles.values(), key=VehicleState.sort_key):
            world.trajectory_rows.append(
                (v.vehicle_id, v.origin, t1, v.position, v.speed, v.lane)
            )

    # ---- stage 6: exits (before the collision scan, so a vehicle at the
    # exit boundary counts as completed, never as a boundary collision)
    for v in list(world.vehicles.values()):
        if v.position >= g.mainline_length:
            world.exited.append(
                VehicleRecord(
                    vehicle_id=v.vehicle_id,
                    origin=v.origin,
                    demanded_at=v.demanded_at,
                    entered_at=v.entered_at,
                    exited_at=t1,
                    entry_position=0.0 if v.origin == "m" else ramp_entry,
                    entry_speed=p.v_max,
                )
            )
            events.append(
                SimEvent(t1, "exited", v.vehicle_id, f"travel={t1 - v.entered_at}")
            )
            del world.vehicles[v.vehicle_id]

    # ---- stage 7: collisions (front past the leader's rear, same lane)
    doomed: set[str] = set()
    for lane_list in world.lane_vehicles().values():
        i = 0
        while i + 1 < len(lane_list):
            follower, leader = lane_list[i], lane_list[i + 1]
            if follower.position > leader.rear + 1e-9:
                world.collisions += 1
                doomed.add(follower.vehicle_id)
                doomed.add(leader.vehicle_id)
                events.append(
                    SimEvent(t1, "collision", follower.vehicle_id, f"with={leader.vehicle_id}")
                )
                i += 2
            else:
                i += 1
    for vid in doomed:
        v = world.vehicles.pop(vid)
        if planner is not None and v.registered:
            planner.release(vid)

    if any(v.waiting for v in world.vehicles.values()):
        world.waiting_ticks += 1

    world.tick = t1
    world.events.extend(events)
    return events

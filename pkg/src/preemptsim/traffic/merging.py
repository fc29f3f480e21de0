"""Preemptive merge scheduling on top of the coordination kernel.

The roadside planner keeps a merge list ordered by scheduled merge-point
crossing tick.  A newly detected vehicle submits its free-flow trajectory;
if the merge list is empty the trajectory is adopted as-is, otherwise the
vehicle is slotted into the earliest crossing-tick gap that respects the
headway implied by ``space_len = leader length + additional_space`` at the
crossing speed.  Because headway at a point does not by itself rule out
overlap elsewhere, every candidate trajectory is additionally dry-checked
as cell claims against the manager's approved schedule and the crossing is
pushed later until the claims are clean; only then is the intention
committed, which is why approvals always commit unaltered.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from ..coordination import (
    Intention,
    IntentionRejected,
    Manager,
    RejectionReason,
    Task,
)
from ..temporal import TemporalConfig
from .geometry import RoadGeometry
from .trajectory import (
    Trajectory,
    claims_for_trajectory,
    compose_trajectory,
    max_crossing_tick,
    plan_arrival,
)
from .vehicles import VehicleState, parse_origin, KraussParams

__all__ = [
    "CROSSING_SPEED_FLOOR",
    "InfeasibleMerge",
    "MergeEntry",
    "MergeList",
    "PreemptivePlanner",
]

#: Floor applied to crossing speeds when converting space to headway, m/s.
CROSSING_SPEED_FLOOR = 5.0
#: Candidate crossing ticks tried per vehicle before giving up.
MAX_SLOT_ATTEMPTS = 2000


class InfeasibleMerge(RuntimeError):
    """No admissible trajectory reaches a feasible merge slot."""


@dataclass(frozen=True)
class MergeEntry:
    vehicle: str
    crossing_tick: int
    crossing_speed: float
    length: float
    trajectory: Trajectory = field(compare=False, repr=False)


class MergeList:
    """Scheduled merge-point crossings, strictly ordered by crossing tick."""

    def __init__(self) -> None:
        self.entries: list[MergeEntry] = []

    def __len__(self) -> int:
        return len(self.entries)

    def insert(self, entry: MergeEntry) -> None:
        ticks = [e.crossing_tick for e in self.entries]
        if entry.crossing_tick in ticks:
            raise ValueError(f"duplicate crossing tick {entry.crossing_tick}")
        idx = 0
        while idx < len(ticks) and ticks[idx] < entry.crossing_tick:
            idx += 1
        self.entries.insert(idx, entry)

    def check_separation(self, additional_space: float, dt: float) -> None:
        """Assert the headway invariant between consecutive crossings."""
        for leader, follower in zip(self.entries, self.entries[1:]):
            space_len = leader.length + additional_space
            speed = max(leader.crossing_speed, CROSSING_SPEED_FLOOR)
            needed = space_len / speed
            got = (follower.crossing_tick - leader.crossing_tick) * dt
            if got + 1e-9 < needed:
                raise ValueError(
                    f"crossings {leader.vehicle}->{follower.vehicle} separated by "
                    f"{got:.2f}s < required {needed:.2f}s"
                )


class PreemptivePlanner:
    """Roadside manager state for the preemptive strategy.

    Owns the merge list, the per-vehicle scheduled trajectories, and a
    coordination manager whose approved schedule holds the cell claims.
    The submission window is not enforced by that manager: detected
    vehicles are already executing their continuous driving task, so their
    nearest claims necessarily start immediately.
    """

    def __init__(
        self,
        geometry: RoadGeometry,
        params: KraussParams,
        temporal_cfg: TemporalConfig,
        dt: float,
        cell_length: float,
        additional_space: float,
        manager: Optional[Manager] = None,
    ) -> None:
        self.geometry = geometry
        self.params = params
        self.dt = dt
        self.cell_length = cell_length
        self.additional_space = additional_space
        self.manager = manager or Manager(
            "rsu.0", temporal_cfg, enforce_submission_window=False
        )
        self.merge_list = MergeList()
        self.scheduled: dict[str, Trajectory] = {}
        self.approved_claims: dict[str, tuple[Task, ...]] = {}

    # -- helpers -----------------------------------------------------------

    def required_headway_ticks(self, leader_length: float, leader_speed: float) -> int:
        space_len = leader_length + self.additional_space
        speed = max(leader_speed, CROSSING_SPEED_FLOOR)
        return max(1, math.ceil(space_len / (speed * self.dt)))

    def _claims(self, trajectory: Trajectory, origin: str, length: float) -> list[Task]:
        return claims_for_trajectory(
            trajectory, origin, length, self.geometry, self.cell_length
        )

    def _entry_blocked(self, vehicle: VehicleState, now: int) -> bool:
        """Is the vehicle's current footprint already claimed by someone else?

        No future crossing delay can clear a conflict at the present tick,
        so this is checked once up front.
        """
        from ..spatial import discretize_claim

        lane = self.geometry.lane_at(vehicle.origin, vehicle.position)
        here = discretize_claim(
            vehicle.vehicle_id,
            lane,
            (vehicle.rear, vehicle.position),
            (now, now),
            self.cell_length,
        )
        return self.manager.schedule.has_conflicts(here)

    # -- spec surface ------------------------------------------------------

    def merge_into(
        self,
        vehicle: VehicleState,
        desired: Trajectory,
        additional_space: Optional[float] = None,
    ) -> tuple[Trajectory, list[Task]]:
        """Earliest feasible crossing at or after the desired one.

        Scans merge-list gaps in crossing order; within a gap the candidate
        tick is bumped until the rebuilt trajectory's claims are clean.
        Raises :class:`InfeasibleMerge` when no admissible delay profile can
        realize any open slot (approach too short for the required delay).
        """
        if additional_space is not None and additional_space != self.additional_space:
            raise ValueError("additional_space is fixed per planner instance")
        merge_x = self.geometry.merge_point
        t_des = desired.crossing_tick(merge_x)
        if t_des is None:
            raise InfeasibleMerge(
                f"{vehicle.vehicle_id}: free trajectory never reaches the merge point"
            )
        t_max = max_crossing_tick(
            vehicle.position, vehicle.speed, desired.start_tick,
            self.geometry, self.params, self.dt,
        )
        origin = vehicle.origin
        entries = self.merge_list.entries
        attempts = 0

        for gap_idx in range(len(entries) + 1):
            prev = entries[gap_idx - 1] if gap_idx > 0 else None
            nxt = entries[gap_idx] if gap_idx < len(entries) else None
            target = t_des
            if prev is not None:
                target = max(
                    target,
                    prev.crossing_tick
                    + self.required_headway_ticks(prev.length, prev.crossing_speed),
                )
            while nxt is None or target < nxt.crossing_tick:
                if target > t_max:
                    raise InfeasibleMerge(
                        f"{vehicle.vehicle_id}: cannot delay crossing to tick "
                        f"{target} (slowest admissible approach crosses at {t_max}); "
                        "the detection boundary sits too close to the merge point"
                    )
                attempts += 1
                if attempts > MAX_SLOT_ATTEMPTS:
                    raise InfeasibleMerge(
                        f"{vehicle.vehicle_id}: no conflict-free slot within "
                        f"{MAX_SLOT_ATTEMPTS} candidates"
                    )
                candidate = plan_arrival(
                    vehicle.position, vehicle.speed, desired.start_tick,
                    vehicle.vehicle_id, target, self.geometry, self.params, self.dt,
                )
                if candidate is None:
                    target += 1
                    continue
                own_speed = candidate.crossing_speed(merge_x)
                if nxt is not None and (
                    nxt.crossing_tick - target
                    < self.required_headway_ticks(vehicle.length, own_speed)
                ):
                    break  # slot too tight against the successor; next gap
                tasks = self._claims(candidate, origin, vehicle.length)
                if not self.manager.schedule.has_conflicts(tasks):
                    return candidate, tasks
                target += 1

        raise InfeasibleMerge(f"{vehicle.vehicle_id}: every merge gap is closed")

    def check_new_vehicle(
        self,
        vehicle: VehicleState,
        now: int,
        additional_space: Optional[float] = None,
    ) -> Trajectory:
        """Register a newly detected vehicle and commit its schedule.

        Mainline and ramp vehicles are handled identically.  Failures leave
        the planner untouched so the caller may retry on a later tick or
        fall back to car-following for the vehicle.
        """
        try:
            origin = parse_origin(vehicle.vehicle_id)
        except ValueError as err:
            raise IntentionRejected(RejectionReason.UNKNOWN_ENTITY, str(err)) from err

        if self._entry_blocked(vehicle, now):
            raise InfeasibleMerge(
                f"{vehicle.vehicle_id}: current footprint is claimed by another schedule"
            )

        desired = compose_trajectory(vehicle, now, self.geometry, self.params, self.dt)
        if len(self.merge_list) == 0:
            trajectory = desired
            tasks = self._claims(trajectory, origin, vehicle.length)
            if self.manager.schedule.has_conflicts(tasks):
                raise InfeasibleMerge(
                    f"{vehicle.vehicle_id}: free trajectory conflicts with "
                    "committed claims despite empty merge list"
                )
        else:
            trajectory, tasks = self.merge_into(vehicle, desired, additional_space)

        self.manager.register(vehicle.vehicle_id)
        try:
            outcome = self.manager.submit(
                Intention(vehicle.vehicle_id, tuple(tasks), shared_at=now), now
            )
        except IntentionRejected:
            self.manager.deregister(vehicle.vehicle_id)
            raise
        if outcome.was_altered:
            # The dry check promised a clean commit; never expected.
            self.manager.schedule.remove_entity_tasks(
                vehicle.vehicle_id, outcome.altered_intention.tasks
            )
            self.manager.deregister(vehicle.vehicle_id)
            raise IntentionRejected(
                RejectionReason.RESOLUTION_FAILURE,
                f"{vehicle.vehicle_id}: claims were altered on commit",
            )

        merge_x = self.geometry.merge_point
        self.merge_list.insert(
            MergeEntry(
                vehicle=vehicle.vehicle_id,
                crossing_tick=trajectory.crossing_tick(merge_x),
                crossing_speed=trajectory.crossing_speed(merge_x),
                length=vehicle.length,
                trajectory=trajectory,
            )
        )
        self.scheduled[vehicle.vehicle_id] = trajectory
        self.approved_claims[vehicle.vehicle_id] = tuple(
            outcome.altered_intention.tasks
        )
        return trajectory

    def release(self, vehicle_id: str) -> None:
        """Withdraw a vehicle's schedule and claims (e.g. after removal)."""
        claims = self.approved_claims.pop(vehicle_id, ())
        live = [t for t in claims if self.manager.schedule.contains(t)]
        if live:
            self.manager.schedule.remove_entity_tasks(vehicle_id, live)
        self.scheduled.pop(vehicle_id, None)
        self.manager.deregister(vehicle_id)
        self.merge_list.entries = [
            e for e in self.merge_list.entries if e.vehicle != vehicle_id
        ]

"""Per-tick trajectories: free-flow profiles, delayed arrivals, cell claims.

All profiles are sampled once per tick and integrated with the trapezoid
rule, ``x[k+1] = x[k] + (v[k] + v[k+1]) / 2 * dt``, so consecutive samples
are kinematically consistent to floating-point precision and speed changes
stay within the configured acceleration bounds by construction.

A delayed arrival is produced by one stretched profile family with a single
free parameter, the approach cruise speed: ramp from the current speed to
the cruise speed at the bounded rate, hold it to the merge point, then
resume free acceleration to the exit.  The crossing tick is monotone in the
cruise speed, so an exact target tick is found by bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from ..coordination import Task
from ..spatial import CellId, cell_index
from .geometry import MAIN_LANE, RAMP_LANE, RoadGeometry
from .vehicles import KraussParams, VehicleState

__all__ = [
    "Trajectory",
    "compose_trajectory",
    "free_profile",
    "plan_arrival",
    "max_crossing_tick",
    "claims_for_trajectory",
]

#: Slowest approach cruise speed the planner will schedule, m/s.
MIN_CRUISE_SPEED = 0.5


@dataclass
class Trajectory:
    """Sampled motion of one vehicle, one sample per tick from ``start_tick``.

    ``complete`` marks a profile extending to the scenario exit.
    """

    vehicle: str
    start_tick: int
    positions: np.ndarray
    speeds: np.ndarray
    complete: bool = True

    def __post_init__(self) -> None:
        if len(self.positions) != len(self.speeds):
            raise ValueError("positions and speeds must have equal length")
        if len(self.positions) == 0:
            raise ValueError("a trajectory needs at least one sample")

    def __len__(self) -> int:
        return len(self.positions)

    @property
    def end_tick(self) -> int:
        return self.start_tick + len(self.positions) - 1

    def index_at(self, tick: int) -> Optional[int]:
        idx = tick - self.start_tick
        if 0 <= idx < len(self.positions):
            return idx
        return None

    def position_at(self, tick: int) -> float:
        idx = self.index_at(tick)
        if idx is None:
            raise KeyError(f"tick {tick} outside [{self.start_tick}, {self.end_tick}]")
        return float(self.positions[idx])

    def speed_at(self, tick: int) -> float:
        idx = self.index_at(tick)
        if idx is None:
            raise KeyError(f"tick {tick} outside [{self.start_tick}, {self.end_tick}]")
        return float(self.speeds[idx])

    def crossing_index(self, x: float) -> Optional[int]:
        """Index of the first sample at or beyond ``x``, or None."""
        idx = int(np.searchsorted(self.positions, x, side="left"))
        return idx if idx < len(self.positions) else None

    def crossing_tick(self, x: float) -> Optional[int]:
        idx = self.crossing_index(x)
        return None if idx is None else self.start_tick + idx

    def crossing_speed(self, x: float) -> Optional[float]:
        idx = self.crossing_index(x)
        return None if idx is None else float(self.speeds[idx])

    def samples(self) -> Iterator[tuple[int, float, float]]:
        for k in range(len(self.positions)):
            yield self.start_tick + k, float(self.positions[k]), float(self.speeds[k])

    def validate(self, params: KraussParams, dt: float, tol: float = 1e-6) -> None:
        """Assert the kinematic-consistency invariants; raises ValueError."""
        pos, spd = self.positions, self.speeds
        if np.any(spd < -tol) or np.any(spd > params.v_max + tol):
            raise ValueError(f"{self.vehicle}: speed outside [0, v_max]")
        if np.any(np.diff(pos) < -tol):
            raise ValueError(f"{self.vehicle}: position decreases")
        dv = np.diff(spd)
        bound = max(params.a_accel, params.b_decel) * dt + tol
        if np.any(np.abs(dv) > bound):
            raise ValueError(f"{self.vehicle}: speed change exceeds acceleration bounds")
        mean_speed = 0.5 * (spd[:-1] + spd[1:])
        err = np.abs(np.diff(pos) - mean_speed * dt)
        if err.size and float(err.max()) > tol:
            raise ValueError(
                f"{self.vehicle}: trapezoid consistency violated by {float(err.max()):.3e} m"
            )


def _ramp_speeds(v0: float, v_target: float, rate: float, dt: float) -> np.ndarray:
    """Per-tick speeds moving from v0 to v_target at |dv| <= rate*dt, v0 excluded."""
    delta = v_target - v0
    if abs(delta) < 1e-12:
        return np.empty(0)
    n = math.ceil(abs(delta) / (rate * dt) - 1e-12)
    steps = v0 + math.copysign(rate * dt, delta) * np.arange(1, n + 1)
    return np.minimum(steps, v_target) if delta > 0 else np.maximum(steps, v_target)


def _integrate(x0: float, speeds: np.ndarray, dt: float) -> np.ndarray:
    increments = 0.5 * (speeds[:-1] + speeds[1:]) * dt
    return x0 + np.concatenate(([0.0], np.cumsum(increments)))


def _profile_until(
    x0: float,
    v0: float,
    cruise: float,
    until_x: float,
    params: KraussParams,
    dt: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Speed/position arrays from (x0, v0): ramp to ``cruise``, hold, stop at
    the first sample with position >= until_x (inclusive)."""
    rate = params.a_accel if cruise > v0 else params.b_decel
    ramp = _ramp_speeds(v0, cruise, rate, dt)
    speeds = np.concatenate(([v0], ramp))
    positions = _integrate(x0, speeds, dt)
    if positions[-1] < until_x:
        remaining = until_x - positions[-1]
        n_cruise = max(1, math.ceil(remaining / (cruise * dt) + 2)) if cruise > 0 else 0
        if cruise <= 0:
            raise ValueError("cruise speed must be positive to reach the target")
        speeds = np.concatenate((speeds, np.full(n_cruise, cruise)))
        positions = _integrate(x0, speeds, dt)
    idx = int(np.searchsorted(positions, until_x, side="left"))
    while idx >= len(positions):  # numeric slack: extend a little further
        speeds = np.concatenate((speeds, np.full(16, cruise)))
        positions = _integrate(x0, speeds, dt)
        idx = int(np.searchsorted(positions, until_x, side="left"))
    return speeds[: idx + 1], positions[: idx + 1]


def free_profile(
    x0: float,
    v0: float,
    from_tick: int,
    vehicle_id: str,
    geometry: RoadGeometry,
    params: KraussParams,
    dt: float,
) -> Trajectory:
    """Leader-free, noise-free motion: accelerate to v_max, cruise to exit."""
    exit_x = geometry.mainline_length
    if x0 >= exit_x:
        return Trajectory(vehicle_id, from_tick, np.array([x0]), np.array([v0]))
    speeds, positions = _profile_until(x0, v0, params.v_max, exit_x, params, dt)
    return Trajectory(vehicle_id, from_tick, positions, speeds, complete=True)


def compose_trajectory(
    vehicle: VehicleState,
    from_time: int,
    geometry: RoadGeometry,
    params: KraussParams,
    dt: float,
) -> Trajectory:
    """The vehicle's unimpeded trajectory from its current state to exit."""
    return free_profile(
        vehicle.position, vehicle.speed, from_time, vehicle.vehicle_id, geometry, params, dt
    )


def _stretched(
    x0: float,
    v0: float,
    from_tick: int,
    vehicle_id: str,
    cruise: float,
    geometry: RoadGeometry,
    params: KraussParams,
    dt: float,
) -> Trajectory:
    """Approach at ``cruise`` to the merge point, then free run to exit."""
    merge_x = geometry.merge_point
    a_speeds, a_positions = _profile_until(x0, v0, cruise, merge_x, params, dt)
    v_cross = float(a_speeds[-1])
    x_cross = float(a_positions[-1])
    resume = free_profile(
        x_cross, v_cross, from_tick + len(a_speeds) - 1, vehicle_id, geometry, params, dt
    )
    speeds = np.concatenate((a_speeds[:-1], resume.speeds))
    positions = np.concatenate((a_positions[:-1], resume.positions))
    return Trajectory(vehicle_id, from_tick, positions, speeds, complete=True)


def _approach_crossing_offset(
    x0: float, v0: float, cruise: float, merge_x: float, params: KraussParams, dt: float
) -> int:
    """Ticks from departure to the first sample at/beyond ``merge_x``.

    The ramp phase is short, so it is evaluated directly; the cruise phase
    advances by exactly ``cruise * dt`` per tick and is counted in closed
    form, keeping the bisection in ``plan_arrival`` cheap.
    """
    rate = params.a_accel if cruise > v0 else params.b_decel
    speeds = np.concatenate(([v0], _ramp_speeds(v0, cruise, rate, dt)))
    positions = _integrate(x0, speeds, dt)
    if positions[-1] >= merge_x:
        return int(np.searchsorted(positions, merge_x, side="left"))
    remaining = merge_x - float(positions[-1])
    extra = max(1, math.ceil(remaining / (cruise * dt) - 1e-9))
    return len(speeds) - 1 + extra


def max_crossing_tick(
    x0: float,
    v0: float,
    from_tick: int,
    geometry: RoadGeometry,
    params: KraussParams,
    dt: float,
) -> int:
    """Latest merge-point crossing tick the stretched family can realize."""
    return from_tick + _approach_crossing_offset(
        x0, v0, MIN_CRUISE_SPEED, geometry.merge_point, params, dt
    )


def plan_arrival(
    x0: float,
    v0: float,
    from_tick: int,
    vehicle_id: str,
    target_tick: int,
    geometry: RoadGeometry,
    params: KraussParams,
    dt: float,
) -> Optional[Trajectory]:
    """Trajectory crossing the merge point exactly at ``target_tick``, or None.

    None means the target is unrealizable from this state: earlier than the
    free-flow crossing, later than the slowest admissible approach, or (in
    rare tie cases) skipped by the tick quantization - callers then bump the
    target by one tick and retry.
    """
    merge_x = geometry.merge_point

    def crossing(cruise: float) -> int:
        return from_tick + _approach_crossing_offset(x0, v0, cruise, merge_x, params, dt)

    if crossing(params.v_max) > target_tick:
        return None
    if crossing(MIN_CRUISE_SPEED) < target_tick:
        return None

    # Bracket the whole cruise-speed interval realizing the target tick and
    # pick its midpoint: the interval edges are tie points where rounding
    # could flip the crossing by one tick, the middle is insensitive.
    lo, hi = MIN_CRUISE_SPEED, params.v_max
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if crossing(mid) <= target_tick:
            hi = mid
        else:
            lo = mid
    v_low = hi
    if crossing(params.v_max) <= target_tick - 1:
        lo, hi = v_low, params.v_max
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if crossing(mid) <= target_tick - 1:
                hi = mid
            else:
                lo = mid
        v_high = hi
    else:
        v_high = params.v_max
    cruise = 0.5 * (v_low + v_high)
    trajectory = _stretched(x0, v0, from_tick, vehicle_id, cruise, geometry, params, dt)
    if trajectory.crossing_tick(merge_x) != target_tick:
        return None
    return trajectory


def claims_for_trajectory(
    trajectory: Trajectory,
    origin: str,
    vehicle_length: float,
    geometry: RoadGeometry,
    cell_length: float,
) -> list[Task]:
    """Cell claims covering the vehicle's footprint along the trajectory.

    Each overlapped cell is claimed for the closed tick window between the
    front entering it and the rear leaving it.  Ramp-origin vehicles claim
    ramp-lane cells below the merge point and mainline cells from it onward;
    mainline vehicles claim mainline cells throughout.  Matches the per-tick
    ``spatial.discretize_claim`` union (property-tested).
    """
    fronts = trajectory.positions
    rears = fronts - vehicle_length
    n = len(fronts)
    first_cell = cell_index(float(rears[0]), cell_length)
    last_cell = cell_index(float(fronts[-1]), cell_length)

    cells = np.arange(first_cell, last_cell + 1)
    lower_edges = cells * cell_length
    upper_edges = lower_edges + cell_length
    entries = np.searchsorted(fronts, lower_edges, side="left")
    exits = np.searchsorted(rears, upper_edges, side="left") - 1

    tasks: list[Task] = []
    for cell, entry, exit_ in zip(cells.tolist(), entries.tolist(), exits.tolist()):
        if entry >= n:
            continue
        exit_ = min(max(exit_, entry), n - 1)
        if origin == "m":
            lane = MAIN_LANE
        else:
            lane = MAIN_LANE if cell * cell_length >= geometry.merge_point else RAMP_LANE
        tasks.append(
            Task(
                entity=trajectory.vehicle,
                location=CellId(lane, int(cell)),
                start_time=trajectory.start_tick + entry,
                end_time=trajectory.start_tick + exit_,
            )
        )
    return tasks

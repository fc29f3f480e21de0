"""Vehicle state, Krauss car-following, and the gap-acceptance stand-in.

The baseline lane-change behaviour of the reference simulator is a large
model; here ramp vehicles merge by plain gap acceptance against the
mainline stream, with an optional forced merge once a driver has waited out
their patience at the ramp end.  That forced merge is what lets the
baseline exhibit merge conflicts at saturation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .geometry import MAIN_LANE, RAMP_LANE

__all__ = [
    "VEHICLE_LENGTH",
    "GAP_LEAD_MIN",
    "GAP_LAG_MIN",
    "FORCED_MERGE_WAIT_S",
    "MERGE_ANTICIPATION_ZONE",
    "KraussParams",
    "VehicleState",
    "krauss_step",
    "baseline_merge_decision",
    "parse_origin",
]

#: Uniform vehicle length in meters (one cell).
VEHICLE_LENGTH = 5.0
#: Gap-acceptance thresholds for the baseline merge, meters.
GAP_LEAD_MIN = 10.0
GAP_LAG_MIN = 15.0
#: Patience at the ramp end before a forced merge fires, seconds.
FORCED_MERGE_WAIT_S = 5.0
#: Distance before the ramp end within which merging is anticipated, meters.
MERGE_ANTICIPATION_ZONE = 50.0


@dataclass(frozen=True)
class KraussParams:
    v_max: float = 33.3
    a_accel: float = 2.6
    b_decel: float = 4.5
    reaction_time: float = 1.0
    sigma: float = 0.5
    min_gap: float = 2.5

    def __post_init__(self) -> None:
        for name in ("v_max", "a_accel", "b_decel", "reaction_time", "min_gap"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.sigma <= 1.0:
            raise ValueError(f"sigma must lie in [0, 1], got {self.sigma}")


def parse_origin(vehicle_id: str) -> str:
    """Origin tag of a vehicle id: 'm' mainline or 'r' ramp."""
    if vehicle_id and vehicle_id[0] in ("m", "r"):
        return vehicle_id[0]
    raise ValueError(f"vehicle id {vehicle_id!r} carries no parseable origin tag")


@dataclass
class VehicleState:
    """One vehicle; ``position`` is the front bumper on the shared coordinate.

    The id's first character is the origin tag.  Simulation bookkeeping
    (lane, registration, schedule linkage) lives here too since the state is
    owned by a single-threaded world.
    """

    vehicle_id: str
    position: float
    speed: float
    entered_at: int
    acceleration: float = 0.0
    length: float = VEHICLE_LENGTH
    lane: str = MAIN_LANE
    # -- simulation bookkeeping --
    demanded_at: int = 0
    registered: bool = False
    fallback: bool = False
    merged: bool = False
    waiting: bool = False
    wait_ticks: int = 0
    defer_ticks: int = 0
    crossed_merge_at: Optional[int] = None

    @property
    def origin(self) -> str:
        return parse_origin(self.vehicle_id)

    @property
    def rear(self) -> float:
        return self.position - self.length

    def sort_key(self) -> tuple[str, int]:
        origin, _, serial = self.vehicle_id.partition(".")
        return (origin, int(serial))


def krauss_step(
    follower: VehicleState,
    leader: Optional[VehicleState],
    params: KraussParams,
    dt: float,
    noise: float,
) -> float:
    """Next speed of ``follower`` under the safe-speed rule.

    ``noise`` is one uniform [0, 1) draw; the dawdling term subtracts
    ``sigma * a_accel * dt * noise`` from the desired speed.  A negative gap
    clamps the safe speed to zero (the overlap itself is the harness's
    collision to record, not this function's).
    """
    if leader is None:
        v_safe = float("inf")
    else:
        gap = leader.rear - follower.position - params.min_gap
        v_mean = 0.5 * (follower.speed + leader.speed)
        v_safe = leader.speed + (gap - leader.speed * params.reaction_time) / (
            v_mean / params.b_decel + params.reaction_time
        )
        if v_safe < 0.0:
            v_safe = 0.0
    v_des = min(follower.speed + params.a_accel * dt, params.v_max, v_safe)
    return max(0.0, v_des - params.sigma * params.a_accel * dt * noise)


def baseline_merge_decision(
    ramp_vehicle: VehicleState,
    mainline_lead_gap: float,
    mainline_lag_gap: float,
    params: KraussParams,
    *,
    gap_lead_min: float = GAP_LEAD_MIN,
    gap_lag_min: float = GAP_LAG_MIN,
) -> bool:
    """Gap acceptance: merge iff both mainline gaps are wide enough.

    The caller supplies the gap to the mainline leader's rear and to the
    mainline lag vehicle's front, measured at the ramp vehicle's
    merge-equivalent position; missing neighbours are +inf.
    """
    return mainline_lead_gap >= gap_lead_min and mainline_lag_gap >= gap_lag_min

"""Two-lane on-ramp merge: geometry, kinematics, strategies, tick loop."""

from .geometry import MAIN_LANE, RAMP_LANE, RoadGeometry
from .merging import CROSSING_SPEED_FLOOR, InfeasibleMerge, MergeEntry, MergeList, PreemptivePlanner
from .simulation import SimEvent, VehicleRecord, World, advance_tick
from .trajectory import Trajectory, claims_for_trajectory, compose_trajectory, free_profile, plan_arrival
from .vehicles import (
    FORCED_MERGE_WAIT_S,
    GAP_LAG_MIN,
    GAP_LEAD_MIN,
    VEHICLE_LENGTH,
    KraussParams,
    VehicleState,
    baseline_merge_decision,
    krauss_step,
    parse_origin,
)

__all__ = [
    "CROSSING_SPEED_FLOOR",
    "FORCED_MERGE_WAIT_S",
    "GAP_LAG_MIN",
    "GAP_LEAD_MIN",
    "InfeasibleMerge",
    "KraussParams",
    "MAIN_LANE",
    "MergeEntry",
    "MergeList",
    "PreemptivePlanner",
    "RAMP_LANE",
    "RoadGeometry",
    "SimEvent",
    "Trajectory",
    "VEHICLE_LENGTH",
    "VehicleRecord",
    "VehicleState",
    "World",
    "advance_tick",
    "baseline_merge_decision",
    "claims_for_trajectory",
    "compose_trajectory",
    "free_profile",
    "krauss_step",
    "parse_origin",
]

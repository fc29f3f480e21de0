"""Road geometry of the two-lane on-ramp merge scenario.

Both lanes share one longitudinal coordinate: mainline positions run from 0
to ``mainline_length``; the ramp joins the mainline at ``merge_point`` and a
ramp position is expressed as its merge-equivalent coordinate, so the ramp
occupies [merge_point - ramp_length, merge_point).  Vehicles register with
the roadside manager when they cross ``detection_boundary``.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["MAIN_LANE", "RAMP_LANE", "RoadGeometry"]

MAIN_LANE = "main"
RAMP_LANE = "ramp"


@dataclass(frozen=True)
class RoadGeometry:
    mainline_length: float = 1000.0
    ramp_length: float = 300.0
    merge_point: float = 700.0
    detection_boundary: float = 300.0

    def __post_init__(self) -> None:
        if not (0 < self.detection_boundary < self.merge_point < self.mainline_length):
            raise ValueError(
                "geometry must satisfy 0 < detection_boundary < merge_point "
                f"< mainline_length, got {self}"
            )
        if self.ramp_length <= 0:
            raise ValueError("ramp_length must be positive")
        if self.ramp_entry < 0:
            raise ValueError(
                f"ramp entry {self.ramp_entry} m lies before the world origin"
            )

    @property
    def ramp_entry(self) -> float:
        """Merge-equivalent coordinate where ramp vehicles enter."""
        return self.merge_point - self.ramp_length

    def lane_at(self, origin: str, position: float) -> str:
        """Lane occupied by a vehicle of the given origin at ``position``."""
        if origin == "m":
            return MAIN_LANE
        return MAIN_LANE if position >= self.merge_point else RAMP_LANE

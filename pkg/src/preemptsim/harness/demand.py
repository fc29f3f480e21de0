"""Seeded Poisson demand generation."""

from __future__ import annotations

import math
from typing import Union

import numpy as np

__all__ = ["generate_demand"]

SeedLike = Union[int, np.random.SeedSequence]


def generate_demand(
    rate: float,
    duration: int,
    seed: SeedLike,
    *,
    injection_speed: float = 33.3,
    vehicle_length: float = 5.0,
    min_gap: float = 2.5,
    dt: float = 0.1,
) -> list[int]:
    """Entry ticks for Poisson arrivals at ``rate`` veh/h over ``duration`` ticks.

    Headways are exponential with the given mean, truncated from below at the
    minimum injection headway (one vehicle length plus the minimum gap at the
    injection speed).  Deterministic per seed.
    """
    if rate < 0:
        raise ValueError("rate must be >= 0")
    if rate == 0:
        return []
    rng = np.random.Generator(np.random.PCG64(seed))
    mean_headway = 3600.0 / rate
    min_headway = (vehicle_length + min_gap) / injection_speed
    ticks: list[int] = []
    t = 0.0
    horizon = duration * dt
    while True:
        t += max(float(rng.exponential(mean_headway)), min_headway)
        if t > horizon:
            return ticks
        ticks.append(max(1, int(math.floor(t / dt))))

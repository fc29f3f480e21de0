"""Experiment runners: single scenarios, strategy comparison, capacity sweep."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from ..traffic.simulation import SimEvent, World, advance_tick
from .config import ConfigError, ScenarioConfig
from .demand import generate_demand
from .metrics import ComparisonResult, MetricsReport, comparison_from, compute_metrics

__all__ = ["RunResult", "CapacitySweep", "build_world", "run_scenario", "compare", "measure_capacity"]

#: Throughput must reach this share of demand for the demand to count as served.
QUEUE_STABILITY_FRACTION = 0.95


@dataclass
class RunResult:
    config: ScenarioConfig
    metrics: MetricsReport
    trajectory_rows: list[tuple[str, str, int, float, float, str]]
    events: list[SimEvent]
    extras: dict


@dataclass
class CapacitySweep:
    rates: list[float]
    throughputs: list[float]
    served_fractions: list[float]
    served: list[bool]
    capacity: Optional[float]


def build_world(config: ScenarioConfig, record_trajectories: bool = True) -> World:
    config.validate()
    root = np.random.SeedSequence(config.seed)
    seed_main, seed_ramp, seed_noise = root.spawn(3)
    common = dict(
        duration=config.duration,
        injection_speed=config.krauss.v_max,
        vehicle_length=5.0,
        min_gap=config.krauss.min_gap,
        dt=config.dt,
    )
    main_arrivals = generate_demand(config.demand_main, seed=seed_main, **common)
    ramp_arrivals = generate_demand(config.demand_ramp, seed=seed_ramp, **common)
    return World(
        geometry=config.geometry,
        params=config.krauss,
        temporal=config.temporal,
        strategy=config.strategy,
        dt=config.dt,
        cell_length=config.cell_length,
        additional_space=config.additional_space,
        forced_merge=config.forced_merge,
        main_arrivals=main_arrivals,
        ramp_arrivals=ramp_arrivals,
        seed=seed_noise,
        record_trajectories=record_trajectories,
    )


def _served_fraction(world: World, config: ScenarioConfig) -> float:
    """Share of demand that crossed the merge, among vehicles demanded early
    enough to have reached it unimpeded before the run ended."""
    slack = int(config.geometry.merge_point / config.krauss.v_max / config.dt) + 100
    eligible = sum(1 for tick in world.arrival_ticks if tick <= config.duration - slack)
    if eligible == 0:
        return 1.0
    return min(1.0, len(world.merge_crossings) / eligible)


def run_scenario(config: ScenarioConfig, record_trajectories: bool = True) -> RunResult:
    """Run one scenario for its configured duration and report metrics."""
    world = build_world(config, record_trajectories)
    for _ in range(config.duration):
        advance_tick(world)
    metrics = compute_metrics(world, config)
    extras = {
        "demanded": world.demanded,
        "injected": world.injected,
        "forced_merges": world.forced_merges,
        "waiting_ticks": world.waiting_ticks,
        "merge_crossings": len(world.merge_crossings),
        "served_fraction": _served_fraction(world, config),
    }
    return RunResult(
        config=config,
        metrics=metrics,
        trajectory_rows=world.trajectory_rows,
        events=world.events,
        extras=extras,
    )


def compare(
    baseline_config: ScenarioConfig, preemptive_config: ScenarioConfig,
    record_trajectories: bool = True,
) -> tuple[ComparisonResult, RunResult, RunResult]:
    """Run a baseline/preemptive pair that differs only in strategy."""
    if baseline_config.strategy != "baseline" or preemptive_config.strategy != "preemptive":
        raise ConfigError("compare needs one baseline and one preemptive config")
    if replace(baseline_config, strategy="x") != replace(preemptive_config, strategy="x"):
        raise ConfigError("compare configs must be identical except for strategy")
    base_run = run_scenario(baseline_config, record_trajectories)
    pre_run = run_scenario(preemptive_config, record_trajectories)
    return comparison_from(base_run.metrics, pre_run.metrics), base_run, pre_run


def measure_capacity(config: ScenarioConfig, rate_grid: Sequence[float]) -> CapacitySweep:
    """Highest combined demand the merge serves with a stable queue.

    Each grid point scales the configured main/ramp demand split to the
    combined rate and runs the scenario.  A rate counts as served when the
    merge-point throughput reaches ``QUEUE_STABILITY_FRACTION`` of the
    demand, with demand measured as the vehicles that actually arrived with
    enough time to reach the merge (comparing against the nominal Poisson
    rate would drown the 5% margin in arrival noise at practical run
    lengths).  The capacity is the highest served rate; None when even the
    lowest rate backs up.
    """
    rates = list(rate_grid)
    if rates != sorted(rates):
        raise ConfigError("rate_grid must be ascending")
    total = config.demand_main + config.demand_ramp
    main_share = config.demand_main / total if total > 0 else 2.0 / 3.0
    throughputs: list[float] = []
    fractions: list[float] = []
    served: list[bool] = []
    for rate in rates:
        scenario = replace(
            config,
            demand_main=rate * main_share,
            demand_ramp=rate * (1.0 - main_share),
        )
        result = run_scenario(scenario, record_trajectories=False)
        fraction = result.extras["served_fraction"]
        throughputs.append(result.metrics.throughput)
        fractions.append(fraction)
        served.append(fraction >= QUEUE_STABILITY_FRACTION)
    capacity = None
    for rate, ok in zip(rates, served):
        if ok:
            capacity = rate
    return CapacitySweep(
        rates=rates,
        throughputs=throughputs,
        served_fractions=fractions,
        served=served,
        capacity=capacity,
    )

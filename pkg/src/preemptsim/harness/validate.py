"""Invariant suites over small instances, behind the ``validate`` subcommand.

Each suite returns quietly or raises AssertionError; the runner prints one
PASS/FAIL line per suite and maps any failure to exit code 2.
"""

from __future__ import annotations

import random
from dataclasses import replace

import numpy as np

from ..coordination import ApprovedSchedule, Intention, Task, is_conflicting, try_approve
from ..spatial import CellId, SpatialDomain, ManagerGroup
from ..temporal import TemporalConfig, ZoneLabel, classify_zone, is_submittable
from ..traffic.geometry import MAIN_LANE, RAMP_LANE
from ..traffic.simulation import advance_tick
from .config import ScenarioConfig
from .runner import build_world

__all__ = ["run_all", "SUITES"]


def _pairwise_conflict_free(tasks) -> None:
    for i in range(len(tasks)):
        for j in range(i + 1, len(tasks)):
            assert not is_conflicting(tasks[i], tasks[j]), (tasks[i], tasks[j])


def suite_temporal_partition() -> str:
    cfg = TemporalConfig(10, 3, 17)
    order = [
        ZoneLabel.INTENTION,
        ZoneLabel.PLANNING,
        ZoneLabel.CRITICAL,
        ZoneLabel.FROZEN,
        ZoneLabel.HISTORY,
    ]
    checked = 0
    for tau in range(-10, 80, 3):
        previous_rank = -1
        for t in range(-40, 80):
            label = classify_zone(t, tau, cfg)
            rank = order.index(label)
            assert rank >= previous_rank, "aging stepped backwards"
            previous_rank = rank
            submit_ok = is_submittable(t, tau, cfg)
            expected = label in (ZoneLabel.PLANNING, ZoneLabel.INTENTION) or (
                tau == t + cfg.submission_lead
            )
            assert submit_ok is expected
            checked += 1
    return f"{checked} grid points"


def suite_kernel_safety() -> str:
    rng = random.Random(2027)
    cfg = TemporalConfig(2, 1, 3)
    sequences = 50
    for _ in range(sequences):
        schedule = ApprovedSchedule()
        for e in range(rng.randint(1, 5)):
            entity = f"e{e}"
            tasks = []
            for _ in range(rng.randint(1, 4)):
                start = rng.randint(cfg.submission_lead, 60)
                tasks.append(
                    Task(entity, f"R{rng.randint(1, 3)}", start, start + rng.randint(0, 8))
                )
            try_approve(Intention(entity, tuple(tasks), 0), schedule, 0, cfg)
        _pairwise_conflict_free(schedule.all_tasks())
    return f"{sequences} randomized submission sequences"


def suite_spatial_handover() -> str:
    rng = random.Random(5)
    cfg = TemporalConfig(2, 1, 3)
    rounds = 20
    for _ in range(rounds):
        domains = [
            SpatialDomain("m0", 0.0, 500.0, frozenset({"m1"})),
            SpatialDomain("m1", 500.0, 1000.0, frozenset({"m0"})),
        ]
        group = ManagerGroup(domains, cfg, cell_length=5.0)
        for e in range(rng.randint(1, 4)):
            entity = f"e{e}"
            group.register(entity, rng.uniform(0, 999.9))
            tasks = [
                Task(
                    entity,
                    CellId("main", rng.randrange(200)),
                    start := rng.randint(cfg.submission_lead, 60),
                    start + rng.randint(0, 6),
                )
                for _ in range(rng.randint(1, 4))
            ]
            group.submit(entity, tasks, now=0)
        before = sorted(
            group.all_tasks(), key=lambda t: (t.entity, t.start_time, str(t.location))
        )
        for entity in sorted(group.registry):
            at = group.registry[entity]
            group.handover(entity, at, "m1" if at == "m0" else "m0")
        after = sorted(
            group.all_tasks(), key=lambda t: (t.entity, t.start_time, str(t.location))
        )
        assert before == after, "handover changed the task multiset"
        _pairwise_conflict_free(group.all_tasks())
    return f"{rounds} randomized handover rounds"


def suite_traffic_small_run() -> str:
    config = ScenarioConfig(
        demand_main=1200.0, demand_ramp=600.0, duration=1200, seed=11,
        strategy="preemptive",
    ).validate()
    world = build_world(config, record_trajectories=False)
    geo, params, dt = config.geometry, config.krauss, config.dt
    for _ in range(config.duration):
        advance_tick(world)
        for v in world.vehicles.values():
            if not v.registered or v.fallback:
                continue
            claims = {
                t.location: (t.start_time, t.end_time)
                for t in world.planner.approved_claims[v.vehicle_id]
            }
            lo = int(np.floor(v.rear / config.cell_length))
            hi = int(np.floor(v.position / config.cell_length))
            for idx in range(lo, hi + 1):
                lane = (
                    MAIN_LANE
                    if v.origin == "m" or idx * config.cell_length >= geo.merge_point
                    else RAMP_LANE
                )
                window = claims.get(CellId(lane, idx))
                assert window is not None, "occupied cell not claimed"
                assert window[0] <= world.tick <= window[1], "occupied outside claim window"
    assert world.collisions == 0, "preemptive run produced collisions"
    assert world.protocol_failures == 0, "preemptive run produced protocol failures"
    for trajectory in world.planner.scheduled.values():
        trajectory.validate(params, dt)

    # baseline free-flow calibration: a lone vehicle cruises at v_max
    free_cfg = replace(
        config,
        strategy="baseline",
        demand_main=1.0,
        demand_ramp=0.0,
        duration=3600,
        krauss=replace(params, sigma=0.0),
    )
    free_world = build_world(free_cfg, record_trajectories=True)
    for _ in range(free_cfg.duration):
        advance_tick(free_world)
    speeds = [row[4] for row in free_world.trajectory_rows[-50:]]
    assert not free_world.vehicles or all(
        abs(s - params.v_max) < 1e-6 for s in speeds
    ), "free-flow vehicle not at v_max"
    return "collision-free, claims consistent, trajectories valid, free flow calibrated"


SUITES = [
    ("temporal-partition", suite_temporal_partition),
    ("kernel-safety", suite_kernel_safety),
    ("spatial-handover", suite_spatial_handover),
    ("traffic-small-run", suite_traffic_small_run),
]


def run_all(verbose: bool = True) -> int:
    """Run every suite; returns 0 when all pass, 2 on any violation."""
    failures = 0
    for name, suite in SUITES:
        try:
            detail = suite()
        except AssertionError as err:
            failures += 1
            if verbose:
                print(f"FAIL {name}: {err}")
        else:
            if verbose:
                print(f"PASS {name}: {detail}")
    return 2 if failures else 0

import numpy as np
import pytest

from preemptsim.temporal import TemporalConfig
from preemptsim.traffic.geometry import MAIN_LANE, RAMP_LANE, RoadGeometry
from preemptsim.traffic.simulation import World, advance_tick
from preemptsim.traffic.vehicles import KraussParams

DT = 0.1
GEO = RoadGeometry()
TEMPORAL = TemporalConfig(100, 30, 170)


def make_world(
    strategy="baseline", *, main=(), ramp=(), sigma=0.5, forced_merge=True, seed=1, params=None
):
    return World(
        geometry=GEO,
        params=params or KraussParams(sigma=sigma),
        temporal=TEMPORAL,
        strategy=strategy,
        dt=DT,
        cell_length=5.0,
        additional_space=2.5,
        forced_merge=forced_merge,
        main_arrivals=main,
        ramp_arrivals=ramp,
        seed=seed,
    )


def run(world, ticks):
    for _ in range(ticks):
        advance_tick(world)
    return world


class TestEmptyWorld:
    def test_stays_empty(self):
        world = run(make_world(), 50)
        assert not world.vehicles
        assert not world.exited
        assert world.collisions == 0
        assert not world.trajectory_rows


class TestBaseline:
    def test_single_vehicle_free_flow_at_vmax(self):
        world = run(make_world(main=[0], sigma=0.0), 400)
        (record,) = world.exited
        # 1000 m at 33.3 m/s = 300.3 ticks; one tick of quantization slack
        assert record.exited_at - record.entered_at in (301, 302)
        speeds = [row[4] for row in world.trajectory_rows]
        assert max(speeds) <= KraussParams().v_max + 1e-9
        assert speeds[-1] == pytest.approx(33.3)

    def test_platoon_steady_state_spacing_constant(self):
        params = KraussParams(sigma=0.0)
        spacing = params.v_max * params.reaction_time + params.min_gap + 5.0
        world = make_world(sigma=0.0)
        from preemptsim.traffic.vehicles import VehicleState

        for i in range(3):
            vid = f"m.{i}"
            world.vehicles[vid] = VehicleState(
                vehicle_id=vid,
                position=300.0 - i * spacing,
                speed=params.v_max,
                entered_at=0,
                lane=MAIN_LANE,
            )
        gaps_before = None
        for _ in range(50):
            advance_tick(world)
            ordered = sorted(world.vehicles.values(), key=lambda v: v.position)
            gaps = [b.position - a.position for a, b in zip(ordered, ordered[1:])]
            if gaps_before is not None:
                assert gaps == pytest.approx(gaps_before, abs=1e-9)
            gaps_before = gaps

    def test_ramp_vehicle_merges_through_empty_mainline(self):
        world = run(make_world(ramp=[0], sigma=0.0), 400)
        kinds = [e.kind for e in world.events]
        assert "merged" in kinds and "exited" in kinds
        assert world.collisions == 0

    def test_forced_merge_conflict_is_recorded_as_collision(self):
        """Patience expired with a lag vehicle 1 m short of the ramp end:
        the forced merge lands overlapping it and both are removed."""
        from preemptsim.traffic.vehicles import VehicleState

        world = make_world(sigma=0.0, forced_merge=True)
        waiter = VehicleState("r.0", GEO.merge_point, 0.0, 0, lane=RAMP_LANE)
        waiter.waiting = True
        waiter.wait_ticks = world.patience_ticks
        world.vehicles["r.0"] = waiter
        # lag vehicle whose front already passed the merged vehicle's rear
        world.vehicles["m.0"] = VehicleState(
            "m.0", GEO.merge_point - 1.0, 0.0, 0, lane=MAIN_LANE
        )
        events = advance_tick(world)
        assert world.forced_merges == 1
        assert any(e.kind == "merged" and e.detail == "forced" for e in events)
        assert world.collisions == 1
        assert not world.vehicles, "both collision partners are removed"

    def test_no_forced_merge_waits_forever(self):
        """A slow dense mainline stream never opens an acceptance window
        (lead >= 10 and lag >= 15 need > 30 m of spacing), so without the
        forced-merge flag the ramp head waits indefinitely."""
        world = make_world(
            sigma=0.0,
            forced_merge=False,
            main=list(range(0, 2000, 10)),
            ramp=[400],  # arrives at the ramp end once the stream is steady
            params=KraussParams(v_max=20.0, sigma=0.0),
        )
        run(world, 2000)
        assert world.forced_merges == 0
        assert "r.0" in world.vehicles
        assert world.vehicles["r.0"].waiting
        assert world.vehicles["r.0"].position <= GEO.merge_point
        assert world.waiting_ticks > 500


class TestPreemptive:
    def test_single_vehicle_follows_schedule_exactly(self):
        world = make_world("preemptive", main=[0], sigma=0.0)
        run(world, 120)  # past detection at tick ~91
        v = world.vehicles["m.0"]
        assert v.registered
        traj = world.planner.scheduled["m.0"]
        for _ in range(30):
            advance_tick(world)
            v = world.vehicles["m.0"]
            assert v.position == traj.position_at(world.tick)
            assert v.speed == traj.speed_at(world.tick)

    def test_ramp_admission_registers_at_entry(self):
        world = make_world("preemptive", ramp=[5], sigma=0.0)
        run(world, 10)
        v = world.vehicles["r.0"]
        assert v.registered
        assert "r.0" in world.planner.scheduled

    def test_merge_event_emitted_on_scheduled_crossing(self):
        world = run(make_world("preemptive", ramp=[0], sigma=0.0), 400)
        merged = [e for e in world.events if e.kind == "merged"]
        assert merged and merged[0].detail == "scheduled"
        assert world.collisions == 0 and world.protocol_failures == 0

    def test_two_contesting_vehicles_never_collide(self):
        world = make_world("preemptive", main=[0], ramp=[0], sigma=0.0)
        run(world, 600)
        assert world.collisions == 0
        assert world.protocol_failures == 0
        assert len(world.exited) == 2

    def test_dense_traffic_no_collisions_or_failures(self):
        main = list(range(0, 1500, 15))   # 2400 veh/h
        ramp = list(range(0, 1500, 30))   # 1200 veh/h
        world = make_world("preemptive", main=main, ramp=ramp, seed=7)
        run(world, 2200)
        assert world.collisions == 0
        assert world.protocol_failures == 0
        assert len(world.exited) > 100

    def test_occupied_cells_subset_of_approved_claims(self):
        """Every registered vehicle's footprint lies inside its claims."""
        from preemptsim.spatial import CellId

        world = make_world("preemptive", main=[0, 20, 40], ramp=[10, 30], sigma=0.0)
        for _ in range(1500):
            advance_tick(world)
            if world.planner is None:
                continue
            for v in world.vehicles.values():
                if not v.registered or v.fallback:
                    continue
                claims = {
                    t.location: (t.start_time, t.end_time)
                    for t in world.planner.approved_claims[v.vehicle_id]
                }
                lo = int(np.floor(v.rear / 5.0))
                hi = int(np.floor(v.position / 5.0))
                for idx in range(lo, hi + 1):
                    lane = (
                        MAIN_LANE
                        if v.origin == "m" or idx * 5.0 >= GEO.merge_point
                        else RAMP_LANE
                    )
                    window = claims.get(CellId(lane, idx))
                    assert window is not None, (v.vehicle_id, idx, world.tick)
                    assert window[0] <= world.tick <= window[1]

    def test_determinism_bitwise(self):
        def snapshot():
            world = make_world("preemptive", main=list(range(0, 600, 25)), ramp=list(range(0, 600, 50)), seed=13)
            run(world, 900)
            return (
                tuple(world.trajectory_rows),
                tuple((e.tick, e.kind, e.vehicle_id, e.detail) for e in world.events),
            )

        assert snapshot() == snapshot()

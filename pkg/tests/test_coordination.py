import random

import pytest

from preemptsim.coordination import (
    ApprovedSchedule,
    Intention,
    IntentionRejected,
    Manager,
    RejectionReason,
    Task,
    alter,
    entity_find_action,
    entity_submit,
    freeze_check,
    is_conflicting,
    modify_task,
    try_approve,
)
from preemptsim.temporal import TemporalConfig

from _oracle import oracle_resolve, pairwise_conflicts

CFG = TemporalConfig(10, 3, 17)


def task(entity, loc, start, end):
    return Task(entity=entity, location=loc, start_time=start, end_time=end)


class TestIsConflicting:
    def test_overlap_same_resource(self):
        assert is_conflicting(task("a", "R1", 5, 10), task("b", "R1", 8, 12))

    def test_different_locations_never_conflict(self):
        assert not is_conflicting(task("a", "R1", 5, 10), task("b", "R2", 8, 12))

    def test_touching_endpoints_conflict(self):
        # 10 is contained in both closed intervals.
        assert is_conflicting(task("a", "R1", 5, 10), task("b", "R1", 10, 15))

    def test_disjoint_do_not_conflict(self):
        assert not is_conflicting(task("a", "R1", 5, 10), task("b", "R1", 11, 15))

    def test_containment_conflicts(self):
        assert is_conflicting(task("a", "R1", 0, 100), task("b", "R1", 40, 50))


class TestModifyTask:
    def test_shift_past_conflicting_end(self):
        shifted = modify_task(task("a", "R1", 5, 15), task("b", "R1", 8, 12))
        assert (shifted.start_time, shifted.end_time) == (13, 23)
        assert shifted.duration == 10
        assert shifted.entity == "a" and shifted.location == "R1"

    def test_zero_duration(self):
        shifted = modify_task(task("a", "R1", 5, 5), task("b", "R1", 5, 5))
        assert (shifted.start_time, shifted.end_time) == (6, 6)

    def test_chained_shifts(self):
        t = task("a", "R1", 5, 15)
        t = modify_task(t, task("b", "R1", 8, 12))       # -> [13, 23]
        t = modify_task(t, task("c", "R1", 20, 25))      # -> [26, 36]
        assert (t.start_time, t.end_time) == (26, 36)


class TestAlter:
    def test_empty_schedule_leaves_intention_alone(self):
        intention = Intention("e1", (task("e1", "R1", 40, 50),), shared_at=0)
        outcome = alter(intention, ApprovedSchedule())
        assert outcome.altered_intention == intention
        assert outcome.influenced_entities == frozenset()
        assert not outcome.was_altered

    def test_single_shift(self):
        schedule = ApprovedSchedule()
        schedule.add(task("e1", "R1", 40, 50))
        intention = Intention("e2", (task("e2", "R1", 45, 55),), shared_at=0)
        outcome = alter(intention, schedule)
        (approved,) = outcome.altered_intention.tasks
        assert (approved.start_time, approved.end_time) == (51, 61)
        assert outcome.influenced_entities == frozenset({"e1", "e2"})

    def test_intra_intention_conflicts_resolved(self):
        intention = Intention(
            "e1",
            (task("e1", "R1", 40, 50), task("e1", "R1", 45, 48)),
            shared_at=0,
        )
        outcome = alter(intention, ApprovedSchedule())
        assert not pairwise_conflicts(list(outcome.altered_intention.tasks))
        assert outcome.influenced_entities == frozenset({"e1"})

    def test_matches_oracle_on_small_instance(self):
        schedule = ApprovedSchedule()
        committed = [
            task("e1", "R1", 10, 20),
            task("e1", "R2", 5, 9),
            task("e2", "R1", 25, 30),
        ]
        schedule.add_all(committed)
        incoming = [task("e3", "R1", 15, 22), task("e3", "R2", 6, 7)]
        intention = Intention("e3", tuple(incoming), shared_at=0)
        outcome = alter(intention, schedule)
        assert list(outcome.altered_intention.tasks) == oracle_resolve(committed, incoming)

    def test_resolution_failure_on_livelock_budget(self):
        schedule = ApprovedSchedule()
        schedule.add_all(task("e1", "R1", i * 2, i * 2 + 1) for i in range(50))
        intention = Intention("e2", (task("e2", "R1", 0, 1),), shared_at=0)
        with pytest.raises(IntentionRejected) as err:
            alter(intention, schedule, max_iterations=10)
        assert err.value.reason is RejectionReason.RESOLUTION_FAILURE


class TestTryApprove:
    def test_far_future_task_approved_unaltered(self):
        schedule = ApprovedSchedule()
        intention = Intention("e1", (task("e1", "R1", 40, 50),), shared_at=5)
        outcome = try_approve(intention, schedule, now=5, cfg=CFG)
        assert not outcome.was_altered
        assert schedule.all_tasks() == [task("e1", "R1", 40, 50)]

    def test_late_submission_rejected(self):
        schedule = ApprovedSchedule()
        intention = Intention("e1", (task("e1", "R1", 40, 50),), shared_at=35)
        with pytest.raises(IntentionRejected) as err:
            try_approve(intention, schedule, now=35, cfg=CFG)
        assert err.value.reason is RejectionReason.TOO_LATE
        assert len(schedule) == 0, "rejected intentions leave the schedule untouched"

    def test_back_to_back_identical_intentions(self):
        schedule = ApprovedSchedule()
        first = Intention("e1", (task("e1", "R1", 40, 50),), shared_at=0)
        second = Intention("e2", (task("e2", "R1", 40, 50),), shared_at=0)
        out1 = try_approve(first, schedule, now=0, cfg=CFG)
        out2 = try_approve(second, schedule, now=0, cfg=CFG)
        assert not out1.was_altered
        (shifted,) = out2.altered_intention.tasks
        assert (shifted.start_time, shifted.end_time) == (51, 61)
        assert not pairwise_conflicts(schedule.all_tasks())

    def test_notifications_cover_submitter_and_influenced(self):
        schedule = ApprovedSchedule()
        try_approve(Intention("e1", (task("e1", "R1", 40, 50),), 0), schedule, 0, CFG)
        outcome = try_approve(
            Intention("e2", (task("e2", "R1", 45, 55),), 0), schedule, 0, CFG
        )
        recipients = [entity for entity, _ in outcome.notifications]
        assert recipients == ["e1", "e2"]
        for entity, tasks in outcome.notifications:
            assert tasks == schedule.tasks_for(entity)

    def test_conservation_of_intent(self):
        schedule = ApprovedSchedule()
        schedule.add(task("e1", "R1", 40, 50))
        intention = Intention("e2", (task("e2", "R1", 42, 47),), shared_at=0)
        outcome = try_approve(intention, schedule, now=0, cfg=CFG)
        for original, approved in outcome.deltas:
            assert original.entity == approved.entity
            assert original.location == approved.location
            assert original.duration == approved.duration


class TestFreezeCheck:
    def test_inside_horizon_immutable(self):
        schedule = ApprovedSchedule()
        t = task("e1", "R1", 5, 8)
        schedule.add(t)
        assert freeze_check(schedule, now=0, cfg=CFG, proposed_change=t) is False

    def test_beyond_horizon_mutable(self):
        schedule = ApprovedSchedule()
        t = task("e1", "R1", 11, 20)
        schedule.add(t)
        assert freeze_check(schedule, now=0, cfg=CFG, proposed_change=t) is True

    def test_straddling_task_immutable(self):
        schedule = ApprovedSchedule()
        t = task("e1", "R1", 9, 12)
        schedule.add(t)
        assert freeze_check(schedule, now=0, cfg=CFG, proposed_change=t) is False

    def test_unknown_target_is_a_precondition_error(self):
        with pytest.raises(ValueError):
            freeze_check(ApprovedSchedule(), 0, CFG, task("e1", "R1", 9, 12))


class TestEntityFindAction:
    def test_containment(self):
        approved = [task("e", "R", 0, 5), task("e", "R", 10, 20)]
        assert entity_find_action(approved, 12) == approved[1]

    def test_gap_returns_none(self):
        approved = [task("e", "R", 0, 5), task("e", "R", 10, 20)]
        assert entity_find_action(approved, 7) is None

    def test_closed_endpoint(self):
        approved = [task("e", "R", 0, 5), task("e", "R", 6, 20)]
        assert entity_find_action(approved, 6) == approved[1]

    def test_before_everything(self):
        assert entity_find_action([task("e", "R", 4, 5)], 2) is None


class TestEntitySubmit:
    def test_builds_intention(self):
        intention = entity_submit("e1", [task("e1", "R1", 40, 50)], now=0, cfg=CFG)
        assert intention.shared_at == 0
        assert intention.entity == "e1"

    def test_past_task_rejected(self):
        with pytest.raises(IntentionRejected) as err:
            entity_submit("e1", [task("e1", "R1", 3, 5)], now=10, cfg=CFG)
        assert err.value.reason is RejectionReason.TOO_LATE

    def test_empty_and_foreign_tasks_rejected(self):
        with pytest.raises(ValueError):
            entity_submit("e1", [], now=0, cfg=CFG)
        with pytest.raises(ValueError):
            entity_submit("e1", [task("e2", "R1", 40, 50)], now=0, cfg=CFG)


class TestManager:
    def test_unknown_entity_rejected(self):
        manager = Manager("m0", CFG)
        intention = Intention("ghost", (task("ghost", "R1", 40, 50),), 0)
        with pytest.raises(IntentionRejected) as err:
            manager.submit(intention, now=0)
        assert err.value.reason is RejectionReason.UNKNOWN_ENTITY

    def test_submit_commits_and_notifies(self):
        manager = Manager("m0", CFG)
        manager.register("e1")
        manager.submit(Intention("e1", (task("e1", "R1", 40, 50),), 0), now=0)
        assert manager.schedule.tasks_for("e1") == (task("e1", "R1", 40, 50),)
        assert manager.notifications[-1][0] == "e1"


def random_submission_sequence(rng, n_entities=5, n_tasks=4, n_resources=3, horizon=60):
    """One randomized scenario: a list of (entity, tasks) submissions."""
    cfg = TemporalConfig(2, 1, 3)
    submissions = []
    for e in range(rng.randint(1, n_entities)):
        entity = f"e{e}"
        tasks = []
        for _ in range(rng.randint(1, n_tasks)):
            start = rng.randint(cfg.submission_lead, horizon)
            duration = rng.randint(0, 8)
            loc = f"R{rng.randint(1, n_resources)}"
            tasks.append(task(entity, loc, start, start + duration))
        submissions.append((entity, tasks))
    return cfg, submissions


def run_kernel(cfg, submissions):
    schedule = ApprovedSchedule()
    for entity, tasks in submissions:
        try_approve(Intention(entity, tuple(tasks), 0), schedule, now=0, cfg=cfg)
    return schedule


def run_oracle(submissions):
    committed = []
    for entity, tasks in submissions:
        committed.extend(oracle_resolve(committed, tasks))
    return committed


class TestRandomizedOracleEquivalence:
    def test_kernel_equals_oracle(self):
        rng = random.Random(20240817)
        for _ in range(300):
            cfg, submissions = random_submission_sequence(rng)
            schedule = run_kernel(cfg, submissions)
            expected = sorted(run_oracle(submissions), key=lambda t: (t.entity, t.start_time, str(t.location)))
            actual = sorted(schedule.all_tasks(), key=lambda t: (t.entity, t.start_time, str(t.location)))
            assert actual == expected

    def test_schedule_safety(self):
        rng = random.Random(7)
        for _ in range(200):
            cfg, submissions = random_submission_sequence(rng)
            schedule = run_kernel(cfg, submissions)
            assert not pairwise_conflicts(schedule.all_tasks())

    def test_determinism(self):
        rng = random.Random(99)
        cfg, submissions = random_submission_sequence(rng)
        first = run_kernel(cfg, submissions).all_tasks()
        second = run_kernel(cfg, submissions).all_tasks()
        assert first == second

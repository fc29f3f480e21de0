"""Manager-side conflict resolution over shared task intentions.

Entities decompose what they intend to do into :class:`Task` claims, each
binding one spatial resource for a closed tick interval, and submit them
batched as an :class:`Intention`.  A :class:`Manager` is a serial decision
point: it validates submission timing, delays conflicting tasks until the
whole batch is conflict-free against everything already approved, commits
the result, and notifies every entity whose plans were involved.

Resolution is shift-only: a conflicting task is re-anchored to start one
tick after the task it collided with; locations, owners and durations never
change.  The delay rule is re-applied until a full pass over the batch finds
no conflict (a bounded fixed-point loop), scanning opponents in a fixed
order - ascending start time, ties broken by entity then location - so that
identical submission sequences always produce identical schedules.
"""

from __future__ import annotations

import enum
from bisect import bisect_right, insort
from dataclasses import dataclass, field, replace
from typing import Hashable, Iterable, Iterator, Optional, Sequence

from .temporal import TemporalConfig, is_submittable

__all__ = [
    "EntityId",
    "ResourceId",
    "Task",
    "Intention",
    "ApprovalOutcome",
    "ApprovedSchedule",
    "Manager",
    "RejectionReason",
    "IntentionRejected",
    "MAX_ALTER_ITERATIONS",
    "is_conflicting",
    "modify_task",
    "alter",
    "try_approve",
    "freeze_check",
    "entity_find_action",
    "entity_submit",
    "task_sort_key",
]

EntityId = str
ResourceId = Hashable

#: Fixed-point guard for the conflict-resolution loop.
MAX_ALTER_ITERATIONS = 1000


class RejectionReason(enum.Enum):
    TOO_LATE = "too-late"
    RESOLUTION_FAILURE = "resolution-failure"
    UNKNOWN_ENTITY = "unknown-entity"


class IntentionRejected(Exception):
    """An intention was refused; ``reason`` says why."""

    def __init__(self, reason: RejectionReason, message: str):
        super().__init__(message)
        self.reason = reason


@dataclass(frozen=True)
class Task:
    """A claim on one spatial resource over the closed interval
    [start_time, end_time], in ticks."""

    entity: EntityId
    location: ResourceId
    start_time: int
    end_time: int

    def __post_init__(self) -> None:
        if self.end_time < self.start_time:
            raise ValueError(
                f"task interval reversed: [{self.start_time}, {self.end_time}]"
            )

    @property
    def duration(self) -> int:
        return self.end_time - self.start_time

    @property
    def interval(self) -> tuple[int, int]:
        return (self.start_time, self.end_time)


def task_sort_key(task: Task) -> tuple[int, EntityId, str]:
    """Deterministic scan order: start time, then entity, then location."""
    return (task.start_time, task.entity, str(task.location))


@dataclass(frozen=True)
class Intention:
    """An ordered batch of tasks submitted by one entity at ``shared_at``."""

    entity: EntityId
    tasks: tuple[Task, ...]
    shared_at: int

    def __post_init__(self) -> None:
        if not self.tasks:
            raise ValueError("an intention must carry at least one task")
        foreign = [t for t in self.tasks if t.entity != self.entity]
        if foreign:
            raise ValueError(
                f"intention of {self.entity!r} contains tasks owned by "
                f"{sorted({t.entity for t in foreign})}"
            )


@dataclass(frozen=True)
class ApprovalOutcome:
    """Result of resolving one intention against a schedule.

    ``deltas`` pairs each submitted task with its approved version, in
    submission order.  ``influenced_entities`` holds every schedule entity
    whose task triggered a shift, plus the submitter iff anything of its own
    moved.  ``notifications`` lists (entity, its full approved task list)
    records for everyone who must be told, submitter included.
    """

    altered_intention: Intention
    influenced_entities: frozenset[EntityId]
    deltas: tuple[tuple[Task, Task], ...]
    notifications: tuple[tuple[EntityId, tuple[Task, ...]], ...] = ()

    @property
    def was_altered(self) -> bool:
        return any(original != approved for original, approved in self.deltas)


def is_conflicting(a: Task, b: Task) -> bool:
    """Closed-interval overlap on the same resource; touching endpoints conflict."""
    if a.location != b.location:
        return False
    return (
        b.start_time <= a.start_time <= b.end_time
        or b.start_time <= a.end_time <= b.end_time
        or a.start_time <= b.start_time <= a.end_time
        or a.start_time <= b.end_time <= a.end_time
    )


def modify_task(task: Task, conflicting: Task) -> Task:
    """Delay ``task`` to start one tick after ``conflicting`` ends.

    Duration, location and owner are preserved.
    """
    new_start = conflicting.end_time + 1
    return replace(task, start_time=new_start, end_time=new_start + task.duration)


class ApprovedSchedule:
    """Committed, conflict-free tasks indexed by entity and by location.

    Committed tasks are immutable: resolution only ever rewrites incoming
    copies, so anything inside the frozen horizon at commit time can never
    be observed with changed fields afterwards.
    """

    def __init__(self) -> None:
        self._by_entity: dict[EntityId, list[Task]] = {}
        # Per location: tasks plus a parallel start-time list for bisection,
        # and the longest duration seen (bounds the overlap search window).
        self._by_location: dict[ResourceId, list[Task]] = {}
        self._starts: dict[ResourceId, list[int]] = {}
        self._max_duration: dict[ResourceId, int] = {}

    def __len__(self) -> int:
        return sum(len(tasks) for tasks in self._by_entity.values())

    def entities(self) -> tuple[EntityId, ...]:
        return tuple(sorted(self._by_entity))

    def tasks_for(self, entity: EntityId) -> tuple[Task, ...]:
        return tuple(sorted(self._by_entity.get(entity, ()), key=task_sort_key))

    def all_tasks(self) -> list[Task]:
        """Every committed task, in deterministic scan order."""
        out: list[Task] = []
        for tasks in self._by_entity.values():
            out.extend(tasks)
        out.sort(key=task_sort_key)
        return out

    def add(self, task: Task) -> None:
        self._by_entity.setdefault(task.entity, []).append(task)
        bucket = self._by_location.setdefault(task.location, [])
        starts = self._starts.setdefault(task.location, [])
        idx = bisect_right(starts, task.start_time)
        # Stable within equal start times; order inside the bucket only has
        # to support windowed overlap scans, first_conflict re-sorts hits.
        starts.insert(idx, task.start_time)
        bucket.insert(idx, task)
        if task.duration > self._max_duration.get(task.location, 0):
            self._max_duration[task.location] = task.duration

    def add_all(self, tasks: Iterable[Task]) -> None:
        for task in tasks:
            self.add(task)

    def remove_entity_tasks(self, entity: EntityId, tasks: Iterable[Task]) -> None:
        """Withdraw specific committed tasks of one entity (handover support)."""
        doomed = list(tasks)
        mine = self._by_entity.get(entity, [])
        for task in doomed:
            mine.remove(task)
            bucket = self._by_location[task.location]
            pos = bucket.index(task)
            del bucket[pos]
            del self._starts[task.location][pos]
        if not mine:
            self._by_entity.pop(entity, None)

    def contains(self, task: Task) -> bool:
        return task in self._by_entity.get(task.entity, ())

    def _overlaps(self, task: Task) -> Iterator[Task]:
        bucket = self._by_location.get(task.location)
        if not bucket:
            return
        starts = self._starts[task.location]
        lookback = self._max_duration.get(task.location, 0)
        hi = bisect_right(starts, task.end_time)
        i = hi - 1
        while i >= 0 and starts[i] >= task.start_time - lookback:
            other = bucket[i]
            if other.end_time >= task.start_time:
                yield other
            i -= 1

    def first_conflict(self, task: Task, extra: Sequence[Task] = ()) -> Optional[Task]:
        """Earliest conflicting opponent in deterministic order, or None.

        ``extra`` lets callers include not-yet-committed tasks (the other
        tasks of the intention under resolution) in the scan.
        """
        hits = [other for other in self._overlaps(task) if is_conflicting(task, other)]
        hits.extend(o for o in extra if is_conflicting(task, o))
        if not hits:
            return None
        return min(hits, key=task_sort_key)

    def has_conflicts(self, tasks: Sequence[Task]) -> bool:
        """Would any of ``tasks`` conflict with the committed schedule?

        Dry query: the schedule is not modified and the tasks are not
        checked against each other.
        """
        return any(self.first_conflict(task) is not None for task in tasks)


def alter(
    intention: Intention,
    schedule: ApprovedSchedule,
    *,
    now: Optional[int] = None,
    cfg: Optional[TemporalConfig] = None,
    max_iterations: int = MAX_ALTER_ITERATIONS,
) -> ApprovalOutcome:
    """Delay tasks of ``intention`` until nothing conflicts any more.

    Tasks are checked against the committed schedule and against each other;
    each round shifts the first conflicting task (in submission order) past
    its earliest opponent, then rescans.  Raises ``IntentionRejected`` with
    ``RESOLUTION_FAILURE`` when no fixed point is reached within
    ``max_iterations`` or when - given ``now`` and ``cfg`` - a shift would
    land a task inside the frozen horizon.
    """
    tasks = list(intention.tasks)
    influenced: set[EntityId] = set()

    for _ in range(max_iterations):
        conflict: Optional[tuple[int, Task]] = None
        for i, task in enumerate(tasks):
            siblings = [tasks[j] for j in range(len(tasks)) if j != i]
            opponent = schedule.first_conflict(task, extra=siblings)
            if opponent is not None:
                conflict = (i, opponent)
                break
        if conflict is None:
            altered = replace(intention, tasks=tuple(tasks))
            deltas = tuple(zip(intention.tasks, tasks))
            return ApprovalOutcome(
                altered_intention=altered,
                influenced_entities=frozenset(influenced),
                deltas=deltas,
            )
        i, opponent = conflict
        new_task = modify_task(tasks[i], opponent)
        if now is not None and cfg is not None and new_task.start_time <= now + cfg.t_frozen:
            raise IntentionRejected(
                RejectionReason.RESOLUTION_FAILURE,
                f"shift of task at {tasks[i].start_time} would land at "
                f"{new_task.start_time}, inside the frozen horizon of tick {now}",
            )
        tasks[i] = new_task
        influenced.add(opponent.entity)
        influenced.add(intention.entity)

    raise IntentionRejected(
        RejectionReason.RESOLUTION_FAILURE,
        f"no conflict-free fixed point within {max_iterations} alterations",
    )


def try_approve(
    intention: Intention,
    schedule: ApprovedSchedule,
    now: int,
    cfg: TemporalConfig,
    *,
    enforce_submission_window: bool = True,
    max_iterations: int = MAX_ALTER_ITERATIONS,
) -> ApprovalOutcome:
    """Validate, resolve and commit one intention; all-or-nothing.

    Timing is checked first: every task must still be submittable at ``now``
    (unless the caller disables the window, e.g. for entities that are
    already executing a continuous activity).  The schedule is only touched
    after resolution succeeds.  Notification records for the submitter and
    every influenced entity are attached to the returned outcome.
    """
    if enforce_submission_window:
        for task in intention.tasks:
            if not is_submittable(now, task.start_time, cfg):
                raise IntentionRejected(
                    RejectionReason.TOO_LATE,
                    f"task at tick {task.start_time} shared at {now} misses the "
                    f"submission window (needs >= {now + cfg.submission_lead})",
                )
    outcome = alter(intention, schedule, now=now, cfg=cfg, max_iterations=max_iterations)
    schedule.add_all(outcome.altered_intention.tasks)
    recipients = sorted(set(outcome.influenced_entities) | {intention.entity})
    notifications = tuple((entity, schedule.tasks_for(entity)) for entity in recipients)
    return replace(outcome, notifications=notifications)


def freeze_check(
    schedule: ApprovedSchedule,
    now: int,
    cfg: TemporalConfig,
    proposed_change: Task,
) -> bool:
    """May the targeted scheduled task still be altered at ``now``?

    ``proposed_change`` must identify an existing committed task.  Permitted
    only when the task's interval lies entirely beyond ``now + t_frozen``; a
    task straddling the boundary is treated as fully immutable.
    """
    if not schedule.contains(proposed_change):
        raise ValueError(
            f"freeze_check target {proposed_change} is not a committed task"
        )
    return proposed_change.start_time > now + cfg.t_frozen


def entity_find_action(approved: Sequence[Task], t: int) -> Optional[Task]:
    """The unique approved task active at tick ``t``, or None when idle.

    ``approved`` must be internally conflict-free and sorted by start time.
    """
    starts = [task.start_time for task in approved]
    idx = bisect_right(starts, t) - 1
    if idx < 0:
        return None
    task = approved[idx]
    return task if task.end_time >= t else None


def entity_submit(
    entity: EntityId,
    tasks: Sequence[Task],
    now: int,
    cfg: TemporalConfig,
) -> Intention:
    """Bundle an entity's tasks into an intention shared at ``now``.

    Validates ownership, non-emptiness and the submission window for every
    task; routing of the intention to the manager(s) owning each location is
    the spatial layer's job (see ``spatial.split_tasks_by_domain``).
    """
    if not tasks:
        raise ValueError("cannot submit an empty task list")
    for task in tasks:
        if task.entity != entity:
            raise ValueError(f"task {task} does not belong to {entity!r}")
        if not is_submittable(now, task.start_time, cfg):
            raise IntentionRejected(
                RejectionReason.TOO_LATE,
                f"task at tick {task.start_time} is no longer submittable at {now}",
            )
    return Intention(entity=entity, tasks=tuple(tasks), shared_at=now)


class Manager:
    """Serial decision point owning one jurisdiction's approved schedule.

    Intentions handed to one manager are processed in a single total order;
    concurrency across a deployment comes from running multiple managers
    over disjoint jurisdictions (see the spatial layer).
    """

    def __init__(
        self,
        manager_id: str,
        cfg: TemporalConfig,
        *,
        enforce_submission_window: bool = True,
    ) -> None:
        self.manager_id = manager_id
        self.cfg = cfg
        self.enforce_submission_window = enforce_submission_window
        self.schedule = ApprovedSchedule()
        self.registered: set[EntityId] = set()
        #: flat log of (entity, approved tasks) notification records
        self.notifications: list[tuple[EntityId, tuple[Task, ...]]] = []

    def register(self, entity: EntityId) -> None:
        self.registered.add(entity)

    def deregister(self, entity: EntityId) -> None:
        self.registered.discard(entity)

    def submit(self, intention: Intention, now: int) -> ApprovalOutcome:
        if intention.entity not in self.registered:
            raise IntentionRejected(
                RejectionReason.UNKNOWN_ENTITY,
                f"{intention.entity!r} is not registered with manager "
                f"{self.manager_id!r}",
            )
        outcome = try_approve(
            intention,
            self.schedule,
            now,
            self.cfg,
            enforce_submission_window=self.enforce_submission_window,
        )
        self.notifications.extend(outcome.notifications)
        return outcome

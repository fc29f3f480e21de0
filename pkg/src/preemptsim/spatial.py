"""Spatial jurisdiction: domain tiling, cell discretization, routing, handover.

Road space is one-dimensional.  Managers own half-open extents [x_lo, x_hi)
that tile the world with no gaps or overlaps; task locations are (lane,
cell) pairs where cells are uniform ``cell_length`` slices found with the
floor rule.  A cell belongs to the domain containing its lower edge, so
every location routes to exactly one manager.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

from .coordination import ApprovalOutcome, EntityId, Intention, Manager, Task, entity_submit
from .temporal import TemporalConfig

__all__ = [
    "CellId",
    "SpatialDomain",
    "OutOfWorldError",
    "HandoverError",
    "HandoverAck",
    "ManagerGroup",
    "cell_index",
    "discretize_claim",
    "locate_manager",
    "validate_domains",
]


class CellId(NamedTuple):
    """One spatial resource: a ``cell_length`` slice of one lane."""

    lane: str
    index: int


class OutOfWorldError(ValueError):
    """A position fell outside every manager's extent."""


class HandoverError(ValueError):
    """A handover request violated the neighbor or registration rules."""


@dataclass(frozen=True)
class SpatialDomain:
    """One manager's jurisdiction: the half-open extent [x_lo, x_hi)."""

    manager_id: str
    x_lo: float
    x_hi: float
    neighbors: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if not self.x_lo < self.x_hi:
            raise ValueError(f"empty extent [{self.x_lo}, {self.x_hi})")

    def contains(self, position: float) -> bool:
        return self.x_lo <= position < self.x_hi


def validate_domains(domains: Sequence[SpatialDomain]) -> list[SpatialDomain]:
    """Check the seamless-tiling and neighbor-symmetry invariants.

    Returns the domains sorted by lower edge.
    """
    if not domains:
        raise ValueError("at least one domain is required")
    ordered = sorted(domains, key=lambda d: d.x_lo)
    ids = [d.manager_id for d in ordered]
    if len(set(ids)) != len(ids):
        raise ValueError(f"duplicate manager ids in {ids}")
    for left, right in zip(ordered, ordered[1:]):
        if left.x_hi != right.x_lo:
            raise ValueError(
                f"domains {left.manager_id!r} and {right.manager_id!r} do not "
                f"tile seamlessly: {left.x_hi} != {right.x_lo}"
            )
    by_id = {d.manager_id: d for d in ordered}
    for domain in ordered:
        for other in domain.neighbors:
            if other not in by_id:
                raise ValueError(f"unknown neighbor {other!r} of {domain.manager_id!r}")
            if domain.manager_id not in by_id[other].neighbors:
                raise ValueError(
                    f"neighbor relation not symmetric between "
                    f"{domain.manager_id!r} and {other!r}"
                )
    return ordered


def locate_manager(position: float, domains: Sequence[SpatialDomain]) -> str:
    """Manager id of the unique domain with x_lo <= position < x_hi."""
    for domain in domains:
        if domain.contains(position):
            return domain.manager_id
    raise OutOfWorldError(f"position {position} is outside every domain")


def cell_index(position: float, cell_length: float) -> int:
    """Floor rule mapping a longitudinal position to its cell."""
    if cell_length <= 0:
        raise ValueError("cell_length must be positive")
    return math.floor(position / cell_length)


def discretize_claim(
    entity: EntityId,
    lane: str,
    span: tuple[float, float],
    interval: tuple[int, int],
    cell_length: float,
) -> list[Task]:
    """One claim per cell overlapped by ``span``, each over the full interval.

    ``span`` is the closed spatial extent [x_a, x_b] being occupied and
    ``interval`` the closed tick interval [t_a, t_b] of the occupancy.
    """
    x_a, x_b = span
    t_a, t_b = interval
    if x_b < x_a:
        raise ValueError(f"span reversed: [{x_a}, {x_b}]")
    if t_b < t_a:
        raise ValueError(f"interval reversed: [{t_a}, {t_b}]")
    first = cell_index(x_a, cell_length)
    last = cell_index(x_b, cell_length)
    return [
        Task(entity=entity, location=CellId(lane, idx), start_time=t_a, end_time=t_b)
        for idx in range(first, last + 1)
    ]


@dataclass(frozen=True)
class HandoverAck:
    """Acknowledgment of a completed handover."""

    entity: EntityId
    from_manager: str
    to_manager: str
    moved: tuple[Task, ...]
    retained: tuple[Task, ...]


class ManagerGroup:
    """A federation of managers over a tiled 1-D world.

    Cross-domain intentions are split at submission time, one fragment per
    owning manager; the entity may act across a boundary only once every
    fragment is approved (joint-approval rule).  Handover is a two-party
    exchange: registration moves to the destination manager and the tasks
    lying in its extent move with it, unchanged.
    """

    def __init__(
        self,
        domains: Sequence[SpatialDomain],
        cfg: TemporalConfig,
        cell_length: float,
        *,
        enforce_submission_window: bool = True,
    ) -> None:
        self.domains = validate_domains(domains)
        self.cell_length = cell_length
        self.managers: dict[str, Manager] = {
            d.manager_id: Manager(
                d.manager_id, cfg, enforce_submission_window=enforce_submission_window
            )
            for d in self.domains
        }
        self._domain_by_id = {d.manager_id: d for d in self.domains}
        #: primary registration of each entity
        self.registry: dict[EntityId, str] = {}

    def locate(self, position: float) -> str:
        return locate_manager(position, self.domains)

    def manager_for_location(self, location: CellId) -> Manager:
        # A cell belongs to the domain holding its lower edge.
        return self.managers[self.locate(location.index * self.cell_length)]

    def register(self, entity: EntityId, position: float) -> str:
        manager_id = self.locate(position)
        self.registry[entity] = manager_id
        self.managers[manager_id].register(entity)
        return manager_id

    def split_tasks(self, tasks: Sequence[Task]) -> dict[str, list[Task]]:
        """Group tasks by the manager owning each task's location."""
        split: dict[str, list[Task]] = {}
        for task in tasks:
            manager = self.manager_for_location(task.location)
            split.setdefault(manager.manager_id, []).append(task)
        return split

    def submit(
        self,
        entity: EntityId,
        tasks: Sequence[Task],
        now: int,
    ) -> dict[str, ApprovalOutcome]:
        """Split, route and submit an entity's tasks; one outcome per manager.

        Fragments targeting a manager the entity is not yet known to are
        accompanied by a registration there (managers share information);
        the primary registration in ``registry`` is not changed.  Each
        fragment commits atomically per manager.
        """
        if entity not in self.registry:
            raise KeyError(f"{entity!r} is not registered with any manager")
        outcomes = {}
        for manager_id, fragment in self.split_tasks(tasks).items():
            manager = self.managers[manager_id]
            cfg = manager.cfg
            intention = entity_submit(entity, fragment, now, cfg) \
                if manager.enforce_submission_window \
                else Intention(entity=entity, tasks=tuple(fragment), shared_at=now)
            manager.register(entity)
            outcomes[manager_id] = manager.submit(intention, now)
        return outcomes

    def handover(
        self,
        entity: EntityId,
        from_id: str,
        to_id: str,
        pending: Optional[Sequence[Task]] = None,
    ) -> HandoverAck:
        """Move an entity's registration and in-destination tasks to a neighbor.

        ``pending`` defaults to everything the source manager has approved
        for the entity.  Tasks located in the destination extent transfer
        unchanged; tasks in the source extent stay put.
        """
        if from_id not in self.managers or to_id not in self.managers:
            raise HandoverError(f"unknown manager in handover {from_id!r} -> {to_id!r}")
        if to_id not in self._domain_by_id[from_id].neighbors:
            raise HandoverError(
                f"{to_id!r} is not a neighbor of {from_id!r}; handover rejected"
            )
        if self.registry.get(entity) != from_id:
            raise HandoverError(f"{entity!r} is not registered with {from_id!r}")

        source = self.managers[from_id]
        destination = self.managers[to_id]
        if pending is None:
            pending = source.schedule.tasks_for(entity)

        moved: list[Task] = []
        retained: list[Task] = []
        for task in pending:
            owner = self.manager_for_location(task.location).manager_id
            if owner == to_id:
                moved.append(task)
            else:
                retained.append(task)

        transferable = [t for t in moved if source.schedule.contains(t)]
        source.schedule.remove_entity_tasks(entity, transferable)
        destination.schedule.add_all(transferable)

        source.deregister(entity)
        destination.register(entity)
        self.registry[entity] = to_id
        return HandoverAck(
            entity=entity,
            from_manager=from_id,
            to_manager=to_id,
            moved=tuple(moved),
            retained=tuple(retained),
        )

    def all_tasks(self) -> list[Task]:
        """Union of every manager's committed tasks, deterministic order."""
        out: list[Task] = []
        for manager_id in sorted(self.managers):
            out.extend(self.managers[manager_id].schedule.all_tasks())
        return out

"""Temporal-zone geometry for preemptive coordination.

The planning calendar is the integer plane of (system tick ``t``, action
tick ``tau``): ``t`` is "now", ``tau`` is when a task would execute.  Three
configured widths partition that plane into five zones::

    tau <= t                                    history
    t < tau <= t + t_frozen                     frozen
    ... <= t + t_frozen + t_critical            critical
    ... <= t + t_frozen + t_critical + t_plan   planning
    beyond                                      intention

A task may be handed to a manager only while it is still far enough out,
``tau >= t + t_frozen + t_critical``; inside the frozen horizon nothing may
be altered any more.

Everything in this module is a pure function over integers and is safe to
call from any number of concurrent contexts.  Boundary ownership: each
boundary point belongs to the zone nearer the present (so ``tau == t`` is
history, ``tau == t + t_frozen`` is frozen, and so on), except that
submittability keeps the non-strict ``>=`` form above, which admits the
critical/planning boundary point itself.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

__all__ = [
    "TemporalConfig",
    "ZoneLabel",
    "PlanningDeadlines",
    "classify_zone",
    "is_submittable",
    "deadlines_for",
]


class ZoneLabel(enum.Enum):
    """One of the five regions of the (t, tau) plane."""

    HISTORY = "history"
    FROZEN = "frozen"
    CRITICAL = "critical"
    PLANNING = "planning"
    INTENTION = "intention"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


@dataclass(frozen=True)
class TemporalConfig:
    """Zone widths, in integer ticks; all strictly positive."""

    t_frozen: int
    t_critical: int
    t_planning: int

    def __post_init__(self) -> None:
        for name in ("t_frozen", "t_critical", "t_planning"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise TypeError(f"{name} must be an integer tick count, got {value!r}")
            if value <= 0:
                raise ValueError(f"{name} must be strictly positive, got {value}")

    @property
    def submission_lead(self) -> int:
        """Minimum ticks between sharing a task and executing it."""
        return self.t_frozen + self.t_critical

    @property
    def full_horizon(self) -> int:
        """Width of frozen + critical + planning together."""
        return self.t_frozen + self.t_critical + self.t_planning


@dataclass(frozen=True)
class PlanningDeadlines:
    """The four milestone ticks of one action's planning life cycle."""

    start_planning: int
    planning_start_deadline: int
    planning_finish_deadline: int
    execution: int


def classify_zone(t: int, tau: int, cfg: TemporalConfig) -> ZoneLabel:
    """Classify the action tick ``tau`` as seen from system tick ``t``.

    Total over all integer pairs; exactly one label per pair.
    """
    if tau <= t:
        return ZoneLabel.HISTORY
    if tau <= t + cfg.t_frozen:
        return ZoneLabel.FROZEN
    if tau <= t + cfg.submission_lead:
        return ZoneLabel.CRITICAL
    if tau <= t + cfg.full_horizon:
        return ZoneLabel.PLANNING
    return ZoneLabel.INTENTION


def is_submittable(t: int, tau: int, cfg: TemporalConfig) -> bool:
    """May a task executing at ``tau`` still be shared with a manager at ``t``?

    True iff ``tau >= t + t_frozen + t_critical``; the critical/planning
    boundary point itself is submittable.
    """
    return tau >= t + cfg.submission_lead


def deadlines_for(tau: int, cfg: TemporalConfig) -> PlanningDeadlines:
    """Milestone ticks for an action executing at ``tau``.

    Raises ``ValueError`` when the earliest milestone would be negative,
    i.e. the action is too imminent to ever have been plannable.
    """
    start_planning = tau - cfg.full_horizon
    if start_planning < 0:
        raise ValueError(
            f"action at tick {tau} cannot be planned: planning would have to "
            f"start at tick {start_planning}"
        )
    return PlanningDeadlines(
        start_planning=start_planning,
        planning_start_deadline=tau - cfg.submission_lead,
        planning_finish_deadline=tau - cfg.t_frozen,
        execution=tau,
    )

"""Preemptive intention-sharing coordination and on-ramp merge simulation.

The package has two layers:

* a generic coordination kernel (``temporal``, ``coordination``, ``spatial``)
  in which entities pre-share timed claims on spatial resources and a
  manager resolves conflicts before execution, and
* a road-traffic instantiation (``traffic``, ``harness``) that compares a
  Krauss car-following baseline with gap-acceptance merging against a
  preemptive trajectory-scheduling strategy on a two-lane on-ramp merge.
"""

from .temporal import PlanningDeadlines, TemporalConfig, ZoneLabel, classify_zone, deadlines_for, is_submittable
from .coordination import (
    ApprovalOutcome,
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

__version__ = "0.1.0"

__all__ = [
    "ApprovalOutcome",
    "ApprovedSchedule",
    "Intention",
    "IntentionRejected",
    "Manager",
    "PlanningDeadlines",
    "RejectionReason",
    "Task",
    "TemporalConfig",
    "ZoneLabel",
    "alter",
    "classify_zone",
    "deadlines_for",
    "entity_find_action",
    "entity_submit",
    "freeze_check",
    "is_conflicting",
    "is_submittable",
    "modify_task",
    "try_approve",
]

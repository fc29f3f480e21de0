"""Experiment harness: configuration, demand, metrics, runners, reports."""

from .config import TICK_SECONDS, ConfigError, ScenarioConfig, config_from_mapping, config_to_flat_dict, parse_config_file
from .demand import generate_demand
from .metrics import ComparisonResult, MetricsReport, compute_metrics, freeflow_ticks
from .runner import CapacitySweep, RunResult, build_world, compare, measure_capacity, run_scenario
from .report import stable_json, write_capacity_outputs, write_comparison_outputs, write_run_outputs

__all__ = [
    "CapacitySweep",
    "ComparisonResult",
    "ConfigError",
    "MetricsReport",
    "RunResult",
    "ScenarioConfig",
    "TICK_SECONDS",
    "build_world",
    "compare",
    "compute_metrics",
    "config_from_mapping",
    "config_to_flat_dict",
    "freeflow_ticks",
    "generate_demand",
    "measure_capacity",
    "parse_config_file",
    "run_scenario",
    "stable_json",
    "write_capacity_outputs",
    "write_comparison_outputs",
    "write_run_outputs",
]

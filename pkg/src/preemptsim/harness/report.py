"""File outputs: stable metrics.json, delimited dumps, rendered figures.

Every floating-point value is written with six decimal places and lines end
with a line feed, so identical runs produce byte-identical files.  Figures
are rendered next to the delimited output: a time-space diagram per run, a
bar comparison for strategy pairs, and a demand/throughput curve for
capacity sweeps.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Any, Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .config import ScenarioConfig, config_to_flat_dict
from .metrics import ComparisonResult, MetricsReport
from .runner import CapacitySweep, RunResult

__all__ = [
    "stable_json",
    "write_run_outputs",
    "write_comparison_outputs",
    "write_capacity_outputs",
]

ORIGIN_COLORS = {"m": "#3b6ea5", "r": "#d9782d"}


def _fmt(value: Any) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            return "null"
        return f"{value:.6f}"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, dict):
        inner = ", ".join(f"{_fmt(str(k))}: {_fmt(v)}" for k, v in value.items())
        return "{" + inner + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {type(value)!r}")


def stable_json(payload: dict) -> str:
    """Render a dict as JSON with insertion order and fixed float formatting."""

    def render(obj: Any, indent: int) -> str:
        pad = "  " * indent
        if isinstance(obj, dict):
            if not obj:
                return "{}"
            rows = [
                f'{pad}  {_fmt(str(k))}: {render(v, indent + 1)}' for k, v in obj.items()
            ]
            return "{\n" + ",\n".join(rows) + "\n" + pad + "}"
        return _fmt(obj)

    return render(payload, 0) + "\n"


def metrics_dict(metrics: MetricsReport) -> dict:
    return {
        "mean_delay": float(metrics.mean_delay),
        "throughput": float(metrics.throughput),
        "collisions": metrics.collisions,
        "vehicles_completed": metrics.vehicles_completed,
        "protocol_failures": metrics.protocol_failures,
    }


def write_trajectories_csv(rows: Sequence[tuple], path: Path) -> None:
    with path.open("w", newline="") as fh:
        fh.write("vehicle_id,origin,tick,position_m,speed_mps,lane\n")
        for vehicle_id, origin, tick, position, speed, lane in rows:
            fh.write(f"{vehicle_id},{origin},{tick},{position:.6f},{speed:.6f},{lane}\n")


def write_events_csv(events: Sequence, path: Path) -> None:
    with path.open("w", newline="") as fh:
        fh.write("tick,event,vehicle_id,detail\n")
        for event in events:
            fh.write(f"{event.tick},{event.kind},{event.vehicle_id},{event.detail}\n")


def _time_space_figure(result: RunResult, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(9, 5.5))
    dt = result.config.dt
    per_vehicle: dict[str, tuple[list[float], list[float]]] = {}
    for vehicle_id, origin, tick, position, _speed, _lane in result.trajectory_rows:
        xs, ys = per_vehicle.setdefault(vehicle_id, ([], []))
        xs.append(tick * dt)
        ys.append(position)
    for vehicle_id, (xs, ys) in per_vehicle.items():
        ax.plot(xs, ys, lw=0.6, alpha=0.7, color=ORIGIN_COLORS[vehicle_id[0]])
    geo = result.config.geometry
    ax.axhline(geo.merge_point, color="k", ls="--", lw=0.8)
    ax.axhline(geo.detection_boundary, color="gray", ls=":", lw=0.8)
    ax.annotate("merge point", (0.01, geo.merge_point + 5), xycoords=("axes fraction", "data"), fontsize=8)
    ax.annotate("detection", (0.01, geo.detection_boundary + 5), xycoords=("axes fraction", "data"), fontsize=8)
    ax.set_xlabel("time [s]")
    ax.set_ylabel("position [m]")
    ax.set_title(f"time-space diagram ({result.config.strategy})")
    handles = [
        plt.Line2D([0], [0], color=ORIGIN_COLORS["m"], label="mainline"),
        plt.Line2D([0], [0], color=ORIGIN_COLORS["r"], label="ramp"),
    ]
    ax.legend(handles=handles, loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def _comparison_figure(comparison: ComparisonResult, path: Path) -> None:
    fig, axes = plt.subplots(1, 3, figsize=(10, 3.4))
    labels = ["baseline", "preemptive"]
    colors = ["#888888", "#2a9d8f"]
    panels = [
        ("mean delay [s]", [comparison.baseline.mean_delay, comparison.preemptive.mean_delay]),
        ("throughput [veh/h]", [comparison.baseline.throughput, comparison.preemptive.throughput]),
        ("collisions", [comparison.baseline.collisions, comparison.preemptive.collisions]),
    ]
    for ax, (title, values) in zip(axes, panels):
        ax.bar(labels, values, color=colors)
        ax.set_title(title, fontsize=10)
        ax.tick_params(labelsize=8)
    if comparison.delay_reduction is not None:
        fig.suptitle(
            f"delay reduction {comparison.delay_reduction:.1%}", fontsize=10, y=1.02
        )
    fig.tight_layout()
    fig.savefig(path, dpi=130, bbox_inches="tight")
    plt.close(fig)


def _capacity_figure(
    sweeps: dict[str, CapacitySweep], path: Path
) -> None:
    fig, ax = plt.subplots(figsize=(7, 4.4))
    styles = {"baseline": ("#888888", "o"), "preemptive": ("#2a9d8f", "s")}
    for strategy, sweep in sweeps.items():
        color, marker = styles.get(strategy, ("#3b6ea5", "^"))
        ax.plot(sweep.rates, sweep.throughputs, marker=marker, color=color, label=strategy)
    grid = next(iter(sweeps.values())).rates
    ax.plot(grid, [0.95 * r for r in grid], ls="--", color="k", lw=0.8, label="95% of demand")
    ax.set_xlabel("combined demand [veh/h]")
    ax.set_ylabel("throughput [veh/h]")
    ax.set_title("capacity sweep")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def write_run_outputs(result: RunResult, out_dir: str | Path) -> Path:
    """metrics.json + trajectories.csv + events.csv + time_space.png."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    payload = {
        "kind": "run",
        "strategy": result.config.strategy,
        "config": config_to_flat_dict(result.config),
        "metrics": metrics_dict(result.metrics),
        "extras": dict(result.extras),
    }
    (out / "metrics.json").write_text(stable_json(payload))
    write_trajectories_csv(result.trajectory_rows, out / "trajectories.csv")
    write_events_csv(result.events, out / "events.csv")
    if result.trajectory_rows:
        _time_space_figure(result, out / "time_space.png")
    return out


def write_comparison_outputs(
    comparison: ComparisonResult,
    baseline_run: RunResult,
    preemptive_run: RunResult,
    out_dir: str | Path,
) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    shared_config = config_to_flat_dict(baseline_run.config)
    shared_config.pop("strategy", None)  # the pair spans both strategies
    payload = {
        "kind": "comparison",
        "config": shared_config,
        "baseline": metrics_dict(comparison.baseline),
        "preemptive": metrics_dict(comparison.preemptive),
        "delay_reduction": comparison.delay_reduction,
        "capacity_ratio": comparison.capacity_ratio,
    }
    (out / "metrics.json").write_text(stable_json(payload))
    write_run_outputs(baseline_run, out / "baseline")
    write_run_outputs(preemptive_run, out / "preemptive")
    _comparison_figure(comparison, out / "comparison.png")
    return out


def write_capacity_outputs(
    sweeps: dict[str, CapacitySweep],
    config: ScenarioConfig,
    out_dir: str | Path,
) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    payload: dict = {"kind": "capacity", "config": config_to_flat_dict(config)}
    for strategy, sweep in sweeps.items():
        payload[strategy] = {
            "rates": [float(r) for r in sweep.rates],
            "throughputs": [float(t) for t in sweep.throughputs],
            "served_fractions": [float(f) for f in sweep.served_fractions],
            "served": list(sweep.served),
            "capacity": sweep.capacity,
        }
    if "baseline" in sweeps and "preemptive" in sweeps:
        base_cap = sweeps["baseline"].capacity
        pre_cap = sweeps["preemptive"].capacity
        ratio = None
        if base_cap and pre_cap:
            ratio = pre_cap / base_cap
        payload["capacity_ratio"] = ratio
    (out / "metrics.json").write_text(stable_json(payload))
    _capacity_figure(sweeps, out / "capacity.png")
    return out

"""Independent mean-delay recomputation from a trajectory dump.

Reads ``metrics.json`` (for the scenario parameters and the reported value)
and ``trajectories.csv``, then recomputes the mean delay from nothing but
the dump: per vehicle, travel ticks between its first row and its exit row,
minus the free-flow traversal integrated here with a plain Python loop
(deliberately not the simulator's vectorized path).

Usage: ``python -m preemptsim.recompute <out_dir>`` - exits 0 when the
recomputed value matches the report within 1e-9 s.
"""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

__all__ = ["recompute_mean_delay", "main"]


def _freeflow_ticks_loop(
    x0: float, v0: float, exit_x: float, v_max: float, a_accel: float, dt: float
) -> int:
    ticks = 0
    x, v = x0, v0
    while x < exit_x:
        v_next = min(v + a_accel * dt, v_max)
        x += 0.5 * (v + v_next) * dt
        v = v_next
        ticks += 1
    return ticks


def recompute_mean_delay(out_dir: str | Path) -> tuple[float, float]:
    """Returns (reported mean delay, recomputed mean delay), in seconds."""
    out = Path(out_dir)
    meta = json.loads((out / "metrics.json").read_text())
    cfg = meta["config"]
    reported = float(meta["metrics"]["mean_delay"])
    exit_x = float(cfg["mainline_length"])
    v_max = float(cfg["v_max"])
    a_accel = float(cfg["a_accel"])
    duration = int(cfg["duration"])
    dt = 0.1
    warmup = duration // 10

    first: dict[str, tuple[int, float, float]] = {}
    last: dict[str, tuple[int, float]] = {}
    with (out / "trajectories.csv").open() as fh:
        for row in csv.DictReader(fh):
            vid = row["vehicle_id"]
            tick = int(row["tick"])
            pos = float(row["position_m"])
            speed = float(row["speed_mps"])
            if vid not in first:
                first[vid] = (tick, pos, speed)
            last[vid] = (tick, pos)

    freeflow_cache: dict[tuple[float, float], int] = {}
    delays: list[float] = []
    for vid, (tick0, pos0, speed0) in first.items():
        exit_tick, exit_pos = last[vid]
        if exit_pos < exit_x or exit_tick < warmup:
            continue  # never exited, or exited inside the warm-up window
        key = (pos0, speed0)
        if key not in freeflow_cache:
            freeflow_cache[key] = _freeflow_ticks_loop(pos0, speed0, exit_x, v_max, a_accel, dt)
        delays.append((exit_tick - tick0 - freeflow_cache[key]) * dt)

    recomputed = sum(delays) / len(delays) if delays else 0.0
    # the report carries six decimal places; compare at that precision
    return reported, float(f"{recomputed:.6f}")


def main(argv: list[str] | None = None) -> int:
    args = sys.argv[1:] if argv is None else argv
    if len(args) != 1:
        print("usage: python -m preemptsim.recompute <out_dir>", file=sys.stderr)
        return 1
    reported, recomputed = recompute_mean_delay(args[0])
    delta = abs(reported - recomputed)
    print(f"reported={reported:.9f}s recomputed={recomputed:.9f}s |delta|={delta:.3e}s")
    return 0 if delta <= 1e-9 else 1


if __name__ == "__main__":
    raise SystemExit(main())

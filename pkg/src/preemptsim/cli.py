"""Command-line interface.

Subcommands: ``run`` (one scenario), ``compare`` (baseline vs preemptive on
one config), ``capacity`` (demand sweep for both strategies), ``validate``
(invariant suites).  Every scenario field is reachable as a flag; a plain
``key = value`` file can seed the configuration and explicit flags override
it.  Exit codes: 0 success, 1 configuration error, 2 invariant violation.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .harness.config import ConfigError, ScenarioConfig, config_from_mapping, parse_config_file
from .harness.runner import compare, measure_capacity, run_scenario
from .harness.report import (
    write_capacity_outputs,
    write_comparison_outputs,
    write_run_outputs,
)

__all__ = ["main", "build_parser"]

_CONFIG_FLAGS: list[tuple[str, type, str]] = [
    ("mainline_length", float, "mainline length [m]"),
    ("ramp_length", float, "ramp length [m]"),
    ("merge_point", float, "mainline coordinate of the ramp junction [m]"),
    ("detection_boundary", float, "where vehicles register with the manager [m]"),
    ("v_max", float, "speed limit [m/s]"),
    ("a_accel", float, "maximum acceleration [m/s^2]"),
    ("b_decel", float, "comfortable deceleration [m/s^2]"),
    ("reaction_time", float, "car-following reaction time [s]"),
    ("sigma", float, "driver imperfection in [0,1]"),
    ("min_gap", float, "standstill gap [m]"),
    ("t_frozen", int, "frozen-zone width [ticks]"),
    ("t_critical", int, "critical-zone width [ticks]"),
    ("t_planning", int, "planning-zone width [ticks]"),
    ("demand_main", float, "mainline demand [veh/h]"),
    ("demand_ramp", float, "ramp demand [veh/h]"),
    ("duration", int, "run length [ticks]"),
    ("seed", int, "random seed"),
    ("additional_space", float, "extra spacing behind a merge leader [m]"),
    ("cell_length", float, "conflict cell length [m]"),
]


def _add_config_flags(parser: argparse.ArgumentParser, with_strategy: bool) -> None:
    parser.add_argument("--config", metavar="FILE", help="key = value scenario file")
    parser.add_argument("--out", metavar="DIR", default="out", help="output directory")
    for name, kind, help_text in _CONFIG_FLAGS:
        parser.add_argument(f"--{name.replace('_', '-')}", type=kind, dest=name, help=help_text)
    group = parser.add_mutually_exclusive_group()
    group.add_argument(
        "--forced-merge", dest="forced_merge", action="store_const", const=True,
        help="ramp vehicles merge anyway once patience runs out (default)",
    )
    group.add_argument(
        "--no-forced-merge", dest="forced_merge", action="store_const", const=False,
        help="ramp vehicles wait indefinitely for an acceptable gap",
    )
    if with_strategy:
        parser.add_argument(
            "--strategy", choices=("baseline", "preemptive"), help="strategy to run"
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="preemptsim",
        description="Preemptive merge coordination: simulate, compare, sweep.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one scenario and write its report")
    _add_config_flags(run_p, with_strategy=True)

    cmp_p = sub.add_parser("compare", help="run baseline and preemptive on one config")
    _add_config_flags(cmp_p, with_strategy=False)

    cap_p = sub.add_parser("capacity", help="capacity sweep over a demand grid")
    _add_config_flags(cap_p, with_strategy=False)
    cap_p.add_argument(
        "--rates",
        default="600,1200,1800,2400,3000,3600,4200,4800",
        help="comma-separated combined demands [veh/h], ascending",
    )

    sub.add_parser("validate", help="run the invariant suites on small instances")
    return parser


def _config_from_args(args: argparse.Namespace) -> ScenarioConfig:
    base = ScenarioConfig()
    if args.config:
        base = config_from_mapping(parse_config_file(args.config), base)
    overrides = {
        name: getattr(args, name)
        for name, _, _ in _CONFIG_FLAGS
        if getattr(args, name, None) is not None
    }
    if getattr(args, "forced_merge", None) is not None:
        overrides["forced_merge"] = args.forced_merge
    if getattr(args, "strategy", None) is not None:
        overrides["strategy"] = args.strategy
    return config_from_mapping(overrides, base).validate()


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            return run_validate()
        config = _config_from_args(args)
        if args.command == "run":
            result = run_scenario(config)
            out = write_run_outputs(result, args.out)
            m = result.metrics
            print(
                f"{config.strategy}: mean_delay={m.mean_delay:.3f}s "
                f"throughput={m.throughput:.1f}veh/h collisions={m.collisions} "
                f"completed={m.vehicles_completed} protocol_failures={m.protocol_failures}"
            )
            print(f"outputs in {out}")
        elif args.command == "compare":
            comparison, base_run, pre_run = compare(
                replace(config, strategy="baseline"),
                replace(config, strategy="preemptive"),
            )
            out = write_comparison_outputs(comparison, base_run, pre_run, args.out)
            reduction = (
                "n/a" if comparison.delay_reduction is None
                else f"{comparison.delay_reduction:.1%}"
            )
            print(
                f"baseline delay {comparison.baseline.mean_delay:.3f}s / "
                f"preemptive delay {comparison.preemptive.mean_delay:.3f}s "
                f"-> reduction {reduction}"
            )
            print(
                f"collisions: baseline {comparison.baseline.collisions}, "
                f"preemptive {comparison.preemptive.collisions}"
            )
            print(f"outputs in {out}")
        elif args.command == "capacity":
            try:
                rates = [float(r) for r in args.rates.split(",") if r.strip()]
            except ValueError as err:
                raise ConfigError(f"unreadable --rates: {args.rates!r}") from err
            sweeps = {}
            for strategy in ("baseline", "preemptive"):
                sweeps[strategy] = measure_capacity(
                    replace(config, strategy=strategy), rates
                )
            out = write_capacity_outputs(sweeps, config, args.out)
            for strategy, sweep in sweeps.items():
                print(f"{strategy}: capacity {sweep.capacity} veh/h")
            print(f"outputs in {out}")
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 1
    return 0


def run_validate() -> int:
    from .harness.validate import run_all

    return run_all(verbose=True)


if __name__ == "__main__":
    raise SystemExit(main())

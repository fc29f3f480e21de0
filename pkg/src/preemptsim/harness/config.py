"""Scenario configuration: defaults, key-value files, validation."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

from ..temporal import TemporalConfig
from ..traffic.geometry import RoadGeometry
from ..traffic.vehicles import KraussParams

__all__ = ["TICK_SECONDS", "ConfigError", "ScenarioConfig", "parse_config_file"]

#: Seconds of simulated time per tick.
TICK_SECONDS = 0.1

STRATEGIES = ("baseline", "preemptive")


class ConfigError(ValueError):
    """A scenario configuration is unusable; reported before any run starts."""


@dataclass(frozen=True)
class ScenarioConfig:
    geometry: RoadGeometry = field(default_factory=RoadGeometry)
    krauss: KraussParams = field(default_factory=KraussParams)
    temporal: TemporalConfig = field(
        default_factory=lambda: TemporalConfig(100, 30, 170)
    )
    demand_main: float = 1200.0  # veh/h
    demand_ramp: float = 600.0  # veh/h
    duration: int = 3000  # ticks
    seed: int = 1
    strategy: str = "preemptive"
    additional_space: float = 2.5  # m
    cell_length: float = 5.0  # m
    forced_merge: bool = True

    @property
    def dt(self) -> float:
        return TICK_SECONDS

    def validate(self) -> "ScenarioConfig":
        problems = []
        if self.demand_main < 0 or self.demand_ramp < 0:
            problems.append("demands must be >= 0")
        if self.duration <= 0:
            problems.append("duration must be a positive tick count")
        if self.strategy not in STRATEGIES:
            problems.append(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.cell_length <= 0:
            problems.append("cell_length must be positive")
        if self.additional_space < 0:
            problems.append("additional_space must be >= 0")
        if self.cell_length > 0 and (self.geometry.merge_point % self.cell_length) != 0:
            problems.append(
                "merge_point must be a multiple of cell_length so the lane "
                "split happens on a cell boundary"
            )
        if problems:
            raise ConfigError("; ".join(problems))
        return self


# Flat key -> (section, attribute, type) for file/CLI round-tripping.
_FIELD_MAP: dict[str, tuple[str, str, type]] = {
    "mainline_length": ("geometry", "mainline_length", float),
    "ramp_length": ("geometry", "ramp_length", float),
    "merge_point": ("geometry", "merge_point", float),
    "detection_boundary": ("geometry", "detection_boundary", float),
    "v_max": ("krauss", "v_max", float),
    "a_accel": ("krauss", "a_accel", float),
    "b_decel": ("krauss", "b_decel", float),
    "reaction_time": ("krauss", "reaction_time", float),
    "sigma": ("krauss", "sigma", float),
    "min_gap": ("krauss", "min_gap", float),
    "t_frozen": ("temporal", "t_frozen", int),
    "t_critical": ("temporal", "t_critical", int),
    "t_planning": ("temporal", "t_planning", int),
    "demand_main": ("", "demand_main", float),
    "demand_ramp": ("", "demand_ramp", float),
    "duration": ("", "duration", int),
    "seed": ("", "seed", int),
    "strategy": ("", "strategy", str),
    "additional_space": ("", "additional_space", float),
    "cell_length": ("", "cell_length", float),
    "forced_merge": ("", "forced_merge", bool),
}


def _coerce(key: str, raw: Any, kind: type) -> Any:
    if kind is bool:
        if isinstance(raw, bool):
            return raw
        text = str(raw).strip().lower()
        if text in ("1", "true", "yes", "on"):
            return True
        if text in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: cannot read {raw!r} as a boolean")
    try:
        return kind(raw)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"{key}: cannot read {raw!r} as {kind.__name__}") from err


def config_from_mapping(
    mapping: Mapping[str, Any], base: ScenarioConfig | None = None
) -> ScenarioConfig:
    """Apply flat key-value overrides on top of ``base`` (or the defaults)."""
    base = base or ScenarioConfig()
    sections: dict[str, dict[str, Any]] = {"geometry": {}, "krauss": {}, "temporal": {}, "": {}}
    for key, raw in mapping.items():
        if raw is None:
            continue
        if key not in _FIELD_MAP:
            raise ConfigError(f"unknown configuration key {key!r}")
        section, attr, kind = _FIELD_MAP[key]
        sections[section][attr] = _coerce(key, raw, kind)

    try:
        geometry = replace(base.geometry, **sections["geometry"]) if sections["geometry"] else base.geometry
        krauss = replace(base.krauss, **sections["krauss"]) if sections["krauss"] else base.krauss
        temporal = replace(base.temporal, **sections["temporal"]) if sections["temporal"] else base.temporal
    except (TypeError, ValueError) as err:
        raise ConfigError(str(err)) from err
    return replace(base, geometry=geometry, krauss=krauss, temporal=temporal, **sections[""])


def parse_config_file(path: str | Path) -> dict[str, str]:
    """Read a plain-text scenario file: one ``key = value`` per line,
    ``#`` comments and blank lines ignored."""
    values: dict[str, str] = {}
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, _, value = body.partition("=")
        values[key.strip()] = value.strip()
    return values


def config_to_flat_dict(config: ScenarioConfig) -> dict[str, Any]:
    """Flat, ordered view of every field (stable order for reports)."""
    out: dict[str, Any] = {}
    for key, (section, attr, _kind) in _FIELD_MAP.items():
        holder = config if section == "" else getattr(config, section)
        out[key] = getattr(holder, attr)
    return out

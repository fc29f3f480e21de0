import json
import subprocess
import sys
from dataclasses import replace
from pathlib import Path

import pytest

from preemptsim.harness.config import (
    ConfigError,
    ScenarioConfig,
    config_from_mapping,
    config_to_flat_dict,
    parse_config_file,
)
from preemptsim.harness.metrics import compute_metrics
from preemptsim.harness.runner import build_world, compare, measure_capacity, run_scenario
from preemptsim.harness.report import stable_json, write_comparison_outputs, write_run_outputs
from preemptsim.recompute import recompute_mean_delay
from preemptsim.traffic.simulation import advance_tick


def small_config(**kw):
    defaults = dict(demand_main=1200.0, demand_ramp=600.0, duration=900, seed=4)
    defaults.update(kw)
    return ScenarioConfig(**defaults)


class TestConfig:
    def test_defaults_validate(self):
        ScenarioConfig().validate()

    def test_bad_values_rejected(self):
        with pytest.raises(ConfigError):
            ScenarioConfig(demand_main=-5).validate()
        with pytest.raises(ConfigError):
            ScenarioConfig(duration=0).validate()
        with pytest.raises(ConfigError):
            ScenarioConfig(strategy="magic").validate()
        with pytest.raises(ConfigError):
            ScenarioConfig(cell_length=3.0).validate()  # merge point off-grid

    def test_mapping_roundtrip(self):
        cfg = config_from_mapping({"demand_main": "1500", "sigma": "0.2", "forced_merge": "no"})
        assert cfg.demand_main == 1500.0
        assert cfg.krauss.sigma == 0.2
        assert cfg.forced_merge is False
        flat = config_to_flat_dict(cfg)
        again = config_from_mapping(flat)
        assert again == cfg

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            config_from_mapping({"warp_speed": 9})

    def test_parse_config_file(self, tmp_path):
        text = "# scenario\n demand_main = 1800 \n\nstrategy = baseline # inline\n"
        path = tmp_path / "scenario.cfg"
        path.write_text(text)
        values = parse_config_file(path)
        assert values == {"demand_main": "1800", "strategy": "baseline"}
        with pytest.raises(ConfigError):
            path.write_text("just words\n")
            parse_config_file(path)


class TestRunScenario:
    def test_zero_demand_all_zero(self):
        result = run_scenario(small_config(demand_main=0.0, demand_ramp=0.0))
        m = result.metrics
        assert m.mean_delay == 0.0
        assert m.throughput == 0.0
        assert m.collisions == 0
        assert m.vehicles_completed == 0

    def test_sparse_free_flow_zero_delay(self):
        """Widely spaced noise-free vehicles never interact: delay 0."""
        cfg = small_config(
            demand_main=50.0,
            demand_ramp=0.0,
            duration=3600,
            strategy="baseline",
            krauss=replace(ScenarioConfig().krauss, sigma=0.0),
        )
        result = run_scenario(cfg)
        assert result.metrics.vehicles_completed >= 1
        assert abs(result.metrics.mean_delay) <= cfg.dt

    def test_reproducible_metrics_and_rows(self):
        cfg = small_config(strategy="preemptive")
        a = run_scenario(cfg)
        b = run_scenario(cfg)
        assert a.metrics == b.metrics
        assert a.trajectory_rows == b.trajectory_rows

    def test_saturated_directional_claims(self):
        base = small_config(demand_main=2000.0, demand_ramp=1000.0, duration=2000, strategy="baseline")
        pre = replace(base, strategy="preemptive")
        comparison, _, _ = compare(base, pre, record_trajectories=False)
        assert comparison.preemptive.collisions == 0
        assert comparison.preemptive.mean_delay < comparison.baseline.mean_delay


class TestCompare:
    def test_rejects_mismatched_configs(self):
        base = small_config(strategy="baseline")
        pre = replace(small_config(strategy="preemptive"), seed=999)
        with pytest.raises(ConfigError):
            compare(base, pre)

    def test_zero_demand_reduction_not_applicable(self):
        base = small_config(demand_main=0.0, demand_ramp=0.0, strategy="baseline")
        pre = replace(base, strategy="preemptive")
        comparison, _, _ = compare(base, pre, record_trajectories=False)
        assert comparison.delay_reduction is None


class TestMeasureCapacity:
    def test_trivial_rates_all_served(self):
        sweep = measure_capacity(small_config(strategy="preemptive", duration=1500), [300.0, 600.0])
        assert sweep.capacity == 600.0
        assert all(sweep.served)

    def test_single_point_grid(self):
        sweep = measure_capacity(small_config(strategy="preemptive", duration=1500), [600.0])
        assert sweep.capacity in (None, 600.0)

    def test_descending_grid_rejected(self):
        with pytest.raises(ConfigError):
            measure_capacity(small_config(), [1200.0, 600.0])


class TestReports:
    def test_stable_json_fixed_point_floats(self):
        text = stable_json({"a": 0.5, "b": None, "c": [1.25, 2], "d": {"x": True}})
        assert '"a": 0.500000' in text
        assert '"b": null' in text
        assert '"c": [1.250000, 2]' in text
        assert text.endswith("\n")

    def test_run_outputs_written(self, tmp_path):
        result = run_scenario(small_config(duration=600, strategy="baseline"))
        out = write_run_outputs(result, tmp_path / "run")
        assert (out / "metrics.json").exists()
        assert (out / "trajectories.csv").exists()
        assert (out / "events.csv").exists()
        assert (out / "time_space.png").exists()
        header = (out / "trajectories.csv").read_text().splitlines()[0]
        assert header == "vehicle_id,origin,tick,position_m,speed_mps,lane"
        meta = json.loads((out / "metrics.json").read_text())
        assert meta["strategy"] == "baseline"
        assert set(meta["metrics"]) == {
            "mean_delay",
            "throughput",
            "collisions",
            "vehicles_completed",
            "protocol_failures",
        }

    def test_comparison_outputs_written(self, tmp_path):
        base = small_config(duration=600, strategy="baseline")
        pre = replace(base, strategy="preemptive")
        comparison, base_run, pre_run = compare(base, pre)
        out = write_comparison_outputs(comparison, base_run, pre_run, tmp_path / "cmp")
        assert (out / "metrics.json").exists()
        assert (out / "comparison.png").exists()
        assert (out / "baseline" / "trajectories.csv").exists()
        assert (out / "preemptive" / "trajectories.csv").exists()

    def test_recompute_matches_reported_delay(self, tmp_path):
        for strategy in ("baseline", "preemptive"):
            result = run_scenario(small_config(duration=1200, strategy=strategy))
            out = write_run_outputs(result, tmp_path / strategy)
            reported, recomputed = recompute_mean_delay(out)
            assert abs(reported - recomputed) <= 1e-9


class TestWarmupInsensitivity:
    def test_doubling_duration_stable_throughput(self):
        """Sub-capacity demand: steady-state throughput moves < 5%."""
        cfg = small_config(demand_main=800.0, demand_ramp=400.0, duration=3000, strategy="preemptive")
        short = run_scenario(cfg, record_trajectories=False).metrics.throughput
        long = run_scenario(replace(cfg, duration=6000), record_trajectories=False).metrics.throughput
        assert long > 0
        assert abs(short - long) / long < 0.05


class TestCli:
    def test_cli_run_and_exit_codes(self, tmp_path):
        from preemptsim.cli import main

        out = tmp_path / "cli-run"
        code = main(
            [
                "run",
                "--strategy",
                "baseline",
                "--duration",
                "500",
                "--demand-main",
                "600",
                "--demand-ramp",
                "300",
                "--seed",
                "2",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        assert (out / "metrics.json").exists()
        assert (out / "time_space.png").exists()

    def test_cli_config_file_and_flag_precedence(self, tmp_path):
        from preemptsim.cli import main

        cfg_file = tmp_path / "s.cfg"
        cfg_file.write_text("duration = 400\ndemand_main = 900\ndemand_ramp = 0\nseed = 7\n")
        out = tmp_path / "cli-file"
        code = main(
            ["run", "--config", str(cfg_file), "--strategy", "baseline",
             "--demand-main", "300", "--out", str(out)]
        )
        assert code == 0
        meta = json.loads((out / "metrics.json").read_text())
        assert meta["config"]["demand_main"] == 300.0  # flag beats file
        assert meta["config"]["duration"] == 400

    def test_cli_configuration_error_exit_1(self, tmp_path):
        from preemptsim.cli import main

        assert main(["run", "--duration", "-5", "--out", str(tmp_path)]) == 1

    def test_cli_entrypoint_subprocess(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "preemptsim.cli", "run", "--duration", "300",
             "--demand-main", "300", "--demand-ramp", "0", "--out", str(tmp_path / "o")],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert "outputs in" in proc.stdout

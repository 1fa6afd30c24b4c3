"""
Unit tests for cli module.
Tests argument parsing, exit codes and the files each command writes.
"""

import json

import pandas as pd
import pytest

from rarefaction_lab.cli import main, resolve_delta, setup_parser
from rarefaction_lab.config import load_config
from rarefaction_lab.errors import ConfigurationError
from rarefaction_lab.rarefaction_waves import delta_rule

# =============================================================================
# PARSER AND HELPERS
# =============================================================================


class TestParser:
    def test_common_options(self, tmp_path):
        args = setup_parser().parse_args(
            ["simulate", "--out", str(tmp_path), "--set", "solver.eps=0.02", "--set", "solver.T=0.5", "--seed", "4"]
        )
        assert args.command == "simulate"
        assert args.out == tmp_path
        assert args.overrides == ["solver.eps=0.02", "solver.T=0.5"]
        assert args.seed == 4

    def test_verify_suite_positional(self):
        args = setup_parser().parse_args(["verify", "gas"])
        assert args.suite == "gas"

    def test_verify_suite_optional(self):
        assert setup_parser().parse_args(["verify"]).suite is None


class TestResolveDelta:
    def test_rule(self):
        config = load_config(None, ["profile.eps=0.01"])
        assert resolve_delta(config, 0.01) == pytest.approx(delta_rule(0.01, config.profile.b))

    def test_explicit_width_wins(self):
        config = load_config(None, ["profile.delta=0.3"])
        assert resolve_delta(config, 0.01) == 0.3

    def test_zero_eps_needs_width(self):
        with pytest.raises(ConfigurationError) as exc_info:
            resolve_delta(load_config(), 0.0)
        assert exc_info.value.field == "profile.delta"


# =============================================================================
# EXIT CODES
# =============================================================================


async def test_no_command_prints_help(capsys):
    assert await main([]) == 2
    assert "rarefaction-lab" in capsys.readouterr().out


async def test_verify_writes_records(tmp_path, capsys):
    """Each property prints one JSON line; run.json is completed last"""
    code = await main(["verify", "entropy", "--out", str(tmp_path), "--set", "verify.n_random=200"])

    assert code == 0
    lines = [json.loads(line) for line in capsys.readouterr().out.splitlines() if line.startswith("{")]
    assert lines and all(record["name"].startswith("entropy.") for record in lines)
    assert len(json.loads((tmp_path / "verify.json").read_text())) == len(lines)

    run = json.loads((tmp_path / "run.json").read_text())
    assert run["status"] == "complete"
    assert run["exit_code"] == 0
    assert str(tmp_path / "verify.json") in run["outputs"]


async def test_unknown_suite_is_usage_error(tmp_path):
    assert await main(["verify", "nonsense", "--out", str(tmp_path)]) == 2
    assert json.loads((tmp_path / "run.json").read_text())["status"] == "failed"


async def test_invalid_override_is_usage_error(tmp_path):
    """Configuration errors stop before anything is written"""
    assert await main(["simulate", "--out", str(tmp_path), "--set", "solver.cfl=5"]) == 2
    assert not (tmp_path / "run.json").exists()


async def test_malformed_override(tmp_path):
    assert await main(["profile", "--out", str(tmp_path), "--set", "profile.eps"]) == 2


async def test_empty_window_is_usage_error(tmp_path):
    code = await main(["simulate", "--out", str(tmp_path), "--set", "solver.T=0.5", "--set", "solver.h=0.5"])
    assert code == 2


async def test_missing_config_file(tmp_path):
    assert await main(["sweep", "--config", str(tmp_path / "missing.toml"), "--out", str(tmp_path)]) == 2


# =============================================================================
# COMMAND OUTPUTS
# =============================================================================


async def test_profile_command(tmp_path):
    code = await main(
        [
            "profile",
            "--out",
            str(tmp_path),
            "--set",
            "profile.eps=0.05",
            "--set",
            "profile.T=0.5",
            "--set",
            "profile.snapshots_per_unit=4",
            "--set",
            "profile.cells_per_delta=16",
        ]
    )

    assert code == 0
    for name in ["profile.csv", "wave.csv", "residuals.csv", "derivative_norms.csv", "profile.json"]:
        assert (tmp_path / name).exists()
    summary = json.loads((tmp_path / "profile.json").read_text())
    assert summary["delta"] == pytest.approx(delta_rule(0.05, 1.0 / 6.0))
    assert "system_residual" in summary



async def test_profile_zero_eps_has_no_wave(tmp_path):
    """Without dissipation the correction wave vanishes identically"""
    code = await main(
        [
            "profile",
            "--out",
            str(tmp_path),
            "--set",
            "profile.eps=0",
            "--set",
            "profile.delta=0.5",
            "--set",
            "profile.T=0.5",
            "--set",
            "profile.snapshots_per_unit=4",
            "--set",
            "profile.cells_per_delta=16",
        ]
    )

    assert code == 0
    wave = pd.read_csv(tmp_path / "wave.csv")
    assert (wave[["z1", "z2", "z3"]] == 0.0).all().all()
    assert json.loads((tmp_path / "profile.json").read_text())["weighted_energy_constant"] == 0.0


async def test_profile_zero_eps_needs_width(tmp_path):
    assert await main(["profile", "--out", str(tmp_path), "--set", "profile.eps=0"]) == 2

@pytest.mark.slow
async def test_simulate_command(tmp_path):
    code = await main(
        [
            "simulate",
            "--out",
            str(tmp_path),
            "--set",
            "solver.eps=0.05",
            "--set",
            "solver.T=0.5",
            "--set",
            "solver.snapshots_per_unit=4",
            "--set",
            "solver.cells_per_delta=16",
        ]
    )

    assert code == 0
    assert (tmp_path / "trajectory.json").exists()
    assert (tmp_path / "timeseries.csv").exists()
    assert (tmp_path / "summary.json").exists()


@pytest.mark.slow
async def test_simulate_slab_command(tmp_path):
    """Slab mode from the profile writes transverse norms next to the perturbation norms"""
    code = await main(
        [
            "simulate",
            "--out",
            str(tmp_path),
            "--set",
            "solver.mode=slab",
            "--set",
            "solver.n2=4",
            "--set",
            "solver.eps=0.05",
            "--set",
            "solver.T=0.5",
            "--set",
            "solver.snapshots_per_unit=4",
            "--set",
            "solver.cells_per_delta=16",
            "--set",
            "initial.transverse_amplitude=0.01",
        ]
    )

    assert code == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["mode"] == "slab"
    assert summary["entropy_min"] >= 0.0
    series = pd.read_csv(tmp_path / "timeseries.csv")
    quantities = set(series["quantity"])
    assert {"v2_l2", "norm_sq_0", "relative_entropy", "fan_error"} <= quantities
    v2 = series[series["quantity"] == "v2_l2"]["value"]
    assert len(v2) == 3 and v2.iloc[0] > 0.0
    assert series[series["quantity"] == "norm_sq_0"]["value"].notna().all()


@pytest.mark.slow
async def test_sweep_command(tmp_path):
    code = await main(
        [
            "sweep",
            "--out",
            str(tmp_path),
            "--set",
            "sweep.eps_list=[0.1, 0.05, 0.03]",
            "--set",
            "sweep.T=0.5",
            "--set",
            "sweep.cells_per_delta=16",
            "--set",
            "sweep.scheme_error_check=false",
        ]
    )

    assert code == 0
    assert (tmp_path / "report.csv").exists()
    assert (tmp_path / "fits.json").exists()

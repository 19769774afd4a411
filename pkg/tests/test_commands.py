"""
Tests for experiment commands.
"""

import json

import pandas as pd
import pytest
from unittest.mock import MagicMock, patch
from mpmath import mp
from pydantic import ValidationError

from radial_deep_nets.activations import Activation
from radial_deep_nets.commands import (
    AuditCommand,
    AuditConfig,
    BuildConfig,
    ExperimentConfig,
    PackConfig,
    RateApproxConfig,
    RateLearnConfig,
    TargetSpec,
    cmd_audit,
    cmd_build,
    cmd_pack,
    cmd_rate_approx,
    cmd_rate_learn,
    get_experiment_commands,
)
from radial_deep_nets.config import ActivationName
from radial_deep_nets.exceptions import ConfigurationError
from radial_deep_nets.hard_instances import LowerBoundParams
from radial_deep_nets.learning_harness import RateTable
from radial_deep_nets.tree_net import TreeArch, TreeNet, save_net


class TestTargetSpec:
    """Tests for catalogue target specs."""

    def test_defaults(self):
        spec = TargetSpec()
        assert spec.r == 1.0
        g = spec.univariate()
        assert g.domain[1] == 1
        assert spec.radial(3).d == 3

    def test_params_forwarded(self):
        g = TargetSpec(name="constant", params={"value": 0.5}).univariate()
        assert g(0.3) == mp.mpf("0.5")

    def test_unknown_key(self):
        with pytest.raises(ValidationError):
            TargetSpec(nam="linear")


class TestExperimentConfig:
    """Tests for the shared config schema."""

    def test_activation_coercion(self):
        assert ExperimentConfig(activation="gompertz").activation == ActivationName.GOMPERTZ

    def test_unknown_activation(self):
        with pytest.raises((ConfigurationError, ValidationError)):
            ExperimentConfig(activation="relu")

    def test_precision_floor(self):
        with pytest.raises(ValidationError):
            ExperimentConfig(precision_bits=32)

    def test_defaults_follow_config(self, small_config):
        cfg = ExperimentConfig()
        assert cfg.seed == small_config.seed
        assert cfg.out == small_config.output_dir


class TestRegistry:
    """Tests for the command registry."""

    def test_names(self):
        commands = get_experiment_commands()
        assert set(commands) == {"build", "rate-approx", "rate-learn", "pack", "audit"}
        assert all(command.description for command in commands.values())


class TestBuildCommand:
    """Tests for the build command."""

    def test_outputs_are_deterministic(self, tmp_path):
        """Test that two builds with the same seed write identical nets."""
        cfg = BuildConfig(out=str(tmp_path), n=2, n_radial=2, n_sphere=2)
        first = cmd_build(cfg)
        net_bytes = (tmp_path / "net.json").read_bytes()
        second = cmd_build(cfg)
        assert (tmp_path / "net.json").read_bytes() == net_bytes
        assert first == second

        report = json.loads((tmp_path / "build_report.json").read_text(encoding="utf-8"))
        assert report["realized_widths"] == [2, 6, 3, 27]
        assert report["class_widths"] == [2, 6, 3, 9]
        assert report["bounds_ok"] is True
        assert report["parameter_sandwich"] == {"lower": 972, "count": 4104, "upper": 8748}
        assert report["measured_sup_error"] is not None
        assert report["config"]["n"] == 2

    def test_invalid_n(self):
        with pytest.raises(ValidationError):
            BuildConfig(n=1)


class TestRateApproxCommand:
    """Tests for the approximation-rate sweep."""

    @patch("radial_deep_nets.commands.rate_approx.measure_radial_error")
    @patch("radial_deep_nets.commands.rate_approx.build_radial_net")
    def test_table_and_slope(self, mock_build, mock_measure, tmp_path):
        """Test that measured errors 0.1 and 0.025 give slope −2."""
        # Setup mock
        mock_build.return_value = (MagicMock(), MagicMock(param_count=100))
        mock_measure.side_effect = [mp.mpf("0.1"), mp.mpf("0.025")]

        # Test
        result = cmd_rate_approx(RateApproxConfig(out=str(tmp_path), n_values=[4, 2]))

        # Verify
        assert result["slope"] == pytest.approx(-2.0)
        assert [call.args[1] for call in mock_build.call_args_list] == [2, 4]
        table = pd.read_csv(result["table"])
        assert list(table.columns) == ["n", "d", "r", "sup_error", "params"]
        assert table["n"].tolist() == ["2", "4", "slope"]

    def test_empty_sweep(self):
        with pytest.raises(ValidationError):
            RateApproxConfig(n_values=[])


class TestRateLearnCommand:
    """Tests for the learning-rate sweep."""

    @patch("radial_deep_nets.commands.rate_learn.rate_sweep")
    def test_learning_config_is_aligned(self, mock_sweep, tmp_path):
        """Test that seed, d, r and activation flow into the learner."""
        # Setup mock
        rows = pd.DataFrame([{"m": 8, "n": 2, "trials": 3, "median_excess_risk": 0.1, "stderr": 0.01}])
        mock_sweep.return_value = RateTable(rows=rows, slope=float("nan"), theory_slope=-2 / 3)

        # Test
        cfg = RateLearnConfig(out=str(tmp_path), seed=7, d=3, m_list=[8], activation="tanh-shifted")
        result = cmd_rate_learn(cfg)

        # Verify
        target, m_list, trials, learning = mock_sweep.call_args.args
        assert target.d == 3
        assert m_list == [8]
        assert trials == 3
        assert (learning.seed, learning.d, learning.r) == (7, 3, 1.0)
        assert learning.activation == ActivationName.TANH_SHIFTED
        report = json.loads(open(result["report"], encoding="utf-8").read())
        assert report["label"] == "approximate ERM"

    def test_m_list_must_increase(self):
        with pytest.raises(ValidationError):
            RateLearnConfig(m_list=[16, 8])

    def test_minimum_trials(self):
        with pytest.raises(ValidationError):
            RateLearnConfig(trials=2)


class TestPackCommand:
    """Tests for the packing audit."""

    def test_enumerated_family_passes(self, tmp_path):
        result = cmd_pack(PackConfig(out=str(tmp_path), N_star=4, grid_count=400))
        assert result["pairs"] == 15
        assert result["passed"] == 15
        table = pd.read_csv(result["table"])
        assert list(table.columns) == ["signs_a", "signs_b", "distance", "predicted", "pass"]
        assert table["predicted"].iloc[0] == pytest.approx(0.25)
        assert table["signs_a"].iloc[0] == "----"

    def test_all_pairs(self, tmp_path):
        result = cmd_pack(PackConfig(out=str(tmp_path), N_star=3, all_pairs=True, grid_count=200))
        assert result["pairs"] == 28
        assert result["passed"] == 28

    def test_sampled_family(self, tmp_path):
        cfg = PackConfig(out=str(tmp_path), N_star=20, sample=True, sample_count=4, grid_count=200)
        result = cmd_pack(cfg)
        assert 1 <= result["pairs"] <= 3
        assert result["passed"] == result["pairs"]

    def test_enumeration_cap(self, tmp_path):
        with pytest.raises(ConfigurationError):
            cmd_pack(PackConfig(out=str(tmp_path), N_star=20))

    def test_curves(self, tmp_path):
        cfg = PackConfig(
            out=str(tmp_path), N_star=2, grid_count=100,
            curves=LowerBoundParams(r=1, c0=8, d=2, n_values=[1, 2], tilde_n_values=[2]),
        )
        result = cmd_pack(cfg)
        report = json.loads(open(result["report"], encoding="utf-8").read())
        assert float(report["C3"]) == pytest.approx(1 / 6)
        assert (tmp_path / "lower_bounds.csv").exists()


class TestAuditCommand:
    """Tests for the audit command."""

    def test_activation_only(self, tmp_path):
        result = cmd_audit(AuditConfig(out=str(tmp_path)))
        assert result["satisfied"] is True
        report = json.loads(open(result["report"], encoding="utf-8").read())
        assert "net" not in report

    def test_saved_net(self, tmp_path):
        """Test the net section for an all-zero net stored at 64 bits."""
        net = TreeNet.zeros(TreeArch.uniform((2, 2, 1), Activation(name="logistic")), 64)
        path = save_net(net, tmp_path / "zeros.json")
        result = cmd_audit(AuditConfig(out=str(tmp_path), net_path=str(path)))
        report = json.loads(open(result["report"], encoding="utf-8").read())
        section = report["net"]
        assert section["widths"] == [2, 2, 1]
        assert section["bounds_ok"] is True
        assert section["required_bits"] == 84
        assert section["precision_ok"] is False
        assert section["fast_path_allowed"] is True

    def test_command_name(self):
        assert AuditCommand().name == "audit"

"""
Tests for sampling, approximate ERM and excess-risk measurement.
"""

import math

import numpy as np
import pytest
import torch
from pydantic import ValidationError
from unittest.mock import patch

from radial_deep_nets.activations import Activation
from radial_deep_nets.exceptions import ArgumentError, ConfigurationError, TrainingError
from radial_deep_nets.learning_harness import (
    LearningConfig,
    NoiseKind,
    RateTable,
    Sample,
    TorchTreeNet,
    TrainResult,
    excess_risk,
    n_rule,
    parameter_box,
    rate_sweep,
    sample_dataset,
    theory_slope,
    train_erm,
    truncate,
)
from radial_deep_nets.radial_builder import RadialTarget
from radial_deep_nets.tree_net import TreeArch, eval_float
from radial_deep_nets.univariate_builder import constant_target, linear_target

UNIT = (0, 1)
LOGISTIC = Activation(name="logistic")


@pytest.fixture
def f_rho():
    """f(x) = |x|² in d = 2."""
    return RadialTarget(linear_target(domain=UNIT), 2)


class TestRules:
    """Tests for the n-rule, slopes and truncation."""

    def test_n_rule(self):
        assert n_rule(1, 1.0) == 1
        assert n_rule(100, 1.0) == 4
        assert n_rule(100, 1.0, C=2.0) == 9

    def test_theory_slope(self):
        assert theory_slope(1.0) == pytest.approx(-2 / 3)

    def test_truncate(self):
        assert truncate(3.0, 1.0) == 1.0
        assert truncate(-0.5, 1.0) == -0.5
        assert np.array_equal(truncate(np.array([-2.0, 0.3, 4.0]), 1.0), np.array([-1.0, 0.3, 1.0]))
        with pytest.raises(ArgumentError):
            truncate(1.0, 0)

    def test_parameter_box(self):
        arch = TreeArch.uniform((1, 1), LOGISTIC)
        assert parameter_box(arch, 1.0, 2.0) == pytest.approx(10.0)
        assert parameter_box(arch, 1000.0, 1.0) == math.inf


class TestSampleDataset:
    """Tests for dataset sampling."""

    def test_shapes_and_ranges(self, f_rho):
        data = sample_dataset(f_rho, LearningConfig(m=50, seed=1))
        assert len(data) == 50
        assert all(np.linalg.norm(s.x) <= 1 + 1e-12 for s in data)
        assert all(abs(s.y - float(np.dot(s.x, s.x))) < 1e-12 for s in data)

    def test_deterministic(self, f_rho):
        cfg = LearningConfig(m=20, seed=4)
        first = sample_dataset(f_rho, cfg, trial=2)
        second = sample_dataset(f_rho, cfg, trial=2)
        other = sample_dataset(f_rho, cfg, trial=3)
        assert all(np.array_equal(a.x, b.x) for a, b in zip(first, second))
        assert not all(np.array_equal(a.x, b.x) for a, b in zip(first, other))

    def test_bounded_noise(self, f_rho):
        cfg = LearningConfig(m=200, noise=NoiseKind.BOUNDED_UNIFORM, sigma=0.5, M=2.0)
        data = sample_dataset(f_rho, cfg)
        assert all(abs(s.y) <= 2.0 for s in data)
        assert any(abs(s.y - float(np.dot(s.x, s.x))) > 1e-3 for s in data)

    def test_noise_must_fit_in_m(self, f_rho):
        cfg = LearningConfig(m=10, noise=NoiseKind.BOUNDED_UNIFORM, sigma=0.5, M=1.0)
        with pytest.raises(ConfigurationError):
            sample_dataset(f_rho, cfg)

    def test_sigma_without_noise(self):
        with pytest.raises(ValidationError):
            LearningConfig(sigma=0.1)


class TestTorchTreeNet:
    """Tests for the float64 training mirror."""

    def test_matches_tree_net(self):
        """Test that the torch forward agrees with the lifted TreeNet."""
        arch = TreeArch.uniform((2, 3, 2), LOGISTIC)
        model = TorchTreeNet(arch, torch.Generator().manual_seed(0))
        X = np.random.default_rng(0).uniform(-1, 1, size=(8, 2))
        with torch.no_grad():
            torch_values = model(torch.tensor(X)).numpy()
        assert np.allclose(torch_values, eval_float(model.to_tree_net(), X), atol=1e-12)

    def test_from_tree_net(self):
        arch = TreeArch.uniform((2, 2, 2), LOGISTIC)
        model = TorchTreeNet(arch, torch.Generator().manual_seed(1))
        copy = TorchTreeNet.from_tree_net(model.to_tree_net())
        X = torch.tensor(np.random.default_rng(1).uniform(-1, 1, size=(5, 2)))
        with torch.no_grad():
            assert torch.allclose(model(X), copy(X))


class TestTrainErm:
    """Tests for approximate ERM."""

    @pytest.mark.parametrize("seed", range(6))
    def test_single_sample_is_interpolated(self, seed):
        """Test that one sample is fit to 1e-8 whatever the initialization."""
        arch = TreeArch.uniform((2, 2, 1), LOGISTIC)
        data = [Sample(x=np.array([0.3, -0.2]), y=0.4)]
        cfg = LearningConfig(m=1, restarts=1, steps=2000, lr_decay=0.995, seed=seed)
        result = train_erm(arch, data, cfg)
        assert result.loss <= 1e-8
        assert result.restart == 0

    def test_step_size_floor_without_polish(self):
        """Test that Adam alone interpolates once the step size cannot decay away."""
        arch = TreeArch.uniform((2, 2, 1), LOGISTIC)
        data = [Sample(x=np.array([0.3, -0.2]), y=0.4)]
        cfg = LearningConfig(m=1, restarts=1, steps=4000, lr_decay=0.995, lr_floor=1e-3,
                             polish_steps=0, tol=1e-10)
        assert train_erm(arch, data, cfg).loss <= 1e-4

    def test_early_stop_on_tolerance(self):
        """Test that a restart stops once the loss reaches the tolerance."""
        arch = TreeArch.uniform((2, 2, 1), LOGISTIC)
        data = [Sample(x=np.array([0.3, -0.2]), y=0.4)]
        cfg = LearningConfig(m=1, restarts=1, steps=5000, tol=1e-2, polish_steps=0)
        result = train_erm(arch, data, cfg)
        assert result.loss <= 1e-2
        assert result.diagnostics[0]["step"] < 5000

    def test_restarts_are_recorded(self):
        arch = TreeArch.uniform((2, 2, 1), LOGISTIC)
        data = [Sample(x=np.array([0.1, 0.1]), y=0.2), Sample(x=np.array([-0.5, 0.0]), y=0.25)]
        result = train_erm(arch, data, LearningConfig(m=2, restarts=3, steps=10))
        assert [d["restart"] for d in result.diagnostics] == [0, 1, 2]
        assert result.loss == min(d["loss"] for d in result.diagnostics)

    def test_all_restarts_diverge(self):
        arch = TreeArch.uniform((2, 1), LOGISTIC)
        data = [Sample(x=np.array([0.1, 0.2]), y=float("nan"))]
        with pytest.raises(TrainingError) as exc_info:
            train_erm(arch, data, LearningConfig(m=1, restarts=2, steps=5))
        assert len(exc_info.value.diagnostics) == 2

    def test_empty_data(self):
        with pytest.raises(ArgumentError):
            train_erm(TreeArch.uniform((2, 1), LOGISTIC), [], LearningConfig())


class TestExcessRisk:
    """Tests for Monte-Carlo excess risk."""

    def test_exact_predictor(self, f_rho):
        risk, stderr = excess_risk(lambda X: np.sum(X * X, axis=1), f_rho, 1.0, 200)
        assert risk == pytest.approx(0.0, abs=1e-20)
        assert stderr == pytest.approx(0.0, abs=1e-20)

    def test_zero_predictor_against_constant(self):
        target = RadialTarget(constant_target(1, domain=UNIT), 2)
        risk, stderr = excess_risk(lambda X: np.zeros(len(X)), target, 1.0, 100)
        assert risk == pytest.approx(1.0)
        assert stderr == pytest.approx(0.0)

    def test_truncation(self):
        target = RadialTarget(constant_target(1, domain=UNIT), 2)
        big = lambda X: np.full(len(X), 5.0)
        assert excess_risk(big, target, 1.0, 50)[0] == pytest.approx(0.0)
        assert excess_risk(big, target, 1.0, 50, truncated=False)[0] == pytest.approx(16.0)

    def test_invalid_test_size(self, f_rho):
        with pytest.raises(ArgumentError):
            excess_risk(lambda X: X[:, 0], f_rho, 1.0, 0)


class TestRateSweep:
    """Tests for the learning-rate sweep."""

    def test_validation(self, f_rho):
        cfg = LearningConfig(steps=1, restarts=1)
        with pytest.raises(ArgumentError):
            rate_sweep(f_rho, [16, 8], 3, cfg)
        with pytest.raises(ArgumentError):
            rate_sweep(f_rho, [8, 16], 2, cfg)

    def test_small_sweep(self, f_rho):
        cfg = LearningConfig(steps=20, restarts=1, n_test=50, batch_size=16)
        table = rate_sweep(f_rho, [10, 30], 3, cfg)
        assert list(table.rows.columns) == list(RateTable.COLUMNS)
        assert table.rows["n"].tolist() == [2, 3]
        assert table.theory_slope == pytest.approx(-2 / 3)
        frame = table.to_frame()
        assert frame.iloc[-1]["m"] == "slope"
        assert len(frame) == 3
        assert list(frame.columns) == list(RateTable.COLUMNS) + ["theory_slope"]
        assert frame.iloc[-1]["theory_slope"] == pytest.approx(-2 / 3)
        assert frame.iloc[-1]["stderr"] == ""

    def test_workers_do_not_change_results(self, f_rho):
        """Test that threaded trials give the same table as serial ones."""
        cfg = LearningConfig(steps=30, restarts=2, n_test=50, batch_size=8)
        serial = rate_sweep(f_rho, [10, 20], 3, cfg)
        threaded = rate_sweep(f_rho, [10, 20], 3, cfg.model_copy(update={"workers": 3}))
        assert np.allclose(
            threaded.rows["median_excess_risk"], serial.rows["median_excess_risk"], rtol=1e-9, atol=0
        )

    @patch("radial_deep_nets.learning_harness.train_erm")
    def test_known_risk_decay_is_recovered(self, mock_train, f_rho):
        """Test medians and slope for a learner whose excess risk is exactly 1/m."""
        # Setup mock
        def fit(arch, data, cfg, trial):
            offset = len(data) ** -0.5
            return TrainResult(model=lambda X: np.sum(X * X, axis=1) + offset, loss=0.0, restart=0)

        mock_train.side_effect = fit

        # Test
        table = rate_sweep(f_rho, [16, 32, 64, 128], 3, LearningConfig(M=2.0, n_test=100))

        # Verify
        medians = table.rows["median_excess_risk"].tolist()
        assert medians == pytest.approx([1 / 16, 1 / 32, 1 / 64, 1 / 128])
        assert all(b < a for a, b in zip(medians, medians[1:]))
        assert table.slope == pytest.approx(-1.0)
        assert mock_train.call_count == 12

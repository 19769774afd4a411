"""
Tests for activations and their derivative calculus.
"""

import pytest
from mpmath import mp
from pydantic import ValidationError

from radial_deep_nets.activations import (
    Activation,
    anchored,
    delta_phi,
    derivative_max,
    eval_derivative,
    find_theta0,
    get_activation,
    hoelder_constant,
    validate_assumptions,
)
from radial_deep_nets.config import ActivationName
from radial_deep_nets.exceptions import ArgumentError, ConfigurationError, UnsupportedOrderError
from radial_deep_nets.numeric_core import finite_diff, precision

SIGMOIDAL = ["logistic", "tanh-shifted", "arctan-shifted", "gompertz"]


class TestEvalDerivative:
    """Tests for exact derivative evaluation."""

    def test_logistic_at_zero(self):
        """Test the symmetric value and the vanishing second derivative."""
        act = Activation(name="logistic")
        assert eval_derivative(act, 0, 0) == mp.mpf(1) / 2
        assert eval_derivative(act, 1, 0) == mp.mpf(1) / 4
        assert eval_derivative(act, 2, 0) == 0

    def test_gompertz_at_zero(self):
        act = Activation(name="gompertz")
        assert abs(eval_derivative(act, 0, 0) - mp.exp(-1)) < mp.mpf(10) ** -15

    def test_tanh_shifted_matches_tanh(self):
        act = Activation(name="tanh-shifted")
        with precision(128):
            t = mp.mpf("0.37")
            assert abs(act(t) - (mp.tanh(t) + 1) / 2) < mp.mpf(10) ** -35

    @pytest.mark.parametrize("name", SIGMOIDAL)
    @pytest.mark.parametrize("k", [1, 2, 3, 4])
    def test_matches_finite_differences(self, name, k):
        """Test every recurrence against a high-precision central difference."""
        act = Activation(name=name)
        with precision(256):
            t = mp.mpf("0.3")
            exact = eval_derivative(act, k, t)
            estimate = finite_diff(lambda u: eval_derivative(act, 0, u), k, t, mp.mpf("1e-12"))
            assert abs(exact - estimate) < mp.mpf(10) ** -15

    @pytest.mark.parametrize("name", SIGMOIDAL)
    @pytest.mark.parametrize("k", [5, 6, 7, 8])
    def test_high_orders_match_numerical_differentiation(self, name, k):
        act = Activation(name=name)
        with precision(256):
            t = mp.mpf("0.3")
            exact = eval_derivative(act, k, t)
            estimate = mp.diff(lambda u: eval_derivative(act, 0, u), t, k)
            assert abs(exact - estimate) < mp.mpf(10) ** -20 * max(1, abs(exact))

    def test_logistic_odd_orders_at_zero(self):
        """Test σ^(5)(0) = 1/4 and σ^(7)(0) = −17/16 from the tanh series."""
        act = Activation(name="logistic")
        with precision(128):
            assert abs(eval_derivative(act, 5, 0) - mp.mpf(1) / 4) < mp.mpf(10) ** -30
            assert abs(eval_derivative(act, 7, 0) + mp.mpf(17) / 16) < mp.mpf(10) ** -30
            assert abs(eval_derivative(act, 6, 0)) < mp.mpf(10) ** -30

    def test_identity(self):
        act = Activation(name="identity")
        assert act(3) == 3
        assert act.derivative(1, 3) == 1
        assert act.derivative(2, 3) == 0
        assert not act.is_sigmoidal

    def test_scale(self):
        """Test that a scaled activation scales every derivative."""
        act = Activation(name="logistic", scale=2)
        assert eval_derivative(act, 0, 0) == 1
        assert eval_derivative(act, 1, 0) == mp.mpf(1) / 2

    def test_order_above_maximum(self):
        act = Activation(name="logistic", max_derivative_order=3)
        with pytest.raises(UnsupportedOrderError):
            eval_derivative(act, 4, 0)

    def test_unknown_name(self):
        """Test that unknown names surface as configuration errors."""
        with pytest.raises((ConfigurationError, ValidationError)):
            Activation(name="relu")

    def test_get_activation_default(self, small_config):
        assert get_activation().name == ActivationName.LOGISTIC
        assert get_activation("gompertz").name == ActivationName.GOMPERTZ


class TestDeltaPhi:
    """Tests for the tail functional."""

    def test_at_zero(self):
        assert delta_phi(Activation(name="logistic"), 0) == mp.mpf(1) / 2

    def test_logistic_closed_form(self):
        """Test that the logistic tail at A = 10 is 1/(1 + e^10)."""
        with precision(128):
            value = delta_phi(Activation(name="logistic"), 10)
            assert abs(value - 1 / (1 + mp.exp(10))) < mp.mpf(10) ** -30

    @pytest.mark.parametrize("name", SIGMOIDAL)
    def test_monotone_decreasing(self, name):
        act = Activation(name=name)
        values = [delta_phi(act, A) for A in (1, 2, 5, 10, 50)]
        assert all(b <= a for a, b in zip(values, values[1:]))
        assert values[-1] < mp.mpf("0.01")

    def test_rejects_identity_and_negative(self):
        with pytest.raises(ArgumentError):
            delta_phi(Activation(name="identity"), 1)
        with pytest.raises(ArgumentError):
            delta_phi(Activation(name="logistic"), -1)


class TestFindTheta0:
    """Tests for the anchor search."""

    def test_zero_accepted_for_first_order(self):
        """Test that θ0 = 0 qualifies when only φ and φ′ must be nonzero."""
        assert find_theta0(Activation(name="logistic"), 1, mp.mpf("1e-3")) == 0

    def test_zero_rejected_for_second_order(self):
        """Test that φ″(0) = 0 pushes θ0 away from the origin."""
        act = Activation(name="logistic")
        theta0 = find_theta0(act, 2, mp.mpf("1e-3"))
        assert theta0 != 0
        assert all(abs(eval_derivative(act, j, theta0)) >= mp.mpf("1e-3") for j in range(3))

    def test_anchored_activation(self, logistic):
        """Test that the anchored fixture meets the tolerance for s0 = 3."""
        theta0 = logistic.anchor
        assert 0 < abs(theta0) < 1
        assert all(abs(logistic.derivative(j, theta0)) >= mp.mpf("0.02") for j in range(4))

    def test_invalid_tolerance(self):
        with pytest.raises(ArgumentError):
            find_theta0(Activation(name="logistic"), 2, 0)

    def test_unanchored_activation_has_no_anchor(self):
        with pytest.raises(ArgumentError):
            Activation(name="logistic").anchor

    def test_anchored_uses_config(self, small_config):
        act = anchored(Activation(name="tanh-shifted"))
        assert act.theta0 is not None


class TestDerivativeBounds:
    """Tests for scanned derivative maxima and Hölder constants."""

    def test_logistic_first_derivative_max(self):
        """Test that max |σ′| = 1/4 is found and inflated by the safety factor."""
        value = derivative_max(Activation(name="logistic"), 1, -2, 2, 401)
        assert abs(value - mp.mpf("0.275")) < mp.mpf(10) ** -10

    def test_hoelder_constant_lipschitz_case(self):
        act = Activation(name="logistic")
        assert hoelder_constant(act, 2, 1) == derivative_max(act, 3, -40, 40)

    def test_hoelder_constant_fractional(self):
        act = Activation(name="logistic")
        assert 0 < hoelder_constant(act, 2, mp.mpf("0.5")) < mp.inf


class TestValidateAssumptions:
    """Tests for the assumption audit."""

    def test_logistic_satisfied(self, logistic):
        report = validate_assumptions(logistic, 3.5)
        assert report.satisfied, report.violations

    def test_arctan_tail_exponent(self):
        """Test that the arctan tail decays like 1/t."""
        report = validate_assumptions(Activation(name="arctan-shifted"), 3.5)
        assert report.satisfied, report.violations
        assert report.tail_exponent == pytest.approx(1.0, abs=0.05)

    def test_scaled_activation_violates_bound(self):
        report = validate_assumptions(Activation(name="logistic", scale=2), 3.5)
        assert not report.satisfied
        assert any("‖φ‖∞" in v for v in report.violations)

    def test_low_smoothness_recorded(self, logistic):
        report = validate_assumptions(logistic, 1.5)
        assert any("s0=1" in v for v in report.violations)

    def test_identity_is_not_sigmoidal(self):
        report = validate_assumptions(Activation(name="identity"), 3.5)
        assert not report.satisfied

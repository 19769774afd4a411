"""
Tests for the univariate Taylor-bump construction.
"""

import pytest
from mpmath import mp

from radial_deep_nets.activations import Activation, delta_phi
from radial_deep_nets.config import CascadeBranch
from radial_deep_nets.exceptions import ArgumentError, PrecisionError, UnsupportedOrderError
from radial_deep_nets.numeric_core import GridSpec, fit_loglog_slope, grid_sup_norm, precision
from radial_deep_nets.tree_net import TreeArch, TreeNet, evaluate
from radial_deep_nets.univariate_builder import (
    BumpSystem,
    audit_weight_caps,
    build_univariate_net,
    bump,
    constant_target,
    escalate,
    estimate_hoelder,
    get_target,
    inner_budget,
    operator_error_bound,
    phi_operator,
    taylor_at_node,
    univariate_error_bound,
)

HALF = GridSpec(lo=0, hi=0.5, count=201, jitter_count=0)


def net_error(build, target):
    net = build.net
    with precision(net.precision_bits):
        return grid_sup_norm(target, lambda t: evaluate(net, [t]), HALF)


class TestTargets:
    """Tests for the target catalogue."""

    def test_linear_data(self, linear):
        assert linear.sup == mp.mpf(1) / 2
        assert linear.c0 == 1
        assert linear.r == 1

    def test_square_has_zero_hoelder_constant_at_s2(self, square):
        assert square.c0 == 0
        assert square.derivative(2, 0.3) == 2

    def test_rescaled(self, linear):
        """Test that g(τ) = g*(2τ) doubles the slope and the Hölder constant."""
        scaled = linear.rescaled(2)
        assert scaled(mp.mpf("0.1")) == mp.mpf("0.2")
        assert scaled.derivative(1, 0) == 2
        assert scaled.c0 == 2
        assert scaled.domain[1] == mp.mpf(1) / 4

    def test_estimate_hoelder(self, linear):
        assert float(estimate_hoelder(linear, pairs=200)) == pytest.approx(1.0, abs=1e-12)

    def test_unknown_target(self):
        with pytest.raises(ArgumentError):
            get_target("cosine")

    def test_invalid_data(self):
        with pytest.raises(ArgumentError):
            constant_target(1, v=0)
        with pytest.raises(ArgumentError):
            constant_target(1, s=-1)


class TestBumps:
    """Tests for the sigmoidal bump system."""

    def test_invalid_system(self):
        with pytest.raises(ArgumentError):
            BumpSystem(0.5, 2)
        with pytest.raises(ArgumentError):
            BumpSystem(2, 0)

    @pytest.mark.parametrize("A, n", [(10, 4), (1, 1), (2, 3), (36, 6), (100, 9)])
    def test_telescoping_sum(self, logistic, A, n):
        """Test that Σ_j b_j(t) collapses to φ(−4An(t − t_n) + A)."""
        sys = BumpSystem(A, n)
        with precision(128):
            for t in (mp.mpf(0), mp.mpf("0.03"), mp.mpf("0.21"), mp.mpf("0.47"), mp.mpf(1) / 2):
                total = sum(bump(sys, logistic, j, t) for j in range(n + 1))
                expected = logistic(sys.slope * (t - sys.node(n)) + sys.A)
                assert abs(total - expected) < mp.mpf(10) ** -30

    def test_localization(self, logistic):
        """Test that b_j is near one at t_j and negligible two cells away."""
        sys = BumpSystem(20, 4)
        tail = delta_phi(logistic, 20)
        for j in range(1, 4):
            assert bump(sys, logistic, j, sys.node(j)) >= 1 - 3 * tail
            assert abs(bump(sys, logistic, j, sys.node(j) + mp.mpf(1) / 4)) < mp.mpf("1e-20")

    def test_index_out_of_range(self, logistic):
        with pytest.raises(ArgumentError):
            bump(BumpSystem(2, 2), logistic, 3, 0.1)


class TestOperator:
    """Tests for the Taylor-bump operator."""

    def test_taylor_at_node(self, square):
        with precision(128):
            exact = taylor_at_node(square, 2, mp.mpf("0.25"), mp.mpf("0.4"))
            first = taylor_at_node(square, 1, mp.mpf("0.25"), mp.mpf("0.4"))
            assert abs(exact - mp.mpf("0.16")) < mp.mpf(10) ** -30
            assert abs(first - mp.mpf("0.1375")) < mp.mpf(10) ** -30

    def test_constant_one(self, logistic):
        """Test that Φ reproduces g ≡ 1 up to the sigmoid tail."""
        target = constant_target(1)
        A = 12
        error = grid_sup_norm(
            lambda t: mp.mpf(1), lambda t: phi_operator(target, 4, 0, A, logistic, t), HALF
        )
        assert error <= delta_phi(logistic, A) + mp.mpf(10) ** -12

    def test_linear_within_bound(self, logistic, linear):
        n, A = 8, 64
        error = grid_sup_norm(linear, lambda t: phi_operator(linear, n, 0, A, logistic, t), HALF)
        assert error <= operator_error_bound(linear, n, A, logistic)


class TestBuildUnivariateNet:
    """Tests for the two-hidden-layer net."""

    def test_widths(self, logistic, linear):
        build = build_univariate_net(linear, 2, 4, mp.mpf(1) / 4, logistic)
        assert build.net.arch.widths == (1, 3, 27)
        assert build.gate_slots == 9
        assert build.net.metadata["builder"] == "univariate"

    def test_zero_target_gives_zero_net(self, logistic, zero_target):
        build = build_univariate_net(zero_target, 2, 4, mp.mpf(1) / 4, logistic)
        with precision(build.precision_bits):
            for t in (0, mp.mpf("0.2"), mp.mpf("0.5")):
                assert evaluate(build.net, [t]) == 0

    def test_error_within_bound(self, logistic, linear):
        build = build_univariate_net(linear, 4, 16, mp.mpf(1) / 16, logistic)
        assert net_error(build, linear) <= univariate_error_bound(build, logistic)

    def test_constants(self, logistic, linear):
        """Test C̃_4 = C̃_3 + 2B1² + 4B1 + 1 with B1 = 4(‖g‖ + c0 + 2)."""
        build = build_univariate_net(linear, 2, 4, mp.mpf(1) / 4, logistic)
        with precision(build.precision_bits):
            assert build.B1 == 4 * (mp.mpf(1) / 2 + 1 + 2)
            assert build.C4 == build.C3 + 2 * build.B1**2 + 4 * build.B1 + 1

    def test_weight_caps(self, logistic, linear):
        n, A = 4, 16
        build = build_univariate_net(linear, n, A, mp.mpf(1) / 16, logistic)
        assert audit_weight_caps(build.net, A, n, logistic.anchor) == []

    def test_rate(self, logistic, linear):
        """Test that A = n², eps = n^−2 gives error decaying like 1/n."""
        ns = [4, 8, 16]
        errors = []
        for n in ns:
            build = build_univariate_net(linear, n, n * n, mp.mpf(n) ** -2, logistic)
            errors.append(float(net_error(build, linear)))
        assert fit_loglog_slope(ns, errors) <= -0.7

    def test_smoothness_above_order(self, logistic, square):
        with pytest.raises(UnsupportedOrderError):
            build_univariate_net(square, 2, 4, 0.25, logistic, s0=1)

    def test_invalid_eps(self, logistic, linear):
        with pytest.raises(ArgumentError):
            build_univariate_net(linear, 2, 4, 0, logistic)


class TestInnerBudget:
    """Tests for the inner approximation budget."""

    def test_smooth_branch(self):
        assert inner_budget(mp.mpf(1) / 2, CascadeBranch.SMOOTH) == mp.mpf(2) ** -9

    def test_low_order_branch(self):
        value = inner_budget(mp.mpf(1) / 2, CascadeBranch.LOW_ORDER, v0=mp.mpf(1) / 2)
        assert value == mp.mpf(2) ** -15


class TestEscalate:
    """Tests for precision escalation."""

    @pytest.fixture
    def arch(self):
        return TreeArch.uniform((1, 1), Activation(name="logistic"))

    def test_rebuilds_at_required_precision(self, arch):
        calls = []

        def build(bits):
            calls.append(bits)
            return TreeNet.zeros(arch, bits)

        net = escalate(build, mp.mpf(1) / 2, bits=64, ceiling=8192)
        assert calls == [64, 65]
        assert net.precision_bits == 65

    def test_ceiling(self, arch):
        with pytest.raises(PrecisionError) as exc_info:
            escalate(lambda bits: TreeNet.zeros(arch, bits), mp.mpf(10) ** -100, bits=64, ceiling=200)
        assert exc_info.value.required_bits > 200

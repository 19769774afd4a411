"""
Configuration for pytest.
"""

import os

import pytest
from unittest.mock import patch

# Keep test runs independent of a developer's .env
os.environ["RADIAL_NETS_PRECISION_BITS"] = "256"
os.environ["RADIAL_NETS_ACTIVATION"] = "logistic"

from radial_deep_nets.activations import Activation, anchored
from radial_deep_nets.config import ActivationName, CascadeBranch, config
from radial_deep_nets.univariate_builder import constant_target, linear_target, square_target

TEST_SETTINGS = dict(
    precision_bits=256,
    max_precision_bits=8192,
    activation=ActivationName.LOGISTIC,
    s0=3,
    theta0_tol=0.02,
    cascade=CascadeBranch.SMOOTH,
    sup_grid_count=501,
    sup_jitter_count=50,
    quadrature_panels=256,
    derivative_scan_count=2001,
    n_star_cap=16,
    seed=0,
    verbose=False,
)


@pytest.fixture(autouse=True)
def small_config(tmp_path):
    """Automatically shrink grids and scans for all tests."""
    # Patch the shared config so every module sees the same settings
    with patch.multiple(config, output_dir=str(tmp_path / "results"), **TEST_SETTINGS):
        yield config


@pytest.fixture(scope="session")
def logistic():
    """Logistic activation anchored for s0 = 3."""
    return anchored(Activation(name="logistic"), s0=3, tol=0.02)


@pytest.fixture
def linear():
    """g(t) = t on [0, 1/2] with s = 0, v = 1."""
    return linear_target()


@pytest.fixture
def square():
    """g(t) = t² on [0, 1/2] with s = 2."""
    return square_target(s=2)


@pytest.fixture
def zero_target():
    return constant_target(0)

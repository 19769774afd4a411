"""
Configuration management for radial deep net experiments.
Handles environment variables and other configuration options.
"""

import logging
import os
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from dotenv import load_dotenv

from radial_deep_nets.exceptions import ConfigurationError

# Load environment variables from .env file
load_dotenv()

logger = logging.getLogger(__name__)

ENV_PREFIX = "RADIAL_NETS_"


class ActivationName(str, Enum):
    """Supported activation functions."""
    LOGISTIC = "logistic"
    TANH_SHIFTED = "tanh-shifted"
    ARCTAN_SHIFTED = "arctan-shifted"
    GOMPERTZ = "gompertz"
    IDENTITY = "identity"

    @classmethod
    def from_string(cls, value: Optional[str]) -> "ActivationName":
        """Convert string to ActivationName enum."""
        if not value:
            return cls.LOGISTIC

        try:
            return cls(value.lower())
        except ValueError:
            raise ConfigurationError(
                f"Unknown activation '{value}'. "
                f"Choose one of: {', '.join(a.value for a in cls)}"
            )


class CascadeBranch(str, Enum):
    """Smoothness branch of the epsilon cascade."""
    SMOOTH = "smooth"      # s0 >= 3
    LOW_ORDER = "low-order"  # s0 = 2

    @classmethod
    def from_string(cls, value: Optional[str]) -> "CascadeBranch":
        """Convert string to CascadeBranch enum."""
        if not value:
            return cls.SMOOTH

        try:
            return cls(value.lower())
        except ValueError:
            raise ConfigurationError(f"Unknown cascade branch '{value}'.")


def _env(name: str, default: str) -> str:
    return os.getenv(ENV_PREFIX + name, default)


@dataclass
class Config:
    """Configuration for construction, evaluation and experiments."""
    # Precision
    precision_bits: int = 256
    max_precision_bits: int = 8192

    # Activation
    activation: ActivationName = ActivationName.LOGISTIC
    s0: int = 3
    theta0_tol: float = 0.02
    max_derivative_order: int = 10
    derivative_scan_count: int = 10_000
    cascade: CascadeBranch = CascadeBranch.SMOOTH

    # Numeric oracles
    sup_grid_count: int = 10_000
    sup_jitter_count: int = 1_000
    quadrature_panels: int = 2048

    # Experiments
    n_star_cap: int = 16
    seed: int = 0
    output_dir: str = "results"
    verbose: bool = False

    @classmethod
    def from_env(cls) -> "Config":
        """Create a Config instance from environment variables."""
        config = cls()

        config.precision_bits = int(_env("PRECISION_BITS", str(config.precision_bits)))
        config.max_precision_bits = int(
            _env("MAX_PRECISION_BITS", str(config.max_precision_bits))
        )

        config.activation = ActivationName.from_string(_env("ACTIVATION", "logistic"))
        config.s0 = int(_env("SMOOTHNESS_ORDER", str(config.s0)))
        config.theta0_tol = float(_env("THETA0_TOL", str(config.theta0_tol)))
        config.max_derivative_order = int(
            _env("MAX_DERIVATIVE_ORDER", str(config.max_derivative_order))
        )
        config.derivative_scan_count = int(
            _env("DERIVATIVE_SCAN_COUNT", str(config.derivative_scan_count))
        )
        config.cascade = CascadeBranch.from_string(_env("CASCADE", "smooth"))

        config.sup_grid_count = int(_env("SUP_GRID_COUNT", str(config.sup_grid_count)))
        config.sup_jitter_count = int(
            _env("SUP_JITTER_COUNT", str(config.sup_jitter_count))
        )
        config.quadrature_panels = int(
            _env("QUADRATURE_PANELS", str(config.quadrature_panels))
        )

        config.n_star_cap = int(_env("N_STAR_CAP", str(config.n_star_cap)))
        config.seed = int(_env("SEED", str(config.seed)))
        config.output_dir = _env("OUTPUT_DIR", config.output_dir)
        config.verbose = _env("VERBOSE", "false").lower() in ("true", "1", "yes")

        return config


# Default config instance
config = Config.from_env()


def validate_config() -> bool:
    """Validate the configuration."""
    is_valid = True

    if config.precision_bits < 53:
        logger.error("precision_bits must be at least 53 (got %d).", config.precision_bits)
        is_valid = False

    if config.precision_bits > config.max_precision_bits:
        logger.error(
            "precision_bits %d exceeds max_precision_bits %d.",
            config.precision_bits,
            config.max_precision_bits,
        )
        is_valid = False

    if config.s0 < 2:
        logger.error("Smoothness order s0 must be at least 2 (got %d).", config.s0)
        is_valid = False

    if config.s0 > config.max_derivative_order - 1:
        logger.error(
            "s0 = %d needs derivatives up to order %d, above max_derivative_order %d.",
            config.s0,
            config.s0 + 1,
            config.max_derivative_order,
        )
        is_valid = False

    if config.theta0_tol <= 0:
        logger.error("theta0_tol must be positive.")
        is_valid = False

    if min(config.sup_grid_count, config.quadrature_panels, config.derivative_scan_count) < 2:
        logger.error("Grid and quadrature sizes must be at least 2.")
        is_valid = False

    if config.cascade == CascadeBranch.LOW_ORDER and config.s0 != 2:
        logger.warning("Low-order cascade selected with s0 = %d; it assumes s0 = 2.", config.s0)

    return is_valid

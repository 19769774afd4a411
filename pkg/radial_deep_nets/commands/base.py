"""
Base classes for experiment commands.
"""

import logging
from pathlib import Path
from typing import Any, ClassVar, Dict, Optional, Type

from pydantic import BaseModel, ConfigDict, Field, field_validator

from radial_deep_nets.activations import Activation, anchored
from radial_deep_nets.config import ActivationName, config
from radial_deep_nets.exceptions import RadialNetError
from radial_deep_nets.radial_builder import RadialTarget
from radial_deep_nets.univariate_builder import UnivariateTarget, get_target

logger = logging.getLogger(__name__)


class CommandException(RadialNetError):
    """Exception raised when a command cannot complete."""
    pass


class TargetSpec(BaseModel):
    """Catalogue target g* with its smoothness (s, v) and factory parameters."""
    model_config = ConfigDict(extra="forbid")

    name: str = "linear"
    s: int = Field(default=0, ge=0)
    v: float = Field(default=1.0, gt=0, le=1)
    params: Dict[str, float] = Field(default_factory=dict)

    @property
    def r(self) -> float:
        return self.s + self.v

    def univariate(self) -> UnivariateTarget:
        """g* on [0, 1]."""
        return get_target(self.name, s=self.s, v=self.v, domain=(0, 1), **self.params)

    def radial(self, d: int) -> RadialTarget:
        return RadialTarget(self.univariate(), d)


class ExperimentConfig(BaseModel):
    """Settings shared by every command; flags override the config document."""
    model_config = ConfigDict(extra="forbid")

    seed: int = Field(default_factory=lambda: config.seed)
    precision_bits: int = Field(default_factory=lambda: config.precision_bits, ge=53)
    out: str = Field(default_factory=lambda: config.output_dir)
    activation: ActivationName = Field(default_factory=lambda: config.activation)

    @field_validator("activation", mode="before")
    @classmethod
    def _coerce_activation(cls, value):
        if isinstance(value, str):
            return ActivationName.from_string(value)
        return value


class ExperimentCommand(BaseModel):
    """Base class for experiment commands."""
    # The name and description must be class variables with ClassVar annotation
    name: ClassVar[str] = ""
    description: ClassVar[str] = ""
    config_model: ClassVar[Type[ExperimentConfig]] = ExperimentConfig

    max_precision_bits: int = Field(default_factory=lambda: config.max_precision_bits)

    def load_config(self, document: Dict[str, Any]) -> ExperimentConfig:
        """Validate a merged config document against this command's schema."""
        return self.config_model.model_validate(document)

    def run(self, cfg: ExperimentConfig) -> Dict[str, Any]:
        """
        Run the command.

        Args:
            cfg: Validated configuration

        Returns:
            Summary record of what was written
        """
        raise NotImplementedError

    def output_path(self, cfg: ExperimentConfig, filename: str) -> Path:
        path = Path(cfg.out) / filename
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def activation(self, cfg: ExperimentConfig, s0: Optional[int] = None) -> Activation:
        """The configured activation anchored at θ0."""
        act = Activation(name=cfg.activation)
        return anchored(act, s0=s0)

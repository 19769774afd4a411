"""
Command for auditing activations and saved nets.
"""

from typing import Any, ClassVar, Dict, Optional, Type

from mpmath import mp
from pydantic import Field

from radial_deep_nets.activations import Activation, validate_assumptions
from radial_deep_nets.commands.base import ExperimentCommand, ExperimentConfig
from radial_deep_nets.reporting import write_report
from radial_deep_nets.tree_net import (
    BoundedClassSpec,
    check_bounds,
    coefficient_bits,
    fast_path_allowed,
    load_net,
    max_abs_weight,
    param_count,
    required_precision_bits,
)


class AuditConfig(ExperimentConfig):
    """What to audit: the activation, and optionally a saved net."""
    r0: float = Field(default=3.5, gt=0)
    net_path: Optional[str] = None
    alpha: float = Field(default=1.0, ge=1)
    R: Optional[float] = Field(default=None, ge=1)
    target_error: float = Field(default=1e-6, gt=0)
    report_file: str = "audit.json"


class AuditCommand(ExperimentCommand):
    """Check activation assumptions, parameter bounds and precision needs."""
    name: ClassVar[str] = "audit"
    description: ClassVar[str] = """
    Audit the configured activation (boundedness, anchor θ0, tail decay).
    With net_path, also check the parameter box R·(A_L)^alpha (R defaults to
    the net's max weight) and report the precision needed for target_error.
    """
    config_model: ClassVar[Type[ExperimentConfig]] = AuditConfig

    def run(self, cfg: AuditConfig) -> Dict[str, Any]:
        report = validate_assumptions(Activation(name=cfg.activation), cfg.r0)
        record: Dict[str, Any] = {"activation": report.model_dump()}

        if cfg.net_path:
            net = load_net(cfg.net_path)
            with mp.workprec(net.precision_bits):
                R = mp.mpf(cfg.R) if cfg.R is not None else max(mp.mpf(1), max_abs_weight(net))
                bounds = check_bounds(net, BoundedClassSpec(alpha=cfg.alpha, R=R))
                required = required_precision_bits(net, cfg.target_error)
                record["net"] = {
                    "widths": list(net.arch.widths),
                    "param_count": param_count(net.arch),
                    "bounds_ok": bounds.ok,
                    "bound": mp.nstr(bounds.bound, 12),
                    "worst": str(bounds.worst) if bounds.worst else None,
                    "worst_value": mp.nstr(bounds.worst_value, 12),
                    "precision_bits": net.precision_bits,
                    "coefficient_bits": float(coefficient_bits(net)),
                    "required_bits": required,
                    "precision_ok": required <= net.precision_bits,
                    "fast_path_allowed": fast_path_allowed(net, cfg.target_error),
                }

        path = write_report(record, self.output_path(cfg, cfg.report_file), cfg.model_dump(mode="json"))
        return {"report": str(path), "satisfied": report.satisfied}


def cmd_audit(cfg: AuditConfig) -> Dict[str, Any]:
    return AuditCommand().run(cfg)

"""
Command for building a radial deep net and saving it with its report.
"""

from typing import Any, ClassVar, Dict, Optional, Type

from pydantic import Field

from radial_deep_nets.commands.base import ExperimentCommand, ExperimentConfig, TargetSpec
from radial_deep_nets.config import CascadeBranch, config
from radial_deep_nets.radial_builder import audit_bounds, build_radial_net, parameter_sandwich
from radial_deep_nets.reporting import write_report
from radial_deep_nets.tree_net import save_net


class BuildConfig(ExperimentConfig):
    """Parameters of a single radial build."""
    target: TargetSpec = Field(default_factory=TargetSpec)
    d: int = Field(default=2, ge=2)
    n: int = Field(default=8, ge=2)
    A_override: Optional[float] = Field(default=None, ge=1)
    cascade: CascadeBranch = Field(default_factory=lambda: config.cascade)
    measured_constants: bool = False
    n_radial: int = Field(default=16, ge=0)
    n_sphere: int = Field(default=8, ge=0)
    net_file: str = "net.json"
    report_file: str = "build_report.json"


class BuildCommand(ExperimentCommand):
    """Build f(x) = g*(|x|²) and write the net document and build report."""
    name: ClassVar[str] = "build"
    description: ClassVar[str] = """
    Build the four-level radial deep net for a catalogue target.
    Writes the serialized net (net_file) and a JSON build report
    (report_file) holding realized and hypothesis-class widths, parameter count, epsilon cascade,
    max weight, measured sup error and precision.
    """
    config_model: ClassVar[Type[ExperimentConfig]] = BuildConfig

    def run(self, cfg: BuildConfig) -> Dict[str, Any]:
        act = self.activation(cfg)
        target = cfg.target.radial(cfg.d)
        net, report = build_radial_net(
            target,
            cfg.n,
            act,
            A_override=cfg.A_override,
            cascade=cfg.cascade,
            precision_bits=cfg.precision_bits,
            measured_constants=cfg.measured_constants,
            measure=(cfg.n_radial, cfg.n_sphere),
        )
        bounds = audit_bounds(net, report, act)
        lower, count, upper = parameter_sandwich(net, cfg.target.s, cfg.n)

        net_path = save_net(net, self.output_path(cfg, cfg.net_file))
        record = report.model_dump()
        record["theta0"] = act.theta0
        record["bounds_ok"] = bounds.ok
        record["parameter_sandwich"] = {"lower": lower, "count": count, "upper": upper}
        report_path = write_report(record, self.output_path(cfg, cfg.report_file), cfg.model_dump(mode="json"))
        return {
            "net": str(net_path),
            "report": str(report_path),
            "realized_widths": report.realized_widths,
        }


def cmd_build(cfg: BuildConfig) -> Dict[str, Any]:
    return BuildCommand().run(cfg)

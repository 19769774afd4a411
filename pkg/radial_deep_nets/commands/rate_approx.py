"""
Command for sweeping n and measuring the approximation rate of radial builds.
"""

import logging
from typing import Any, ClassVar, Dict, List, Optional, Type

from mpmath import mp
from pydantic import Field

from radial_deep_nets.commands.base import ExperimentCommand, ExperimentConfig, TargetSpec
from radial_deep_nets.config import CascadeBranch, config
from radial_deep_nets.numeric_core import fit_loglog_slope
from radial_deep_nets.radial_builder import build_radial_net, measure_radial_error
from radial_deep_nets.reporting import write_report, write_table

logger = logging.getLogger(__name__)


class RateApproxConfig(ExperimentConfig):
    """An n sweep of radial builds for one target."""
    target: TargetSpec = Field(default_factory=TargetSpec)
    d: int = Field(default=2, ge=2)
    n_values: List[int] = Field(default_factory=lambda: [4, 8, 16, 32], min_length=1)
    cascade: CascadeBranch = Field(default_factory=lambda: config.cascade)
    A_override: Optional[float] = Field(default=None, ge=1)
    n_radial: int = Field(default=32, ge=1)
    n_sphere: int = Field(default=8, ge=1)
    table_file: str = "rate_approx.csv"
    report_file: str = "rate_approx.json"


class RateApproxCommand(ExperimentCommand):
    """Build at every n and fit the log-log slope of the measured sup error."""
    name: ClassVar[str] = "rate-approx"
    description: ClassVar[str] = """
    Sweep n, build the radial net at each value and measure its sup error.
    CSV columns: n, d, r, sup_error, params; a final row carries the
    fitted log-log slope in the sup_error column.
    """
    config_model: ClassVar[Type[ExperimentConfig]] = RateApproxConfig

    def run(self, cfg: RateApproxConfig) -> Dict[str, Any]:
        act = self.activation(cfg)
        target = cfg.target.radial(cfg.d)
        rows = []
        for n in sorted(cfg.n_values):
            net, report = build_radial_net(
                target, n, act,
                A_override=cfg.A_override,
                cascade=cfg.cascade,
                precision_bits=cfg.precision_bits,
                measure=(0, 0),
            )
            error = measure_radial_error(net, target, cfg.n_radial, cfg.n_sphere, seed=cfg.seed)
            rows.append({
                "n": n,
                "d": cfg.d,
                "r": cfg.target.r,
                "sup_error": float(error),
                "params": report.param_count,
            })
            logger.info("n=%d sup error %s", n, mp.nstr(error, 6))

        errors = [row["sup_error"] for row in rows]
        slope = (
            fit_loglog_slope([row["n"] for row in rows], errors)
            if len(rows) >= 2 and all(e > 0 for e in errors)
            else float("nan")
        )
        table = rows + [{"n": "slope", "d": "", "r": "", "sup_error": slope, "params": ""}]
        table_path = write_table(table, self.output_path(cfg, cfg.table_file))
        report_path = write_report(
            {"rows": rows, "slope": slope}, self.output_path(cfg, cfg.report_file),
            cfg.model_dump(mode="json"),
        )
        return {"table": str(table_path), "report": str(report_path), "slope": slope}


def cmd_rate_approx(cfg: RateApproxConfig) -> Dict[str, Any]:
    return RateApproxCommand().run(cfg)

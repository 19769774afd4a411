"""
Command for the empirical learning-rate sweep.
"""

from typing import Any, ClassVar, Dict, List, Type

from pydantic import Field, model_validator

from radial_deep_nets.commands.base import ExperimentCommand, ExperimentConfig, TargetSpec
from radial_deep_nets.learning_harness import LearningConfig, rate_sweep
from radial_deep_nets.reporting import write_report, write_table


class RateLearnConfig(ExperimentConfig):
    """Sample sizes, trials and learner settings for a rate sweep."""
    target: TargetSpec = Field(default_factory=TargetSpec)
    d: int = Field(default=2, ge=2)
    m_list: List[int] = Field(default_factory=lambda: [64, 128, 256, 512, 1024], min_length=1)
    trials: int = Field(default=3, ge=3)
    learning: LearningConfig = Field(default_factory=LearningConfig)
    table_file: str = "rate_learn.csv"
    report_file: str = "rate_learn.json"

    @model_validator(mode="after")
    def _check_m_list(self) -> "RateLearnConfig":
        if any(b <= a for a, b in zip(self.m_list, self.m_list[1:])):
            raise ValueError("m_list must be strictly increasing")
        return self


class RateLearnCommand(ExperimentCommand):
    """Train over the hypothesis-class widths for each m and tabulate median excess risk."""
    name: ClassVar[str] = "rate-learn"
    description: ClassVar[str] = """
    Run approximate ERM for each sample size m with n = floor(C m^(1/(2r+1))).
    CSV columns: m, n, trials, median_excess_risk, stderr, theory_slope. A final
    row (m = slope) holds the fitted slope and, under theory_slope, -2r/(2r+1).
    """
    config_model: ClassVar[Type[ExperimentConfig]] = RateLearnConfig

    def run(self, cfg: RateLearnConfig) -> Dict[str, Any]:
        learning = cfg.learning.model_copy(update={
            "seed": cfg.seed,
            "d": cfg.d,
            "r": cfg.target.r,
            "activation": cfg.activation,
        })
        target = cfg.target.radial(cfg.d)
        table = rate_sweep(target, cfg.m_list, cfg.trials, learning)
        table_path = write_table(table.to_frame(), self.output_path(cfg, cfg.table_file))
        report_path = write_report(
            {
                "rows": table.rows.to_dict(orient="records"),
                "slope": table.slope,
                "theory_slope": table.theory_slope,
                "label": "approximate ERM",
            },
            self.output_path(cfg, cfg.report_file),
            cfg.model_dump(mode="json"),
        )
        return {"table": str(table_path), "report": str(report_path), "slope": table.slope}


def cmd_rate_learn(cfg: RateLearnConfig) -> Dict[str, Any]:
    return RateLearnCommand().run(cfg)

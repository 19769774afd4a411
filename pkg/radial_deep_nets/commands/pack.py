"""
Command for generating packing families and auditing their pairwise distances.
"""

from typing import Any, ClassVar, Dict, List, Optional, Type

from mpmath import mp
from pydantic import Field

from radial_deep_nets.commands.base import ExperimentCommand, ExperimentConfig
from radial_deep_nets.hard_instances import (
    BumpProfile,
    LowerBoundParams,
    PackingFamily,
    enumerate_signs,
    lower_bound_curves,
    make_bump,
    pairwise_packing_distance,
    predicted_distance,
    sample_signs,
)
from radial_deep_nets.numeric_core import make_rng
from radial_deep_nets.reporting import write_report, write_table


class PackConfig(ExperimentConfig):
    """Packing family parameters and audit settings."""
    N_star: int = Field(default=4, ge=1)
    r: float = Field(default=1.0, gt=0)
    c0: float = Field(default=1.0, gt=0)
    d: int = Field(default=2, ge=2)
    profile: BumpProfile = BumpProfile.AUTO
    sample: bool = False
    sample_count: int = Field(default=32, ge=2)
    all_pairs: bool = False
    grid_count: int = Field(default=2000, ge=2)
    tolerance: float = Field(default=0.01, gt=0)
    curves: Optional[LowerBoundParams] = None
    table_file: str = "pack.csv"
    curves_file: str = "lower_bounds.csv"
    report_file: str = "pack.json"


class PackCommand(ExperimentCommand):
    """Verify that distinct family members sit at the predicted distance."""
    name: ClassVar[str] = "pack"
    description: ClassVar[str] = """
    Generate the sign-flip packing family and compare each audited pair's
    grid sup-norm distance with 2·peak·(N*)^(-r).
    CSV columns: signs_a, signs_b, distance, predicted, pass.
    Pairs are taken against the first vector unless all_pairs is set.
    """
    config_model: ClassVar[Type[ExperimentConfig]] = PackConfig

    def run(self, cfg: PackConfig) -> Dict[str, Any]:
        bump = make_bump(cfg.r, cfg.c0, cfg.profile)
        family = PackingFamily(N_star=cfg.N_star, r=cfg.r, c0=cfg.c0, d=cfg.d)
        if cfg.sample:
            rng = make_rng(cfg.seed, 0x9AC4)
            vectors = list(dict.fromkeys(sample_signs(cfg.N_star, cfg.sample_count, rng)))
        else:
            vectors = list(enumerate_signs(cfg.N_star))

        if cfg.all_pairs:
            pairs = [(a, b) for i, a in enumerate(vectors) for b in vectors[i + 1:]]
        else:
            pairs = [(vectors[0], b) for b in vectors[1:]]

        predicted = predicted_distance(family, bump)
        rows: List[Dict[str, Any]] = []
        for a, b in pairs:
            distance = pairwise_packing_distance(family, bump, a, b, cfg.grid_count)
            rows.append({
                "signs_a": "".join("+" if e > 0 else "-" for e in a),
                "signs_b": "".join("+" if e > 0 else "-" for e in b),
                "distance": float(distance),
                "predicted": float(predicted),
                "pass": bool(abs(distance - predicted) <= cfg.tolerance * predicted),
            })

        table_path = write_table(rows, self.output_path(cfg, cfg.table_file))
        record: Dict[str, Any] = {
            "family": family.descriptor(bump),
            "pairs": len(rows),
            "passed": sum(row["pass"] for row in rows),
            "predicted": mp.nstr(predicted, 15),
        }
        if cfg.curves is not None:
            curves = lower_bound_curves(cfg.curves)
            write_table(curves.table, self.output_path(cfg, cfg.curves_file))
            record["C3"] = mp.nstr(curves.C3, 15)
            record["C4"] = mp.nstr(curves.C4, 15)
        report_path = write_report(record, self.output_path(cfg, cfg.report_file), cfg.model_dump(mode="json"))
        return {"table": str(table_path), "report": str(report_path), "passed": record["passed"],
                "pairs": record["pairs"]}


def cmd_pack(cfg: PackConfig) -> Dict[str, Any]:
    return PackCommand().run(cfg)

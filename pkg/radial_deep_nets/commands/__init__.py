"""
Experiment commands exposed by the CLI.
"""

from radial_deep_nets.commands.audit import AuditCommand, AuditConfig, cmd_audit
from radial_deep_nets.commands.base import (
    CommandException,
    ExperimentCommand,
    ExperimentConfig,
    TargetSpec,
)
from radial_deep_nets.commands.build import BuildCommand, BuildConfig, cmd_build
from radial_deep_nets.commands.pack import PackCommand, PackConfig, cmd_pack
from radial_deep_nets.commands.rate_approx import RateApproxCommand, RateApproxConfig, cmd_rate_approx
from radial_deep_nets.commands.rate_learn import RateLearnCommand, RateLearnConfig, cmd_rate_learn

__all__ = [
    "ExperimentCommand",
    "ExperimentConfig",
    "CommandException",
    "TargetSpec",
    "BuildCommand",
    "BuildConfig",
    "RateApproxCommand",
    "RateApproxConfig",
    "RateLearnCommand",
    "RateLearnConfig",
    "PackCommand",
    "PackConfig",
    "AuditCommand",
    "AuditConfig",
    "cmd_build",
    "cmd_rate_approx",
    "cmd_rate_learn",
    "cmd_pack",
    "cmd_audit",
    "get_experiment_commands",
]


def get_experiment_commands():
    """Get all experiment commands keyed by subcommand name."""
    commands = [
        BuildCommand(),
        RateApproxCommand(),
        RateLearnCommand(),
        PackCommand(),
        AuditCommand(),
    ]
    return {command.name: command for command in commands}

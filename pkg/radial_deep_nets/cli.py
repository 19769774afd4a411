"""
Command-line interface for radial deep net experiments.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from radial_deep_nets.commands import get_experiment_commands
from radial_deep_nets.config import config, validate_config
from radial_deep_nets.exceptions import (
    ArgumentError,
    ConfigurationError,
    ConstructionError,
    EvaluationError,
    PrecisionError,
    SearchFailureError,
    TrainingError,
    UnsupportedOrderError,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_TRAINING = 4

EXIT_CODES = (
    ((ConfigurationError, ValidationError, ArgumentError), EXIT_CONFIG),
    ((PrecisionError, EvaluationError, UnsupportedOrderError, SearchFailureError,
      ConstructionError), EXIT_NUMERIC),
    ((TrainingError,), EXIT_TRAINING),
)


def setup_logger(verbose: bool = False) -> None:
    """Set up logging configuration."""
    logging_level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(
        level=logging_level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=[logging.StreamHandler()],
    )


def parse_args(args: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse command-line arguments."""
    parser = argparse.ArgumentParser(
        prog="radial-nets",
        description="Radial deep nets - build, audit and sweep four-level radial nets",
    )

    # Shared experiment settings, accepted after every subcommand
    common = argparse.ArgumentParser(add_help=False)
    config_group = common.add_argument_group("Experiment Configuration")
    config_group.add_argument(
        "--config",
        help="JSON config document for the subcommand",
    )
    config_group.add_argument(
        "--override",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override a config key (dotted keys, JSON values); may repeat",
    )
    config_group.add_argument("--seed", type=int, help="Random seed")
    config_group.add_argument(
        "--precision-bits",
        type=int,
        help="Working precision in bits",
    )
    config_group.add_argument("--out", help="Output directory")
    config_group.add_argument(
        "--activation",
        help="Activation name (logistic, tanh-shifted, arctan-shifted, gompertz)",
    )

    output_group = common.add_argument_group("Output Configuration")
    output_group.add_argument(
        "--verbose", "-v",
        action="store_true",
        help="Enable verbose output",
    )

    parser.add_argument(
        "--version",
        action="store_true",
        help="Show version information and exit",
    )

    subparsers = parser.add_subparsers(dest="command")
    for name, command in get_experiment_commands().items():
        subparsers.add_parser(
            name,
            parents=[common],
            help=command.__doc__,
            description=command.description.strip(),
        )

    return parser.parse_args(args)


def parse_override(item: str) -> Any:
    """Split KEY=VALUE; the value is parsed as JSON and falls back to a plain string."""
    key, sep, raw = item.partition("=")
    if not sep or not key:
        raise ConfigurationError(f"Override '{item}' is not of the form KEY=VALUE")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def set_dotted(document: Dict[str, Any], key: str, value: Any) -> None:
    """Assign ``value`` at a dotted path, creating intermediate tables."""
    parts = key.split(".")
    node = document
    for part in parts[:-1]:
        child = node.setdefault(part, {})
        if not isinstance(child, dict):
            raise ConfigurationError(f"Override '{key}' descends into non-table '{part}'")
        node = child
    node[parts[-1]] = value


def load_document(path: Optional[str]) -> Dict[str, Any]:
    if not path:
        return {}
    try:
        document = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigurationError(f"Cannot read config document {path}: {e}")
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"Config document {path} is not valid JSON: {e}")
    if not isinstance(document, dict):
        raise ConfigurationError(f"Config document {path} must be a JSON object")
    return document


def merge_config(parsed_args: argparse.Namespace) -> Dict[str, Any]:
    """
    Build the config document for a subcommand.

    The file document is applied first, then each --override, then the explicit flags.
    """
    document = load_document(parsed_args.config)
    for item in parsed_args.override:
        key, value = parse_override(item)
        set_dotted(document, key, value)

    flags = {
        "seed": parsed_args.seed,
        "precision_bits": parsed_args.precision_bits,
        "out": parsed_args.out,
        "activation": parsed_args.activation,
    }
    document.update({key: value for key, value in flags.items() if value is not None})
    return document


def exit_code_for(error: BaseException) -> int:
    for kinds, code in EXIT_CODES:
        if isinstance(error, kinds):
            return code
    return 1


def main(args: Optional[List[str]] = None) -> int:
    """Main entry point for the CLI."""
    # Parse arguments
    parsed_args = parse_args(args)

    # Show version and exit if requested
    if parsed_args.version:
        from radial_deep_nets import __version__
        print(f"Radial Deep Nets v{__version__}")
        return EXIT_OK

    if not parsed_args.command:
        print("No subcommand given; see radial-nets --help", file=sys.stderr)
        return EXIT_CONFIG

    setup_logger(parsed_args.verbose or config.verbose)

    if parsed_args.precision_bits is not None:
        config.precision_bits = parsed_args.precision_bits

    if not validate_config():
        return EXIT_CONFIG

    command = get_experiment_commands()[parsed_args.command]
    try:
        document = merge_config(parsed_args)
        cfg = command.load_config(document)
        logger.debug("Running %s with %s", command.name, cfg.model_dump(mode="json"))
        summary = command.run(cfg)
        print(json.dumps(summary, indent=2, sort_keys=True, default=str))
        return EXIT_OK

    except Exception as e:
        code = exit_code_for(e)
        if code == 1:
            logger.exception("Unexpected error in %s", parsed_args.command)
        else:
            logger.error("%s: %s", type(e).__name__, e)
        return code


if __name__ == "__main__":
    sys.exit(main())

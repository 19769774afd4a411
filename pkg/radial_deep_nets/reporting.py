"""
Report writers for experiment outputs.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Optional, Union

import pandas as pd

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def write_table(rows: Union[pd.DataFrame, Iterable[Mapping[str, Any]]], path: PathLike) -> Path:
    """
    Write rows as CSV.

    Args:
        rows: A DataFrame or an iterable of row mappings
        path: Destination file; parent directories are created

    Returns:
        The written path
    """
    frame = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame(list(rows))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n")
    logger.info("Wrote %d rows to %s", len(frame), path)
    return path


def read_table(path: PathLike) -> pd.DataFrame:
    return pd.read_csv(path)


def write_report(
    record: Mapping[str, Any], path: PathLike, config_echo: Optional[Mapping[str, Any]] = None
) -> Path:
    """Write a JSON report with the experiment config echoed under "config"."""
    document: Dict[str, Any] = dict(record)
    if config_echo is not None:
        document["config"] = dict(config_echo)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(document, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")
    logger.info("Wrote report to %s", path)
    return path

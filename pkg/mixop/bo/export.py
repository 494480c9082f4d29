"""Write profiles, reports and summary tables to an output directory.

Profiles are CSV files with the header ``x,value`` (boundary rows included),
reports are indented JSON documents and summaries are CSV tables with a fixed
column order.  Every file is written through
:func:`~mixop.bo.utils.atomic_write_text`, so an interrupted run never leaves
a truncated file behind.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, List, Mapping, Sequence

import pandas as pd
import structlog

from .mesh import CoeffVec, profile_frame
from .utils import atomic_write_text

logger = structlog.get_logger(__name__)

FLOAT_FORMAT = "%.15g"


def write_profile(u: CoeffVec, path: Path) -> Path:
    """Write the nodal profile of ``u``.

    Parameters
    ----------
    u : CoeffVec
        Discrete function; the zero boundary values are added as first and
        last rows.
    path : pathlib.Path
        Target CSV file.
    """
    text = profile_frame(u).to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    atomic_write_text(path, text)
    logger.debug("wrote_profile", path=str(path), rows=u.space.n_cells + 1)
    return path


def write_report(document: Mapping[str, Any], path: Path) -> Path:
    """Write a JSON report with stable key order."""
    atomic_write_text(path, json.dumps(document, indent=2, ensure_ascii=False) + "\n")
    logger.debug("wrote_report", path=str(path))
    return path


def write_summary(rows: Sequence[Dict[str, Any]], columns: List[str], path: Path) -> Path:
    """Write summary rows with exactly ``columns`` in that order."""
    frame = pd.DataFrame(list(rows), columns=columns)
    text = frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    atomic_write_text(path, text)
    logger.debug("wrote_summary", path=str(path), rows=len(frame))
    return path

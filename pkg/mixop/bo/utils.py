"""Utility functions for mixop-brezis-oswald.

Helpers for logging setup, extended-real formatting and atomic file writes
live here so that the numerical modules stay free of I/O concerns.
"""
from __future__ import annotations

import logging
import math
import os
import tempfile
from pathlib import Path
from typing import Union

import structlog

ExtendedReal = Union[float, str]


def configure_logging(verbose: bool = False, json_logs: bool = False) -> None:
    """Configure structlog for console (default) or JSON-lines output."""
    level = logging.DEBUG if verbose else logging.INFO
    renderer: structlog.types.Processor
    if json_logs:
        renderer = structlog.processors.JSONRenderer()
    else:
        renderer = structlog.dev.ConsoleRenderer(colors=False)
    structlog.configure(
        processors=[
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso", utc=True),
            renderer,
        ],
        wrapper_class=structlog.make_filtering_bound_logger(level),
        cache_logger_on_first_use=False,
    )


def format_extended(value: float) -> ExtendedReal:
    """Return ``value`` for finite floats and ``"+inf"``/``"-inf"`` otherwise."""
    if math.isinf(value):
        return "+inf" if value > 0 else "-inf"
    return float(value)


def parse_extended(value: ExtendedReal) -> float:
    """Inverse of :func:`format_extended`."""
    if isinstance(value, str):
        text = value.strip().lower().replace("−", "-")
        if text in {"+inf", "inf"}:
            return math.inf
        if text == "-inf":
            return -math.inf
        return float(text)
    return float(value)


def atomic_write_text(path: Path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and a rename.

    Readers never observe a partially written file.
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise

"""
ensquant.monitoring.logger
--------------------------
Loguru sinks plus per-job lifecycle events. Every event carries the job id,
experiment, repetition and scheme in `extra`, so the JSON-lines sink holds
one machine-readable record per submit / complete / error.
"""

from __future__ import annotations

import pathlib
import sys
from datetime import datetime, timezone
from typing import Any, Optional

from loguru import logger

LOG_FILE = "run.log.jsonl"

_STDERR_FORMAT = (
    "<green>{time:HH:mm:ss}</green> | <level>{level: <7}</level> | "
    "<cyan>{name}</cyan> - <level>{message}</level>"
)


def configure(level: str = "INFO", out_dir: Optional[pathlib.Path] = None) -> Optional[pathlib.Path]:
    """Replace loguru's default sink; returns the JSON log path if one was added."""
    logger.remove()
    logger.add(sys.stderr, level=level, format=_STDERR_FORMAT)
    if out_dir is None:
        return None
    out_dir = pathlib.Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / LOG_FILE
    logger.add(path, level="DEBUG", serialize=True, enqueue=True)
    return path


def _stamp() -> str:
    return datetime.now(timezone.utc).isoformat()


# ── public API ──────────────────────────────────────────────────────────── #

def log_submit(job_id: str, **context: Any) -> None:
    logger.bind(job=job_id, event="submitted", at=_stamp(), **context).debug("job {} submitted", job_id)


def log_complete(job_id: str, elapsed_ms: int, **context: Any) -> None:
    logger.bind(job=job_id, event="completed", at=_stamp(), elapsed_ms=elapsed_ms, **context).info(
        "job {} completed in {} ms", job_id, elapsed_ms
    )


def log_error(job_id: str, error_message: str, elapsed_ms: int, **context: Any) -> None:
    logger.bind(
        job=job_id, event="failed", at=_stamp(), elapsed_ms=elapsed_ms, error_message=error_message, **context
    ).error("job {} failed after {} ms: {}", job_id, elapsed_ms, error_message)

from __future__ import annotations

import time
from typing import Callable, TypeVar

from lingrowth.logging import get_logger

logger = get_logger(__name__)

T = TypeVar("T")


def run_job(job_name: str, func: Callable[[], T]) -> T:
    start_time = time.monotonic()
    try:
        result = func()
    except Exception:
        duration_ms = (time.monotonic() - start_time) * 1000
        logger.exception(
            "job %s failed",
            job_name,
            extra={"job_name": job_name, "duration_ms": round(duration_ms, 3)},
        )
        raise
    duration_ms = (time.monotonic() - start_time) * 1000
    logger.info(
        "job %s finished",
        job_name,
        extra={"job_name": job_name, "duration_ms": round(duration_ms, 3)},
    )
    return result

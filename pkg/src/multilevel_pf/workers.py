"""Bounded worker pool for independent filter runs."""

import logging
import os
from collections.abc import Callable, Iterable
from concurrent.futures import ProcessPoolExecutor
from typing import TypeVar

from .errors import ConfigurationError

WORKERS_ENV_VAR = "MLPF_WORKERS"

logger = logging.getLogger(__name__)

ItemT = TypeVar("ItemT")
ResultT = TypeVar("ResultT")


def resolve_workers(requested: int | None = None) -> int:
    """Return the pool size from ``requested``, ``MLPF_WORKERS``, or 1.

    Raises:
        ConfigurationError: The resolved value is not a positive integer.
    """
    if requested is not None:
        workers = requested
    else:
        raw = os.environ.get(WORKERS_ENV_VAR, "").strip()
        if not raw:
            return 1
        try:
            workers = int(raw)
        except ValueError as exc:
            raise ConfigurationError(
                f"{WORKERS_ENV_VAR} must be an integer, got {raw!r}"
            ) from exc
    if workers < 1:
        raise ConfigurationError("worker count must be positive")
    return workers


def map_ordered(
    function: Callable[[ItemT], ResultT],
    items: Iterable[ItemT],
    workers: int | None = None,
) -> list[ResultT]:
    """Apply ``function`` to ``items`` and return results in input order.

    Each item must carry its own random stream, so results do not depend on
    the pool size or on completion order. ``function`` and the items must be
    picklable when more than one worker is used.
    """
    tasks = list(items)
    pool_size = min(resolve_workers(workers), max(len(tasks), 1))
    if pool_size == 1:
        return [function(task) for task in tasks]
    logger.debug("dispatching %d tasks to %d workers", len(tasks), pool_size)
    with ProcessPoolExecutor(max_workers=pool_size) as executor:
        return list(executor.map(function, tasks))

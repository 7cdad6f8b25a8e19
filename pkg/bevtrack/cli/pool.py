"""
Ordered map over scenarios, in-process or on a process pool.
"""
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, List, TypeVar

from bevtrack.errors import ConfigError

logger = logging.getLogger(__name__)

WORKERS_ENV = "BEVTRACK_WORKERS"

T = TypeVar("T")
R = TypeVar("R")


def worker_count() -> int:
    """
    Worker count from BEVTRACK_WORKERS; 1 when unset.

    Raises:
        ConfigError: If the variable is not a positive integer
    """
    raw = os.getenv(WORKERS_ENV, "1")
    try:
        workers = int(raw)
    except ValueError:
        workers = 0
    if workers < 1:
        raise ConfigError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}", "CONFIG_INVALID", {WORKERS_ENV: raw})
    return workers


def ordered_map(fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
    """
    Apply `fn` to every item; results keep input order whatever the worker count.

    `fn` must be a module-level function when more than one worker is used.
    """
    items = list(items)
    workers = min(worker_count(), max(1, len(items)))
    if workers == 1:
        return [fn(item) for item in items]
    logger.debug(f"Mapping {len(items)} items over {workers} worker processes")
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))

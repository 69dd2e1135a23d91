import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from app.config.lab_config import JOBS_ENV

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def default_jobs() -> int:
    value = os.environ.get(JOBS_ENV)
    if not value:
        return 1
    try:
        return max(1, int(value))
    except ValueError:
        logger.warning("ignoring %s=%r: not an integer", JOBS_ENV, value)
        return 1


def run_ordered(fn: Callable[[T], R], items: Iterable[T], jobs: Optional[int] = None) -> List[R]:
    """
    Maps ``fn`` over ``items`` on a thread pool of ``jobs`` workers. Results
    come back in input order, so the pool size never changes the output.
    """
    items = list(items)
    jobs = default_jobs() if jobs is None else max(1, jobs)
    if jobs == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(jobs, len(items))) as executor:
        return list(executor.map(fn, items))

"""
Worker Pool - bounded parallel execution with results in input order
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime
from typing import Callable, List, Optional, Sequence, TypeVar

from vitalcast.core.config import settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def run_ordered(fn: Callable[[T], R], items: Sequence[T], max_workers: Optional[int] = None) -> List[R]:
    """
    Apply fn to every item. Runs inline when the cap is 1, otherwise in a
    process pool (fn and items must be picklable). Result order always follows
    `items`; the first failure is re-raised.
    """
    cap = max_workers or settings.THREADS
    workers = max(1, min(cap, len(items)))
    start_time = datetime.now()

    if workers == 1:
        results = [fn(item) for item in items]
    else:
        logger.info(f"[POOL] 🔄 Running {len(items)} tasks on {workers} worker processes")
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(fn, items))

    elapsed = (datetime.now() - start_time).total_seconds()
    logger.info(f"[POOL] ✓ {len(items)} tasks finished in {elapsed:.1f}s")
    return results

"""
Caching Utilities

In-process LRU cache for pairwise mutual-information estimates.

Keys are content fingerprints of the sample arrays plus estimator parameters, so a
hit is only possible for bit-identical inputs.
"""

import hashlib
import logging
from typing import Callable, Hashable, Tuple

import numpy as np
from cachetools import LRUCache

from vitalcast.core.config import settings

logger = logging.getLogger(__name__)

# Metrics counters
metrics = {
    "mi_cache_hits": 0,
    "mi_cache_misses": 0,
}

_mi_cache: LRUCache = LRUCache(maxsize=settings.MI_CACHE_SIZE)


def array_fingerprint(values: np.ndarray) -> str:
    arr = np.ascontiguousarray(values, dtype=np.float64)
    digest = hashlib.sha1(arr.tobytes())
    digest.update(str(arr.shape).encode("ascii"))
    return digest.hexdigest()


def cached_pair(key: Tuple[Hashable, ...], compute: Callable[[], float]) -> float:
    """Return the cached value for key, computing and storing it on a miss."""
    try:
        value = _mi_cache[key]
        metrics["mi_cache_hits"] += 1
        return value
    except KeyError:
        metrics["mi_cache_misses"] += 1
    value = compute()
    _mi_cache[key] = value
    return value


def clear_mi_cache() -> None:
    _mi_cache.clear()
    metrics["mi_cache_hits"] = 0
    metrics["mi_cache_misses"] = 0
    logger.debug("[CACHE] MI cache cleared")

"""In-memory cache for immutable DSP tables (mel filterbanks, windows)."""
import logging
from typing import Any, Callable, Dict, Hashable, Optional

logger = logging.getLogger("voicepd.cache")


class InMemoryCache:
    """Keyed cache with a size cap; oldest insertion is evicted first."""

    def __init__(self, max_size: int = 256):
        self._cache: Dict[Hashable, Any] = {}
        self._max_size = max_size
        self.hits = 0
        self.misses = 0

    def get(self, key: Hashable) -> Optional[Any]:
        if key not in self._cache:
            self.misses += 1
            return None
        self.hits += 1
        logger.debug("Cache HIT: %s", key)
        return self._cache[key]

    def set(self, key: Hashable, value: Any) -> None:
        if len(self._cache) >= self._max_size:
            oldest_key = next(iter(self._cache))
            del self._cache[oldest_key]
        self._cache[key] = value
        logger.debug("Cache SET: %s", key)

    def get_or_build(self, key: Hashable, builder: Callable[[], Any]) -> Any:
        value = self.get(key)
        if value is None:
            value = builder()
            self.set(key, value)
        return value

    def clear(self) -> None:
        self._cache.clear()
        self.hits = 0
        self.misses = 0
        logger.info("Cache cleared")

    def __len__(self) -> int:
        return len(self._cache)


# Global cache instance
_cache = InMemoryCache()


def get_dsp_cache() -> InMemoryCache:
    return _cache


def get_cache_stats() -> Dict[str, int]:
    return {
        "total_entries": len(_cache),
        "max_size": _cache._max_size,
        "hits": _cache.hits,
        "misses": _cache.misses,
    }

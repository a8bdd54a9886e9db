"""JSON-backed solution cache with TTL expiry and atomic persistence."""

from __future__ import annotations

import json
import logging
import time
import uuid
from pathlib import Path

logger = logging.getLogger(__name__)

# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

DEFAULT_CACHE_DIR = Path(".vod_cache")
DEFAULT_TTL_MINUTES = 24 * 60


# ---------------------------------------------------------------------------
# CacheManager Class
# ---------------------------------------------------------------------------


class CacheManager:
    """
    Key–value store of solver outputs, kept in memory and mirrored to disk.

    Keys are content hashes of a solve request (dialect, command template,
    time limit and MPS text), so a hit means the same solver would be asked
    the same question. Values are raw solution-file texts.

    Attributes:
        name (str): Cache namespace (creates `{name}.json` in cache_dir).
        ttl (int): Entry time-to-live in seconds.
        file_path (Path): JSON file backing this cache.
        data (dict): In-memory dictionary of cached entries.

    JSON File Structure:
        {
            "data": {
                "<sha256>": [timestamp, "<solution text>"]
            },
            "timestamp": <last_saved_time>
        }
    """

    def __init__(self, name: str, ttl_minutes: int = DEFAULT_TTL_MINUTES, cache_dir: str | Path | None = None):
        self.name = name
        self.ttl = ttl_minutes * 60
        directory = Path(cache_dir) if cache_dir else DEFAULT_CACHE_DIR
        directory.mkdir(parents=True, exist_ok=True)
        self.file_path = directory / f"{name}.json"
        self.data = self._load()

        logger.debug("[CACHE] Initialized '%s' at %s", self.name, self.file_path)

    # -----------------------------------------------------------------------
    # Internal File Operations
    # -----------------------------------------------------------------------

    def _load(self) -> dict:
        if not self.file_path.exists():
            return {}

        try:
            raw = json.loads(self.file_path.read_text(encoding="utf-8"))
            payload = raw.get("data", {})
            if isinstance(payload, dict):
                return payload
            logger.warning("[CACHE] Ignoring malformed payload in '%s'", self.name)
        except (OSError, ValueError) as e:
            logger.warning("[CACHE] Failed to load '%s': %s", self.name, e)
        return {}

    def _save(self) -> None:
        """Write through a temp file renamed over the cache file."""
        try:
            payload = json.dumps({"data": self.data, "timestamp": time.time()}, indent=2)
            temp_path = self.file_path.with_suffix(f"{self.file_path.suffix}.{uuid.uuid4().hex[:8]}.tmp")
            temp_path.write_text(payload, encoding="utf-8")
            temp_path.replace(self.file_path)
            logger.debug("[CACHE] Saved '%s' (%d entries)", self.name, len(self.data))
        except OSError as e:
            logger.warning("[CACHE] Failed to save '%s': %s", self.name, e)

    # -----------------------------------------------------------------------
    # Public Cache API
    # -----------------------------------------------------------------------

    def get(self, key: str) -> str | None:
        """Cached solution text, or None if absent or expired."""
        entry = self.data.get(str(key))
        if not entry:
            return None

        ts, value = entry
        if time.time() - ts > self.ttl:
            logger.debug("[CACHE] Expired key '%s…' in '%s'", str(key)[:12], self.name)
            del self.data[str(key)]
            self._save()
            return None

        return value

    def set(self, key: str, value: str) -> None:
        self.data[str(key)] = (time.time(), value)
        self._save()
        logger.info("[CACHE] Stored solution '%s…' in '%s'", str(key)[:12], self.name)

    def clear(self) -> None:
        """Drop every entry and delete the cache file."""
        self.data = {}
        if self.file_path.exists():
            self.file_path.unlink()
        logger.info("[CACHE] Cleared '%s'", self.name)

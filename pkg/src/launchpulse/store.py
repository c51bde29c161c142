"""On-disk response cache: one body file plus a JSON sidecar per entry.

Entries live under a two-level hashed directory so the store stays
inspectable with plain shell tools. Writers are atomic (temp file +
rename, sidecar last), so concurrent readers never see torn entries.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping
from urllib.parse import urlencode, urlsplit

logger = logging.getLogger(__name__)

# Time-to-live defaults, seconds. Star-event pages are immutable history;
# metadata and search results drift.
TTL_IMMUTABLE = None
TTL_METADATA = 24 * 3600.0


class CacheWriteError(OSError):
    """The store path cannot be created or written."""


@dataclass
class CacheEntry:
    key: str
    body: bytes
    status: int
    fetched_at: float  # epoch seconds, UTC, assigned at write time


def canonical_request(method: str, url: str, params: Iterable | Mapping | None = None) -> str:
    """Canonical request string: method, URL, and query parameters in sorted order."""
    parts = urlsplit(url)
    if not parts.scheme or not parts.netloc:
        raise ValueError(f"malformed URL, need an absolute URL with a host: {url!r}")
    if isinstance(params, Mapping):
        params = params.items()
    pairs = sorted((str(k), str(v)) for k, v in (params or []))
    return f"{method.upper()} {parts.scheme}://{parts.netloc}{parts.path}?{urlencode(pairs)}"


def cache_key(method: str, url: str, params: Iterable | Mapping | None = None) -> str:
    """Deterministic filesystem-safe key; parameter order never matters."""
    return hashlib.sha256(canonical_request(method, url, params).encode("utf-8")).hexdigest()


class FileCache:
    """Filesystem-backed cache keyed by `cache_key`, safe for concurrent readers.

    `now_fn` is injectable so tests and fixture builds control `fetched_at`.
    """

    def __init__(self, root: Path | str, now_fn: Callable[[], float] = time.time):
        self.root = Path(root)
        self._now = now_fn

    def _paths(self, key: str) -> tuple[Path, Path]:
        d = self.root / key[:2] / key[2:4]
        return d / f"{key}.body", d / f"{key}.json"

    def get(self, key: str, ttl: float | None = None) -> CacheEntry | None:
        """Return the stored entry, or None when missing, expired, or corrupt."""
        body_path, meta_path = self._paths(key)
        try:
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
            body = body_path.read_bytes()
        except FileNotFoundError:
            return None
        except (OSError, ValueError) as exc:
            logger.warning("evicting corrupt cache entry %s: %s", key, exc)
            self._evict(key)
            return None
        if meta.get("key") != key or not isinstance(meta.get("status"), int):
            logger.warning("evicting corrupt cache entry %s: bad sidecar", key)
            self._evict(key)
            return None
        fetched_at = float(meta["fetched_at"])
        if ttl is not None and self._now() - fetched_at >= ttl:
            return None
        return CacheEntry(key=key, body=body, status=int(meta["status"]), fetched_at=fetched_at)

    def put(self, key: str, body: bytes, status: int, url: str = "") -> CacheEntry:
        """Store a response atomically; last write wins."""
        body_path, meta_path = self._paths(key)
        fetched_at = self._now()
        meta = {"key": key, "status": int(status), "fetched_at": fetched_at}
        if url:
            meta["url"] = url
        try:
            meta_path.parent.mkdir(parents=True, exist_ok=True)
            self._replace(body_path, body)
            # Sidecar written second: it is the commit record for the entry.
            self._replace(meta_path, json.dumps(meta, sort_keys=True).encode("utf-8"))
        except OSError as exc:
            raise CacheWriteError(f"cache store not writable at {meta_path.parent}: {exc}") from exc
        return CacheEntry(key=key, body=body, status=int(status), fetched_at=fetched_at)

    @staticmethod
    def _replace(path: Path, data: bytes) -> None:
        tmp = path.with_suffix(path.suffix + f".tmp{os.getpid()}")
        tmp.write_bytes(data)
        os.replace(tmp, path)

    def _evict(self, key: str) -> None:
        for p in self._paths(key):
            try:
                p.unlink()
            except OSError:
                pass

"""HTTP fetch layer: cache-first lookups, per-host rate budgets, retry with backoff.

Everything that talks to the network funnels through `CachedHTTPClient`,
so the whole pipeline can run offline against a warm store, and tests can
swap in fake transports.
"""

from __future__ import annotations

import logging
import random
import threading
import time
from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping
from urllib.parse import urlsplit

import httpx

from .store import FileCache, cache_key

logger = logging.getLogger(__name__)

RETRIABLE_STATUSES = {429, 500, 502, 503, 504}
BACKOFF_BASE_S = 2.0
BACKOFF_JITTER = 0.25
MAX_ATTEMPTS = 5


class OfflineViolation(RuntimeError):
    """A network request was attempted while running offline."""


class RetriesExhausted(RuntimeError):
    """Transient failures persisted through every backoff attempt."""


class CountingTransport(httpx.BaseTransport):
    """Wraps another transport and counts every attempted request."""

    def __init__(self, inner: httpx.BaseTransport):
        self.inner = inner
        self.requests = 0

    def handle_request(self, request: httpx.Request) -> httpx.Response:
        self.requests += 1
        return self.inner.handle_request(request)


class ForbiddenTransport(httpx.BaseTransport):
    """Offline guard: any attempted request is an error."""

    def handle_request(self, request: httpx.Request) -> httpx.Response:
        raise OfflineViolation(f"offline run attempted a network request: {request.url}")


class RateLimiter:
    """Sliding-window budget: at most `budget` requests issued per `window_s`.

    The clock and sleeper are injectable so the budget contract is testable
    with simulated time.
    """

    def __init__(
        self,
        budget: int,
        window_s: float = 60.0,
        now_fn: Callable[[], float] = time.monotonic,
        sleep_fn: Callable[[float], None] = time.sleep,
    ):
        if budget < 1:
            raise ValueError("rate budget must be at least 1 request per window")
        self.budget = budget
        self.window_s = window_s
        self._now = now_fn
        self._sleep = sleep_fn
        self._issued: deque[float] = deque()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        """Block until the budget allows one more request, then record it."""
        while True:
            with self._lock:
                now = self._now()
                while self._issued and self._issued[0] <= now - self.window_s:
                    self._issued.popleft()
                if len(self._issued) < self.budget:
                    self._issued.append(now)
                    return
                wait = self._issued[0] + self.window_s - now
            self._sleep(max(wait, 0.0) + 1e-9)


@dataclass
class FetchResult:
    status: int
    body: bytes
    from_cache: bool
    fetched_at: float  # epoch seconds of the original fetch


def _is_rate_limited(response: httpx.Response) -> bool:
    if response.status_code == 429:
        return True
    return response.status_code == 403 and response.headers.get("x-ratelimit-remaining") == "0"


class CachedHTTPClient:
    """Cache-first GET client shared by every ingestion stage.

    Cached entries short-circuit the limiter and the transport entirely, so a
    warm store answers repeat runs with zero network traffic. Rate-limit
    responses (429, or 403 with an exhausted quota) sleep until the reset or
    an exponential backoff delay (base 2 s, doubling, jitter +/-25%, at most
    5 attempts) before retrying.
    """

    def __init__(
        self,
        cache: FileCache,
        transport: httpx.BaseTransport | None = None,
        budget_per_min: int = 30,
        headers: Mapping[str, str] | None = None,
        now_fn: Callable[[], float] = time.time,
        sleep_fn: Callable[[float], None] = time.sleep,
        rng: random.Random | None = None,
        ignore_ttl: bool = False,
    ):
        self._cache = cache
        self._http = httpx.Client(transport=transport, timeout=30.0)
        self._budget = budget_per_min
        self._base_headers = {"User-Agent": "launchpulse/0.1"}
        if headers:
            self._base_headers.update(headers)
        self._now = now_fn
        self._sleep = sleep_fn
        self._rng = rng or random.Random(0)
        self._ignore_ttl = ignore_ttl
        self._limiters: dict[str, RateLimiter] = {}
        self._limiter_lock = threading.Lock()

    def close(self) -> None:
        self._http.close()

    def __enter__(self) -> "CachedHTTPClient":
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()

    def _limiter(self, host: str) -> RateLimiter:
        with self._limiter_lock:
            if host not in self._limiters:
                self._limiters[host] = RateLimiter(self._budget, sleep_fn=self._sleep)
            return self._limiters[host]

    def get(
        self,
        url: str,
        params: Iterable[tuple[str, str]] = (),
        ttl: float | None = None,
        headers: Mapping[str, str] | None = None,
    ) -> FetchResult:
        params = list(params)
        key = cache_key("GET", url, params)
        entry = self._cache.get(key, ttl=None if self._ignore_ttl else ttl)
        if entry is not None:
            return FetchResult(entry.status, entry.body, True, entry.fetched_at)

        limiter = self._limiter(urlsplit(url).netloc)
        merged = dict(self._base_headers)
        if headers:
            merged.update(headers)

        delay = BACKOFF_BASE_S
        last_error: Exception | None = None
        for attempt in range(MAX_ATTEMPTS):
            limiter.acquire()
            try:
                response = self._http.get(url, params=params, headers=merged)
            except OfflineViolation:
                raise
            except httpx.HTTPError as exc:
                last_error = exc
                logger.warning("GET %s failed (%s), backing off %.1fs", url, exc, delay)
                self._backoff(delay)
                delay *= 2
                continue
            if _is_rate_limited(response):
                last_error = RetriesExhausted(f"rate limited: HTTP {response.status_code}")
                self._wait_for_reset(response, delay)
                delay *= 2
                continue
            if response.status_code in RETRIABLE_STATUSES:
                last_error = RetriesExhausted(f"HTTP {response.status_code}")
                logger.warning("GET %s -> %d, backing off %.1fs", url, response.status_code, delay)
                self._backoff(delay)
                delay *= 2
                continue
            stored = self._cache.put(key, response.content, response.status_code, url=url)
            return FetchResult(stored.status, stored.body, False, stored.fetched_at)
        raise RetriesExhausted(f"GET {url} failed after {MAX_ATTEMPTS} attempts: {last_error}")

    def _backoff(self, delay: float) -> None:
        jitter = 1.0 + self._rng.uniform(-BACKOFF_JITTER, BACKOFF_JITTER)
        self._sleep(delay * jitter)

    def _wait_for_reset(self, response: httpx.Response, delay: float) -> None:
        reset = response.headers.get("x-ratelimit-reset")
        if reset is not None:
            try:
                wait = max(float(reset) - self._now(), 0.0)
            except ValueError:
                wait = delay
            logger.warning("rate limit hit, sleeping %.1fs until reset", wait)
            self._sleep(wait)
            return
        self._backoff(delay)

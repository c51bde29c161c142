import httpx
import pytest

from launchpulse.client import (
    CachedHTTPClient,
    CountingTransport,
    ForbiddenTransport,
    OfflineViolation,
    RateLimiter,
    RetriesExhausted,
)
from launchpulse.store import FileCache


class FakeClock:
    """Simulated time: sleeping advances the clock instantly."""

    def __init__(self, start=0.0):
        self.now = start
        self.sleeps = []

    def __call__(self):
        return self.now

    def sleep(self, seconds):
        self.sleeps.append(seconds)
        self.now += seconds


def ok_transport(body=b"{}", status=200):
    return httpx.MockTransport(lambda request: httpx.Response(status, content=body))


class TestRateLimiter:
    def test_budget_contract_sliding_window(self):
        clock = FakeClock()
        limiter = RateLimiter(10, window_s=60.0, now_fn=clock, sleep_fn=clock.sleep)
        issued = []
        for _ in range(25):
            limiter.acquire()
            issued.append(clock.now)
            clock.now += 0.5
        for i, t in enumerate(issued):
            in_window = [u for u in issued if t - 60.0 < u <= t]
            assert len(in_window) <= 10, f"window ending at request {i} holds {len(in_window)}"

    def test_no_sleep_under_budget(self):
        clock = FakeClock()
        limiter = RateLimiter(5, now_fn=clock, sleep_fn=clock.sleep)
        for _ in range(5):
            limiter.acquire()
        assert clock.sleeps == []

    def test_rejects_zero_budget(self):
        with pytest.raises(ValueError):
            RateLimiter(0)


class TestCachedHTTPClient:
    def _client(self, tmp_path, transport, **kwargs):
        clock = FakeClock(start=1000.0)
        kwargs.setdefault("now_fn", clock)
        kwargs.setdefault("sleep_fn", clock.sleep)
        client = CachedHTTPClient(FileCache(tmp_path, now_fn=clock), transport=transport, **kwargs)
        return client, clock

    def test_fetch_then_cache_hit(self, tmp_path):
        counting = CountingTransport(ok_transport(b"hello"))
        client, _ = self._client(tmp_path, counting)
        first = client.get("https://x/api")
        assert (first.status, first.body, first.from_cache) == (200, b"hello", False)
        second = client.get("https://x/api")
        assert (second.body, second.from_cache) == (b"hello", True)
        assert counting.requests == 1

    def test_warm_cache_zero_network(self, tmp_path):
        client, _ = self._client(tmp_path, ok_transport())
        client.get("https://x/api", params=[("p", "1")])
        counting = CountingTransport(ForbiddenTransport())
        offline, _ = self._client(tmp_path, counting)
        result = offline.get("https://x/api", params=[("p", "1")])
        assert result.from_cache
        assert counting.requests == 0

    def test_offline_miss_raises(self, tmp_path):
        counting = CountingTransport(ForbiddenTransport())
        client, _ = self._client(tmp_path, counting)
        with pytest.raises(OfflineViolation):
            client.get("https://x/api")
        assert counting.requests == 1

    def test_retry_twice_then_succeed(self, tmp_path):
        calls = []

        def flaky(request):
            calls.append(1)
            if len(calls) <= 2:
                return httpx.Response(503)
            return httpx.Response(200, content=b"done")

        client, clock = self._client(tmp_path, httpx.MockTransport(flaky))
        result = client.get("https://x/api")
        assert result.body == b"done"
        assert len(calls) == 3
        # two exponential backoffs: ~2s then ~4s, both with +/-25% jitter
        assert len(clock.sleeps) == 2
        assert 1.5 <= clock.sleeps[0] <= 2.5
        assert 3.0 <= clock.sleeps[1] <= 5.0

    def test_retries_exhausted(self, tmp_path):
        client, _ = self._client(tmp_path, ok_transport(status=500))
        with pytest.raises(RetriesExhausted):
            client.get("https://x/api")

    def test_rate_limit_403_sleeps_until_reset(self, tmp_path):
        calls = []

        def limited(request):
            calls.append(1)
            if len(calls) == 1:
                return httpx.Response(
                    403,
                    headers={"x-ratelimit-remaining": "0", "x-ratelimit-reset": "1030"},
                )
            return httpx.Response(200, content=b"ok")

        client, clock = self._client(tmp_path, httpx.MockTransport(limited))
        result = client.get("https://x/api")
        assert result.body == b"ok"
        assert any(abs(s - 30.0) < 1e-6 for s in clock.sleeps)

    def test_plain_403_not_retried_and_cached(self, tmp_path):
        counting = CountingTransport(ok_transport(status=403))
        client, _ = self._client(tmp_path, counting)
        result = client.get("https://x/api")
        assert result.status == 403
        again = client.get("https://x/api")
        assert again.from_cache
        assert counting.requests == 1

    def test_ignore_ttl_serves_stale_entries(self, tmp_path):
        client, _ = self._client(tmp_path, ok_transport())
        client.get("https://x/api")
        later = FakeClock(start=1000.0 + 10 * 86400)
        cache = FileCache(tmp_path, now_fn=later)
        expired = CachedHTTPClient(cache, transport=ForbiddenTransport(), now_fn=later, sleep_fn=later.sleep)
        with pytest.raises(OfflineViolation):
            expired.get("https://x/api", ttl=60)
        frozen = CachedHTTPClient(
            cache, transport=ForbiddenTransport(), now_fn=later, sleep_fn=later.sleep, ignore_ttl=True
        )
        assert frozen.get("https://x/api", ttl=60).from_cache

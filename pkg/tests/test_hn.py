import json
from datetime import timedelta

import httpx
import pytest
from hypothesis import given, strategies as st

from launchpulse.client import CachedHTTPClient, CountingTransport
from launchpulse.fixtures import fake_api_transport
from launchpulse.hn import (
    HNPost,
    RepoSlug,
    dedupe_earliest,
    extract_repo_slug,
    search_posts,
    title_is_show_hn,
)
from launchpulse.store import FileCache
from launchpulse.util import parse_utc


class TestExtractRepoSlug:
    @pytest.mark.parametrize(
        "url,expected",
        [
            ("https://github.com/foo/bar", ("foo", "bar")),
            ("https://github.com/foo/bar/tree/main/docs", ("foo", "bar")),
            ("https://www.github.com/Foo/Bar.git", ("foo", "bar")),
            ("https://github.com/foo/bar?tab=readme#install", ("foo", "bar")),
        ],
    )
    def test_repo_urls(self, url, expected):
        assert extract_repo_slug(url) == RepoSlug(*expected)

    @pytest.mark.parametrize(
        "url",
        [
            "https://gist.github.com/foo/abc123",
            "https://github.com/huggingface",
            "https://example.com/foo/bar",
            "https://github.com/orgs/acme/repositories",
            "",
            None,
        ],
    )
    def test_non_repo_urls(self, url):
        assert extract_repo_slug(url) is None


class TestShowHN:
    def test_prefix_detection(self):
        assert title_is_show_hn("Show HN: my tool")
        assert title_is_show_hn("  show hn - my tool")
        assert not title_is_show_hn("Showcase of HN tools")


def _post(post_id, created, slug_url="https://github.com/foo/bar", title="t"):
    return HNPost(
        post_id=post_id,
        created_at=parse_utc(created),
        title=title,
        url=slug_url,
        score=1,
        num_comments=0,
        is_show_hn=False,
    )


class TestDedupeEarliest:
    def test_earliest_wins(self):
        posts = [
            (_post("2", "2024-01-01T00:00:20Z"), RepoSlug("foo", "bar")),
            (_post("1", "2024-01-01T00:00:10Z"), RepoSlug("foo", "bar")),
        ]
        events = dedupe_earliest(posts)
        assert len(events) == 1
        assert events[0].post_id == "1"

    def test_distinct_repos_kept(self):
        posts = [
            (_post("1", "2024-01-01T00:00:10Z"), RepoSlug("foo", "bar")),
            (_post("2", "2024-01-01T00:00:20Z"), RepoSlug("baz", "qux")),
        ]
        assert len(dedupe_earliest(posts)) == 2

    def test_tie_break_smaller_post_id(self):
        posts = [
            (_post("10", "2024-01-01T00:00:10Z"), RepoSlug("foo", "bar")),
            (_post("9", "2024-01-01T00:00:10Z"), RepoSlug("foo", "bar")),
        ]
        assert dedupe_earliest(posts)[0].post_id == "9"

    def test_output_sorted_by_t0(self):
        posts = [
            (_post("5", "2024-02-01T00:00:00Z"), RepoSlug("b", "b")),
            (_post("4", "2024-01-01T00:00:00Z"), RepoSlug("a", "a")),
        ]
        assert [e.slug.owner for e in dedupe_earliest(posts)] == ["a", "b"]

    @given(
        st.lists(
            st.tuples(
                st.integers(min_value=1, max_value=999),  # post id
                st.integers(min_value=0, max_value=10_000),  # minutes offset
                st.integers(min_value=0, max_value=5),  # repo index
            ),
            max_size=30,
        )
    )
    def test_properties(self, raw):
        base = parse_utc("2024-01-01T00:00:00Z")
        pairs = [
            (
                HNPost(
                    post_id=str(pid),
                    created_at=base + timedelta(minutes=minutes),
                    title="t",
                    url=None,
                    score=0,
                    num_comments=0,
                    is_show_hn=False,
                ),
                RepoSlug("o", f"r{repo}"),
            )
            for pid, minutes, repo in raw
        ]
        events = dedupe_earliest(pairs)
        # one event per distinct slug; no slug lost or invented
        assert {e.slug for e in events} == {slug for _, slug in pairs}
        assert len(events) <= len(pairs)
        if len({slug for _, slug in pairs}) == len(pairs):
            assert len(events) == len(pairs)
        # idempotent
        again = dedupe_earliest(
            [(_post(e.post_id, e.t0.strftime("%Y-%m-%dT%H:%M:%SZ")), e.slug) for e in events]
        )
        assert [(e.slug, e.post_id) for e in again] == [(e.slug, e.post_id) for e in events]


def _search_client(tmp_path, transport=None):
    return CachedHTTPClient(
        FileCache(tmp_path), transport=transport or fake_api_transport(), sleep_fn=lambda s: None
    )


class TestSearchPosts:
    # Fixture posts whose title or URL contains "llm", frozen by hand from
    # the literal corpus in launchpulse.fixtures.
    LLM_POST_IDS = ["39100001", "39140500", "39521000", "39622200", "40031000", "40431800", "40632200"]

    def test_frozen_llm_post_set(self, tmp_path):
        client = _search_client(tmp_path)
        posts, warnings = search_posts(
            client, ["LLM"], (parse_utc("2024-01-01T00:00:00Z"), parse_utc("2026-01-01T00:00:00Z"))
        )
        assert [p.post_id for p in posts] == self.LLM_POST_IDS
        assert warnings == []

    def test_sorted_ascending(self, tmp_path):
        client = _search_client(tmp_path)
        posts, _ = search_posts(
            client,
            ["LLM", "agents"],
            (parse_utc("2024-01-01T00:00:00Z"), parse_utc("2026-01-01T00:00:00Z")),
        )
        stamps = [p.created_at for p in posts]
        assert stamps == sorted(stamps)
        assert len({p.post_id for p in posts}) == len(posts)

    def test_empty_window(self, tmp_path):
        client = _search_client(tmp_path)
        start = parse_utc("2024-03-04T12:59:59Z")
        posts, _ = search_posts(client, ["LLM"], (start, start + timedelta(seconds=1)))
        assert posts == []

    def test_page_limit_truncation_warns(self, tmp_path):
        client = _search_client(tmp_path)
        posts, warnings = search_posts(
            client,
            ["LLM"],
            (parse_utc("2024-01-01T00:00:00Z"), parse_utc("2026-01-01T00:00:00Z")),
            page_limit=1,
            hits_per_page=3,
        )
        assert len(posts) == 3
        assert any("truncated at page limit" in w for w in warnings)

    def test_http_failure_partial_results(self, tmp_path):
        real = fake_api_transport()

        def sometimes_broken(request):
            if request.url.params.get("query") == "agents":
                return httpx.Response(500)
            return real.handler(request)

        client = _search_client(tmp_path, httpx.MockTransport(sometimes_broken))
        posts, warnings = search_posts(
            client,
            ["LLM", "agents"],
            (parse_utc("2024-01-01T00:00:00Z"), parse_utc("2026-01-01T00:00:00Z")),
        )
        assert posts  # LLM results survived
        assert any("failed after retries" in w for w in warnings)

    def test_show_hn_flag_from_fixture(self, tmp_path):
        client = _search_client(tmp_path)
        posts, _ = search_posts(
            client, ["RAG"], (parse_utc("2024-01-01T00:00:00Z"), parse_utc("2026-01-01T00:00:00Z"))
        )
        by_id = {p.post_id: p for p in posts}
        assert by_id["39100120"].is_show_hn  # "Show HN: RAGflow ..."
        assert not by_id["39420900"].is_show_hn

    def test_precondition_errors(self, tmp_path):
        client = _search_client(tmp_path)
        now = parse_utc("2024-01-01T00:00:00Z")
        with pytest.raises(ValueError):
            search_posts(client, [], (now, now + timedelta(days=1)))
        with pytest.raises(ValueError):
            search_posts(client, ["LLM"], (now, now))

    def test_second_search_hits_cache(self, tmp_path):
        counting = CountingTransport(fake_api_transport())
        client = _search_client(tmp_path, counting)
        window = (parse_utc("2024-01-01T00:00:00Z"), parse_utc("2026-01-01T00:00:00Z"))
        search_posts(client, ["LLM"], window)
        first_count = counting.requests
        assert first_count > 0
        search_posts(client, ["LLM"], window)
        assert counting.requests == first_count

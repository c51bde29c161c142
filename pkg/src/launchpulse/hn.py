"""Hacker News ingestion through the Algolia search API.

Finds stories that link to GitHub repositories, filters them by keyword and
date range, and resolves each repository to its earliest mention.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import datetime
from typing import Iterable
from urllib.parse import urlsplit

import json

from .client import CachedHTTPClient, RetriesExhausted
from .store import TTL_METADATA
from .util import epoch, format_utc, parse_utc

logger = logging.getLogger(__name__)

ALGOLIA_SEARCH_URL = "https://hn.algolia.com/api/v1/search_by_date"
DEFAULT_KEYWORDS = ("LLM", "transformers", "RAG", "agents")
DEFAULT_HITS_PER_PAGE = 100

# First path segment of github.com URLs that can never be a repo owner.
_RESERVED_OWNERS = {
    "about", "apps", "blog", "collections", "contact", "enterprise", "features",
    "gist", "join", "login", "marketplace", "orgs", "pricing", "search",
    "settings", "site", "sponsors", "topics", "trending",
}


@dataclass
class HNPost:
    post_id: str
    created_at: datetime  # this is t0 when the post wins dedup
    title: str
    url: str | None
    score: int
    num_comments: int
    is_show_hn: bool


@dataclass(frozen=True, order=True)
class RepoSlug:
    owner: str
    name: str

    def __str__(self) -> str:
        return f"{self.owner}/{self.name}"

    @property
    def file_stem(self) -> str:
        return f"{self.owner}__{self.name}"


@dataclass
class LaunchEvent:
    """One HN post resolved to a GitHub repository; `t0` anchors the event window."""

    slug: RepoSlug
    post_id: str
    t0: datetime
    title: str
    url: str
    score: int
    num_comments: int
    is_show_hn: bool


def title_is_show_hn(title: str) -> bool:
    return title.strip().lower().startswith("show hn")


def post_from_hit(hit: dict) -> HNPost:
    """Build an HNPost from one Algolia search hit."""
    if "created_at" in hit:
        created = parse_utc(hit["created_at"])
    else:
        created = parse_utc(int(hit["created_at_i"]))
    title = hit.get("title") or ""
    tags = hit.get("_tags") or []
    return HNPost(
        post_id=str(hit["objectID"]),
        created_at=created,
        title=title,
        url=hit.get("url") or None,
        score=max(0, int(hit.get("points") or 0)),
        num_comments=max(0, int(hit.get("num_comments") or 0)),
        is_show_hn=title_is_show_hn(title) or "show_hn" in tags,
    )


def post_to_record(post: HNPost) -> dict:
    return {
        "post_id": post.post_id,
        "created_at": format_utc(post.created_at),
        "title": post.title,
        "url": post.url,
        "score": post.score,
        "num_comments": post.num_comments,
        "is_show_hn": post.is_show_hn,
    }


def post_from_record(rec: dict) -> HNPost:
    return HNPost(
        post_id=rec["post_id"],
        created_at=parse_utc(rec["created_at"]),
        title=rec["title"],
        url=rec.get("url"),
        score=int(rec["score"]),
        num_comments=int(rec["num_comments"]),
        is_show_hn=bool(rec["is_show_hn"]),
    )


def event_to_record(event: LaunchEvent) -> dict:
    return {
        "owner": event.slug.owner,
        "name": event.slug.name,
        "post_id": event.post_id,
        "t0": format_utc(event.t0),
        "title": event.title,
        "url": event.url,
        "score": event.score,
        "num_comments": event.num_comments,
        "is_show_hn": event.is_show_hn,
    }


def event_from_record(rec: dict) -> LaunchEvent:
    return LaunchEvent(
        slug=RepoSlug(rec["owner"], rec["name"]),
        post_id=rec["post_id"],
        t0=parse_utc(rec["t0"]),
        title=rec["title"],
        url=rec["url"],
        score=int(rec["score"]),
        num_comments=int(rec["num_comments"]),
        is_show_hn=bool(rec["is_show_hn"]),
    )


def _post_order(post_id: str) -> tuple:
    # HN ids are numeric; compare numerically, fall back to the raw string.
    return (0, int(post_id), "") if post_id.isdigit() else (1, 0, post_id)


def search_posts(
    client: CachedHTTPClient,
    keywords: Iterable[str],
    date_range: tuple[datetime, datetime],
    page_limit: int = 20,
    hits_per_page: int = DEFAULT_HITS_PER_PAGE,
) -> tuple[list[HNPost], list[str]]:
    """Query Algolia once per keyword and merge the results.

    Returns posts sorted by created_at ascending plus any stage warnings.
    A failing query degrades to partial results instead of raising.
    """
    keywords = [k for k in keywords if k.strip()]
    start, end = date_range
    if not keywords:
        raise ValueError("at least one keyword is required")
    if start >= end:
        raise ValueError("date range start must precede end")

    numeric_filter = f"created_at_i>={epoch(start)},created_at_i<{epoch(end)}"
    seen: dict[str, HNPost] = {}
    warnings: list[str] = []
    for keyword in keywords:
        page = 0
        while page < page_limit:
            params = [
                ("query", keyword),
                ("tags", "story"),
                ("numericFilters", numeric_filter),
                ("hitsPerPage", str(hits_per_page)),
                ("page", str(page)),
            ]
            try:
                result = client.get(ALGOLIA_SEARCH_URL, params=params, ttl=TTL_METADATA)
            except RetriesExhausted as exc:
                warnings.append(f"hn search '{keyword}' page {page} failed after retries: {exc}")
                break
            if result.status != 200:
                warnings.append(f"hn search '{keyword}' page {page} returned HTTP {result.status}")
                break
            payload = json.loads(result.body)
            for hit in payload.get("hits", []):
                post = post_from_hit(hit)
                if start <= post.created_at < end:
                    seen.setdefault(post.post_id, post)
            nb_pages = int(payload.get("nbPages", 1))
            page += 1
            if page >= nb_pages:
                break
        else:
            warnings.append(f"hn search '{keyword}' truncated at page limit {page_limit}")

    posts = sorted(seen.values(), key=lambda p: (p.created_at, _post_order(p.post_id)))
    return posts, warnings


def extract_repo_slug(url: str | None) -> RepoSlug | None:
    """Return owner/name for a github.com repository URL, else None.

    Gists, org/user profile pages, and non-GitHub hosts yield None. Query
    strings, fragments, extra path segments, and a trailing ``.git`` are
    ignored; identity is lowercase.
    """
    if not url:
        return None
    try:
        parts = urlsplit(url.strip())
    except ValueError:
        return None
    host = parts.netloc.lower()
    if host.startswith("www."):
        host = host[4:]
    if host != "github.com":
        return None
    segments = [s for s in parts.path.split("/") if s]
    if len(segments) < 2:
        return None
    owner = segments[0].lower()
    name = segments[1].lower()
    if name.endswith(".git"):
        name = name[:-4]
    if not owner or not name or owner in _RESERVED_OWNERS:
        return None
    return RepoSlug(owner, name)


def dedupe_earliest(pairs: Iterable[tuple[HNPost, RepoSlug]]) -> list[LaunchEvent]:
    """Keep one LaunchEvent per repository: the earliest post, ties to the smaller id."""
    best: dict[RepoSlug, HNPost] = {}
    for post, slug in pairs:
        current = best.get(slug)
        if current is None or (post.created_at, _post_order(post.post_id)) < (
            current.created_at,
            _post_order(current.post_id),
        ):
            best[slug] = post
    events = [
        LaunchEvent(
            slug=slug,
            post_id=post.post_id,
            t0=post.created_at,
            title=post.title,
            url=post.url or "",
            score=post.score,
            num_comments=post.num_comments,
            is_show_hn=post.is_show_hn,
        )
        for slug, post in best.items()
    ]
    events.sort(key=lambda e: (e.t0, _post_order(e.post_id)))
    return events

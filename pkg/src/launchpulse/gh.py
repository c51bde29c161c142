"""GitHub ingestion: repository metadata and star-event timestamps.

Star history comes from the stargazer listing with the timestamp media
type. Repositories that restrict stargazer access degrade to a
metadata-only record instead of aborting the corpus.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from datetime import datetime

from .client import CachedHTTPClient, RetriesExhausted
from .hn import RepoSlug
from .store import TTL_IMMUTABLE, TTL_METADATA
from .util import format_utc, parse_utc

logger = logging.getLogger(__name__)

GITHUB_API = "https://api.github.com"
STAR_PAGE_SIZE = 100
DEFAULT_MAX_PAGES = 400

_JSON_ACCEPT = {"Accept": "application/vnd.github+json"}
_STAR_ACCEPT = {"Accept": "application/vnd.github.star+json"}


@dataclass
class RepoSnapshot:
    slug: RepoSlug
    created_at: datetime
    license_id: str | None
    readme_length: int  # bytes; 0 means no README
    topics: list[str]
    owner_is_org: bool
    stars_total: int  # fetch-time cumulative count: a leaky quantity
    fetched_at: datetime


@dataclass
class StarEventLog:
    slug: RepoSlug
    starred_at: list[datetime] = field(default_factory=list)
    complete: bool = True
    reason: str | None = None  # set when complete is False


def auth_headers(token: str | None) -> dict[str, str]:
    headers = dict(_JSON_ACCEPT)
    if token:
        headers["Authorization"] = f"Bearer {token}"
    return headers


def snapshot_to_record(snap: RepoSnapshot) -> dict:
    return {
        "owner": snap.slug.owner,
        "name": snap.slug.name,
        "created_at": format_utc(snap.created_at),
        "license_id": snap.license_id,
        "readme_length": snap.readme_length,
        "topics": list(snap.topics),
        "owner_is_org": snap.owner_is_org,
        "stars_total": snap.stars_total,
        "fetched_at": format_utc(snap.fetched_at),
    }


def snapshot_from_record(rec: dict) -> RepoSnapshot:
    return RepoSnapshot(
        slug=RepoSlug(rec["owner"], rec["name"]),
        created_at=parse_utc(rec["created_at"]),
        license_id=rec.get("license_id"),
        readme_length=int(rec["readme_length"]),
        topics=list(rec.get("topics") or []),
        owner_is_org=bool(rec["owner_is_org"]),
        stars_total=int(rec["stars_total"]),
        fetched_at=parse_utc(rec["fetched_at"]),
    )


def fetch_repo_metadata(
    client: CachedHTTPClient, slug: RepoSlug, token: str | None = None
) -> tuple[RepoSnapshot | None, str | None]:
    """Fetch one repository snapshot; returns (snapshot, reason-if-missing)."""
    headers = auth_headers(token)
    base = f"{GITHUB_API}/repos/{slug.owner}/{slug.name}"
    try:
        result = client.get(base, ttl=TTL_METADATA, headers=headers)
    except RetriesExhausted as exc:
        return None, f"metadata fetch failed after retries: {exc}"
    if result.status == 404:
        return None, "repo not found (404)"
    if result.status != 200:
        return None, f"metadata fetch returned HTTP {result.status}"
    data = json.loads(result.body)

    readme_length = 0
    try:
        readme = client.get(f"{base}/readme", ttl=TTL_METADATA, headers=headers)
        if readme.status == 200:
            readme_length = int(json.loads(readme.body).get("size") or 0)
    except RetriesExhausted as exc:
        logger.warning("readme fetch for %s failed after retries: %s", slug, exc)

    license_info = data.get("license") or {}
    snapshot = RepoSnapshot(
        slug=slug,
        created_at=parse_utc(data["created_at"]),
        license_id=license_info.get("spdx_id"),
        readme_length=readme_length,
        topics=sorted(data.get("topics") or []),
        owner_is_org=(data.get("owner") or {}).get("type") == "Organization",
        stars_total=int(data.get("stargazers_count") or 0),
        fetched_at=parse_utc(result.fetched_at),
    )
    return snapshot, None


def fetch_star_events(
    client: CachedHTTPClient,
    slug: RepoSlug,
    max_pages: int = DEFAULT_MAX_PAGES,
    token: str | None = None,
) -> StarEventLog:
    """Paginate starred-at timestamps; never raises on access restriction.

    A restricted repo (403/451), a missing repo, or hitting the page cap all
    yield a partial log with ``complete=False`` and a recorded reason.
    """
    if max_pages < 1:
        raise ValueError("max_pages must be at least 1")
    headers = auth_headers(token)
    headers.update(_STAR_ACCEPT)
    url = f"{GITHUB_API}/repos/{slug.owner}/{slug.name}/stargazers"
    stamps: list[datetime] = []
    for page in range(1, max_pages + 1):
        params = [("per_page", str(STAR_PAGE_SIZE)), ("page", str(page))]
        try:
            result = client.get(url, params=params, ttl=TTL_IMMUTABLE, headers=headers)
        except RetriesExhausted as exc:
            logger.warning("star fetch for %s page %d failed: %s", slug, page, exc)
            return StarEventLog(slug, sorted(stamps), complete=False, reason="retries exhausted")
        if result.status in (403, 451):
            logger.warning("stargazer access restricted for %s (HTTP %d)", slug, result.status)
            return StarEventLog(slug, sorted(stamps), complete=False, reason="stargazers restricted")
        if result.status == 404:
            return StarEventLog(slug, sorted(stamps), complete=False, reason="repo not found (404)")
        if result.status != 200:
            return StarEventLog(slug, sorted(stamps), complete=False, reason=f"HTTP {result.status}")
        items = json.loads(result.body)
        stamps.extend(parse_utc(item["starred_at"]) for item in items)
        if len(items) < STAR_PAGE_SIZE:
            return StarEventLog(slug, sorted(stamps))
    logger.warning("star history for %s truncated at %d pages", slug, max_pages)
    return StarEventLog(slug, sorted(stamps), complete=False, reason=f"page cap {max_pages} reached")


def star_log_records(log: StarEventLog) -> list:
    """JSONL lines for a star log: one header record, then one timestamp per line."""
    header = {
        "owner": log.slug.owner,
        "name": log.slug.name,
        "complete": log.complete,
        "reason": log.reason,
        "count": len(log.starred_at),
    }
    return [header] + [format_utc(ts) for ts in log.starred_at]


def star_log_from_records(records: list) -> StarEventLog:
    header = records[0]
    return StarEventLog(
        slug=RepoSlug(header["owner"], header["name"]),
        starred_at=[parse_utc(ts) for ts in records[1:]],
        complete=bool(header["complete"]),
        reason=header.get("reason"),
    )

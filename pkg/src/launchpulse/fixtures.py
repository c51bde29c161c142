"""Frozen demo corpus: literal posts/repos plus a fake API transport.

The shipped cache under fixtures/cache is built by replaying the production
fetch stages against `fake_api_transport` with a pinned clock, so offline
runs replay the exact requests the live pipeline would issue.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from datetime import timedelta
from pathlib import Path

import httpx

from .config import RunConfig
from .synth import _allocate, _poisson
from .util import parse_utc

FIXTURE_FROM = "2024-01-01T00:00:00Z"
FIXTURE_TO = "2026-01-01T00:00:00Z"
FIXTURE_KEYWORDS = ("LLM", "transformers", "RAG", "agents")
FIXTURE_CLOCK = parse_utc("2026-01-02T00:00:00Z").timestamp()
RESTRICTED_SLUG = "theta/agent-bench"


@dataclass(frozen=True)
class FixtureRepo:
    owner: str
    name: str
    created_at: str
    license_id: str | None
    readme_size: int
    topics: tuple[str, ...]
    org: bool
    pre_window_stars: int
    pre_rate: float
    d24: int
    d48: int
    d7: int
    restricted: bool = False


REPOS: tuple[FixtureRepo, ...] = (
    FixtureRepo("alpha", "llm-kit", "2023-05-14T09:00:00Z", "MIT", 1234, ("llm", "toolkit"), False, 40, 0.2, 80, 120, 160),
    FixtureRepo("beta", "ragflow", "2023-11-02T16:30:00Z", "Apache-2.0", 5000, ("rag",), True, 10, 0.1, 30, 45, 60),
    FixtureRepo("gamma", "agentd", "2024-01-20T12:00:00Z", None, 800, ("agents",), False, 5, 0.0, 15, 22, 30),
    FixtureRepo("delta", "transformers-lite", "2022-08-30T08:15:00Z", "MIT", 2600, ("transformers", "runtime"), False, 60, 0.3, 120, 180, 240),
    FixtureRepo("epsilon", "vector-db", "2023-02-11T19:45:00Z", "MIT", 0, ("vector-search",), True, 0, 0.0, 40, 60, 85),
    FixtureRepo("zeta", "prompt-lab", "2024-03-01T10:10:00Z", "MIT", 3200, ("prompts", "llm"), False, 20, 0.2, 90, 140, 200),
    FixtureRepo("eta", "llm-server", "2023-07-04T22:40:00Z", "GPL-3.0", 4100, ("llm", "inference"), False, 15, 0.1, 25, 40, 55),
    FixtureRepo("theta", "agent-bench", "2023-09-18T06:25:00Z", "Apache-2.0", 1500, ("agents", "benchmarks"), True, 100, 0.5, 150, 230, 310, restricted=True),
    FixtureRepo("iota", "rag-search", "2024-02-05T14:55:00Z", "MIT", 2048, ("rag", "search"), False, 30, 0.2, 70, 105, 145),
    FixtureRepo("kappa", "finetuner", "2024-06-30T07:35:00Z", "MIT", 900, ("finetuning",), False, 25, 0.1, 55, 85, 120),
    FixtureRepo("lambda", "llm-agents", "2023-12-25T03:05:00Z", "BSD-3-Clause", 6000, ("llm", "agents"), True, 45, 0.3, 65, 95, 130),
    FixtureRepo("mu", "transformer-tools", "2024-09-09T18:20:00Z", "MIT", 1800, ("transformers",), False, 35, 0.2, 85, 130, 175),
    FixtureRepo("nu", "rag-server", "2024-10-14T11:45:00Z", "MIT", 2700, ("rag", "backend"), False, 12, 0.1, 20, 32, 45),
    FixtureRepo("xi", "agent-os", "2024-04-22T20:50:00Z", "Apache-2.0", 3900, ("agents", "platform"), True, 80, 0.4, 110, 170, 230),
    FixtureRepo("omicron", "llm-eval", "2024-11-28T05:15:00Z", "MIT", 1100, ("llm", "evaluation"), False, 18, 0.1, 35, 50, 70),
    FixtureRepo("pi", "deep-agents", "2025-01-03T13:30:00Z", None, 700, ("agents", "research"), False, 8, 0.0, 28, 44, 62),
)

# (post_id, created_at, title, url, points, comments)
POSTS: tuple[tuple[str, str, str, str, int, int], ...] = (
    ("39100001", "2024-03-04T13:00:00Z", "LLM-Kit: modular toolkit for LLM apps", "https://github.com/alpha/llm-kit", 212, 85, ),
    ("39100120", "2024-03-12T02:30:00Z", "Show HN: RAGflow - streaming RAG pipelines", "https://github.com/beta/ragflow", 95, 34),
    ("39140500", "2024-03-20T15:45:00Z", "LLM-Kit docs walkthrough", "https://github.com/Alpha/LLM-Kit/tree/main/docs", 41, 12),
    ("39200300", "2024-04-10T07:15:00Z", "Agentd: daemon for autonomous agents", "https://github.com/gamma/agentd", 58, 21),
    ("39310700", "2024-05-09T19:45:00Z", "Show HN: Transformers-Lite - tiny transformers runtime", "https://github.com/delta/transformers-lite", 325, 140),
    ("39420900", "2024-06-14T12:05:00Z", "Vector search for RAG workloads", "https://github.com/epsilon/vector-db", 120, 48),
    ("39521000", "2024-07-13T15:30:00Z", "Show HN: Prompt-Lab - iterate on LLM prompts", "https://github.com/zeta/prompt-lab", 240, 96),
    ("39622200", "2024-08-18T05:55:00Z", "Llm-server: self-hosted LLM inference", "https://github.com/eta/llm-server", 74, 29),
    ("39730400", "2024-09-23T22:10:00Z", "Show HN: Agent-Bench - evaluate coding agents", "https://github.com/theta/agent-bench", 388, 150),
    ("39830600", "2024-10-15T09:20:00Z", "Hybrid RAG search with rerankers", "https://github.com/iota/rag-search", 132, 55),
    ("39930800", "2024-11-20T17:40:00Z", "Show HN: Finetuner - LoRA finetuning for transformers", "https://github.com/kappa/finetuner", 104, 42),
    ("40031000", "2024-12-19T03:25:00Z", "Building blocks for LLM agents", "https://github.com/lambda/llm-agents", 87, 31),
    ("40131200", "2025-01-17T11:50:00Z", "Show HN: Transformer-Tools - inspect transformers internals", "https://github.com/mu/transformer-tools", 156, 60),
    ("40231400", "2025-02-22T20:35:00Z", "Rag-server: production RAG backend", "https://github.com/nu/rag-server", 49, 18),
    ("40331600", "2025-03-30T14:15:00Z", "Show HN: Agent-OS - an operating layer for agents", "https://github.com/xi/agent-os", 271, 118),
    ("40431800", "2025-04-28T08:05:00Z", "Evaluating LLM outputs at scale", "https://github.com/omicron/llm-eval", 66, 24),
    ("40532000", "2025-05-27T23:55:00Z", "Show HN: Deep-Agents - multi-step research agents", "https://github.com/pi/deep-agents", 113, 47),
    ("40632200", "2025-06-20T10:30:00Z", "Notes on LLM sampling tricks", "https://gist.github.com/someone/abc123", 52, 19),
    ("40732400", "2025-07-15T16:05:00Z", "Why agents fail in production", "https://example.com/blog/agents-in-production", 91, 38),
    ("40832600", "2025-08-12T09:40:00Z", "Transformers ecosystem roundup", "https://github.com/huggingface", 73, 26),
)


def _repo_post(repo: FixtureRepo) -> tuple[str, str, str, str, int, int]:
    url = f"https://github.com/{repo.owner}/{repo.name}"
    for post in POSTS:
        if post[3].lower().startswith(url):
            return post
    raise KeyError(url)


def fixture_t0(repo: FixtureRepo) -> str:
    return _repo_post(repo)[1]


def star_events(repo: FixtureRepo) -> list[str]:
    """Deterministic star timestamps for one fixture repo (sorted ISO strings)."""
    rng = random.Random(f"fixture-stars:{repo.owner}/{repo.name}")
    t0 = parse_utc(fixture_t0(repo))
    window_start = t0 - timedelta(hours=168)
    created = parse_utc(repo.created_at)
    span_s = max(int((window_start - created).total_seconds()), 1)
    stamps = [created + timedelta(seconds=rng.randrange(span_s)) for _ in range(repo.pre_window_stars)]
    hourly = [_poisson(rng, repo.pre_rate) for _ in range(168)]
    day_totals = [repo.d24, repo.d48 - repo.d24]
    day_totals += _allocate(repo.d7 - repo.d48, [0.55**d for d in range(5)])
    for total in day_totals:
        hourly.extend(_allocate(total, [1.0] * 24))
    for h, count in enumerate(hourly):
        hour_start = window_start + timedelta(hours=h)
        stamps.extend(hour_start + timedelta(seconds=rng.randrange(3600)) for _ in range(count))
    stamps.sort()
    return [s.strftime("%Y-%m-%dT%H:%M:%SZ") for s in stamps]


def _json_response(status: int, payload) -> httpx.Response:
    return httpx.Response(
        status,
        content=json.dumps(payload, sort_keys=True).encode("utf-8"),
        headers={"Content-Type": "application/json"},
    )


def _algolia_handler(request: httpx.Request) -> httpx.Response:
    params = request.url.params
    query = params.get("query", "").lower()
    hits_per_page = int(params.get("hitsPerPage", "100"))
    page = int(params.get("page", "0"))
    lo, hi = 0, math.inf
    for clause in params.get("numericFilters", "").split(","):
        if clause.startswith("created_at_i>="):
            lo = int(clause.split(">=")[1])
        elif clause.startswith("created_at_i<"):
            hi = int(clause.split("<")[1])

    matched = []
    for post_id, created, title, url, points, comments in POSTS:
        created_i = int(parse_utc(created).timestamp())
        if not lo <= created_i < hi:
            continue
        if query and query not in f"{title} {url}".lower():
            continue
        tags = ["story"]
        if title.lower().startswith("show hn"):
            tags.append("show_hn")
        matched.append(
            {
                "objectID": post_id,
                "created_at": created,
                "created_at_i": created_i,
                "title": title,
                "url": url,
                "points": points,
                "num_comments": comments,
                "_tags": tags,
            }
        )
    matched.sort(key=lambda h: -h["created_at_i"])  # search_by_date returns newest first
    nb_pages = max(1, math.ceil(len(matched) / hits_per_page))
    return _json_response(
        200,
        {
            "hits": matched[page * hits_per_page : (page + 1) * hits_per_page],
            "nbHits": len(matched),
            "page": page,
            "nbPages": nb_pages,
        },
    )


def _github_handler(request: httpx.Request) -> httpx.Response:
    segments = request.url.path.strip("/").split("/")
    if len(segments) < 3 or segments[0] != "repos":
        return _json_response(404, {"message": "Not Found"})
    owner, name = segments[1].lower(), segments[2].lower()
    repo = next((r for r in REPOS if r.owner == owner and r.name == name), None)
    if repo is None:
        return _json_response(404, {"message": "Not Found"})

    if len(segments) == 3:
        events = [] if repo.restricted else star_events(repo)
        total = repo.pre_window_stars + repo.d7 if repo.restricted else len(events)
        return _json_response(
            200,
            {
                "full_name": f"{repo.owner}/{repo.name}",
                "created_at": repo.created_at,
                "stargazers_count": total,
                "license": {"spdx_id": repo.license_id} if repo.license_id else None,
                "owner": {"login": repo.owner, "type": "Organization" if repo.org else "User"},
                "topics": sorted(repo.topics),
            },
        )
    if segments[3] == "readme":
        if repo.readme_size == 0:
            return _json_response(404, {"message": "Not Found"})
        return _json_response(200, {"name": "README.md", "size": repo.readme_size})
    if segments[3] == "stargazers":
        if repo.restricted:
            return _json_response(451, {"message": "Repository access blocked"})
        events = star_events(repo)
        per_page = int(request.url.params.get("per_page", "30"))
        page = int(request.url.params.get("page", "1"))
        chunk = events[(page - 1) * per_page : page * per_page]
        return _json_response(200, [{"starred_at": ts} for ts in chunk])
    return _json_response(404, {"message": "Not Found"})


def _handler(request: httpx.Request) -> httpx.Response:
    host = request.url.host
    if host == "hn.algolia.com":
        return _algolia_handler(request)
    if host == "api.github.com":
        return _github_handler(request)
    return _json_response(404, {"message": f"unknown host {host}"})


def fake_api_transport() -> httpx.MockTransport:
    """Transport that serves the frozen corpus with live API semantics."""
    return httpx.MockTransport(_handler)


def fixture_config(cache_dir: Path, data_dir: Path, out_dir: Path, offline: bool = True) -> RunConfig:
    return RunConfig(
        date_from=parse_utc(FIXTURE_FROM),
        date_to=parse_utc(FIXTURE_TO),
        keywords=FIXTURE_KEYWORDS,
        cache_dir=Path(cache_dir),
        data_dir=Path(data_dir),
        out_dir=Path(out_dir),
        offline=offline,
    )


def build_fixture_cache(cache_dir: Path, data_dir: Path) -> None:
    """Warm a cache directory by replaying the fetch stages against the fake API.

    The pinned clock makes the resulting tree byte-reproducible.
    """
    from .client import CachedHTTPClient
    from .pipeline import run_fetch_gh, run_fetch_hn
    from .store import FileCache

    cfg = fixture_config(cache_dir, data_dir, Path(data_dir) / "out", offline=False)
    cache = FileCache(cfg.cache_dir, now_fn=lambda: FIXTURE_CLOCK)
    client = CachedHTTPClient(cache, transport=fake_api_transport(), budget_per_min=10_000)
    with client:
        run_fetch_hn(cfg, client=client)
        run_fetch_gh(cfg, client=client)

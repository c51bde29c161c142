"""Deterministic synthetic-launch generator with a planted ground truth.

Live results drift, so end-to-end validation runs on generated corpora whose
per-repo star gains, features, and effect strengths are declared up front in
a manifest. Outputs use the exact production record formats, so every
downstream stage runs unmodified.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from pathlib import Path

from . import align as align_mod
from .gh import RepoSnapshot, StarEventLog, snapshot_to_record, star_log_records
from .hn import HNPost, LaunchEvent, RepoSlug, event_to_record, post_to_record
from .util import format_utc, parse_utc, write_jsonl

HOURS_BEFORE = align_mod.HOURS_BEFORE
HOURS_TOTAL = align_mod.HOURS_TOTAL


@dataclass
class SynthSpec:
    """Corpus-level generation parameters; per-repo plans derive from the seed."""

    n_repos: int = 50
    seed: int = 42
    base_date: str = "2024-03-04T00:00:00Z"
    span_days: int = 400
    pre_rate_mean: float = 0.3  # stars/hour before launch
    pre_window_mean: int = 200  # stars accrued before the window opens
    burst_base: float = 150.0
    effect_hn_score: float = 80.0  # per standard deviation
    effect_baseline: float = 40.0
    effect_hour_12_17: float = 20.0  # bonus for the 12-17 UTC bin
    noise_sd: float = 3.0
    decay_per_day: float = 0.5
    show_fraction: float = 0.4
    org_fraction: float = 0.3
    license_fraction: float = 0.7

    @classmethod
    def from_file(cls, path: Path) -> "SynthSpec":
        from .config import parse_flat_config

        raw = parse_flat_config(Path(path).read_text(encoding="utf-8"))
        unknown = set(raw) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown synth spec keys: {sorted(unknown)}")
        kwargs = {
            name: _coerce(raw[name], f.type)
            for name, f in cls.__dataclass_fields__.items()
            if name in raw
        }
        return cls(**kwargs)


def _coerce(value: str, type_name: str):
    if type_name == "int":
        return int(value)
    if type_name == "float":
        return float(value)
    return value


@dataclass
class RepoPlan:
    """Everything planted for one synthetic repository."""

    owner: str
    name: str
    post_id: str
    t0: datetime
    title: str
    show_hn: bool
    hn_score: int
    hn_comments: int
    created_at: datetime
    license_id: str | None
    readme_length: int
    topics: list[str]
    owner_is_org: bool
    pre_window_stars: int
    pre_hourly: list[int] = field(default_factory=list)  # 168 pre-launch window hours
    post_hourly: list[int] = field(default_factory=list)  # 168 post-launch window hours
    d24: int = 0
    d48: int = 0
    d7: int = 0

    @property
    def slug(self) -> RepoSlug:
        return RepoSlug(self.owner, self.name)

    @property
    def baseline_stars(self) -> int:
        return self.pre_window_stars + sum(self.pre_hourly)

    @property
    def repo_age_days(self) -> float:
        return (self.t0 - self.created_at).total_seconds() / 86400.0


def _allocate(total: int, weights: list[float]) -> list[int]:
    """Integer split of `total` by weights, exact by largest remainder."""
    if total <= 0 or not weights:
        return [0] * len(weights)
    s = sum(weights)
    raw = [total * w / s for w in weights]
    base = [int(math.floor(v)) for v in raw]
    remainder = total - sum(base)
    order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - base[i]), i))
    for i in order[:remainder]:
        base[i] += 1
    return base


def _poisson(rng: random.Random, rate: float) -> int:
    if rate <= 0:
        return 0
    limit = math.exp(-rate)
    k, p = 0, 1.0
    while True:
        p *= rng.random()
        if p <= limit:
            return k
        k += 1


def plan_corpus(spec: SynthSpec) -> list[RepoPlan]:
    """Derive the full per-repo plan set from the spec seed."""
    base = parse_utc(spec.base_date)
    plans: list[RepoPlan] = []
    for i in range(spec.n_repos):
        rng = random.Random(f"{spec.seed}:{i}")
        t0 = base + timedelta(
            days=rng.randrange(spec.span_days), hours=rng.randrange(24), minutes=rng.randrange(60)
        )
        age_days = rng.uniform(30.0, 900.0)
        created_at = (t0 - timedelta(days=age_days)).replace(microsecond=0)
        show = rng.random() < spec.show_fraction
        name = f"tool{i:03d}"
        descriptor = rng.choice(
            [
                "an open agent toolkit",
                "fast local inference",
                "retrieval pipelines for production workloads",
                "a tiny evaluation harness",
                "structured prompting with typed outputs",
            ]
        )
        title = (f"Show HN: {name} - " if show else f"{name}: ") + descriptor
        pre_rate = rng.uniform(0.0, 2.0 * spec.pre_rate_mean)
        plan = RepoPlan(
            owner=f"lab{i:03d}",
            name=name,
            post_id=str(40_000_000 + i),
            t0=t0,
            title=title,
            show_hn=show,
            hn_score=10 + rng.randrange(0, 390),  # spread evenly so trees can find it
            hn_comments=int(rng.uniform(0, 60)),  # independent of score by design
            created_at=created_at,
            license_id="MIT" if rng.random() < spec.license_fraction else None,
            readme_length=rng.randrange(0, 20000),
            topics=sorted(rng.sample(["llm", "agents", "rag", "inference", "tools"], 2)),
            owner_is_org=rng.random() < spec.org_fraction,
            pre_window_stars=rng.randrange(0, 2 * spec.pre_window_mean + 1),
            pre_hourly=[_poisson(rng, pre_rate) for _ in range(HOURS_BEFORE)],
        )
        plans.append(plan)

    # Burst sizes are linear in standardized features plus noise, so the
    # learners have a recoverable planted signal.
    scores = [p.hn_score for p in plans]
    baselines = [p.baseline_stars for p in plans]

    def zscores(values: list[int]) -> list[float]:
        m = sum(values) / len(values)
        var = sum((v - m) ** 2 for v in values) / len(values)
        sd = math.sqrt(var) if var > 0 else 1.0
        return [(v - m) / sd for v in values]

    z_score, z_base = zscores(scores), zscores(baselines)
    for i, plan in enumerate(plans):
        rng = random.Random(f"{spec.seed}:burst:{i}")
        in_best_hours = plan.t0.hour // 6 == 2
        burst = (
            spec.burst_base
            + spec.effect_hn_score * z_score[i]
            + spec.effect_baseline * z_base[i]
            + (spec.effect_hour_12_17 if in_best_hours else 0.0)
            + rng.gauss(0.0, spec.noise_sd)
        )
        plan.d7 = max(0, round(burst))
        plan.d24 = round(plan.d7 * rng.uniform(0.35, 0.55))
        plan.d48 = plan.d24 + round((plan.d7 - plan.d24) * rng.uniform(0.4, 0.7))
        _fill_post_hours(plan, spec.decay_per_day)
    return plans


def _fill_post_hours(plan: RepoPlan, decay: float) -> None:
    """Spread the planted deltas over post-launch hours, exactly."""
    day_totals = [plan.d24, plan.d48 - plan.d24]
    day_totals += _allocate(plan.d7 - plan.d48, [decay**d for d in range(5)])
    hourly: list[int] = []
    for total in day_totals:
        hourly.extend(_allocate(total, [1.0] * 24))
    plan.post_hourly = hourly


def _star_log(plan: RepoPlan) -> StarEventLog:
    rng = random.Random(f"stars:{plan.owner}/{plan.name}")
    window_start, _ = align_mod.build_window(plan.t0)
    span_s = max(int((window_start - plan.created_at).total_seconds()), 1)
    stamps = [
        plan.created_at + timedelta(seconds=rng.randrange(span_s))
        for _ in range(plan.pre_window_stars)
    ]
    for h, count in enumerate(plan.pre_hourly + plan.post_hourly):
        hour_start = window_start + timedelta(hours=h)
        stamps.extend(hour_start + timedelta(seconds=rng.randrange(3600)) for _ in range(count))
    return StarEventLog(slug=plan.slug, starred_at=sorted(stamps), complete=True)


def _snapshot(plan: RepoPlan) -> RepoSnapshot:
    return RepoSnapshot(
        slug=plan.slug,
        created_at=plan.created_at,
        license_id=plan.license_id,
        readme_length=plan.readme_length,
        topics=plan.topics,
        owner_is_org=plan.owner_is_org,
        stars_total=plan.baseline_stars + plan.d7,
        fetched_at=plan.t0 + timedelta(days=8),
    )


def _post(plan: RepoPlan) -> HNPost:
    return HNPost(
        post_id=plan.post_id,
        created_at=plan.t0,
        title=plan.title,
        url=f"https://github.com/{plan.owner}/{plan.name}",
        score=plan.hn_score,
        num_comments=plan.hn_comments,
        is_show_hn=plan.show_hn,
    )


def _event(plan: RepoPlan) -> LaunchEvent:
    post = _post(plan)
    return LaunchEvent(
        slug=plan.slug,
        post_id=post.post_id,
        t0=post.created_at,
        title=post.title,
        url=post.url or "",
        score=post.score,
        num_comments=post.num_comments,
        is_show_hn=post.is_show_hn,
    )


# The importance probe targets d24: its leakage rule bans launch_day_stars
# from the matrix, so the planted trio competes only with pre-launch columns.
IMPORTANCE_ORDER = ("hn_score", "baseline_stars", "hour_bin_2")
IMPORTANCE_FEATURE_SET = "with_leaky"
IMPORTANCE_TARGET = "d24"


def manifest_for(spec: SynthSpec, plans: list[RepoPlan]) -> dict:
    return {
        "seed": spec.seed,
        "n_repos": spec.n_repos,
        "importance": {
            "feature_set": IMPORTANCE_FEATURE_SET,
            "target": IMPORTANCE_TARGET,
            "order": list(IMPORTANCE_ORDER),
        },
        "repos": [
            {
                "owner": p.owner,
                "name": p.name,
                "t0": format_utc(p.t0),
                "d24": p.d24,
                "d48": p.d48,
                "d7": p.d7,
                "baseline_stars": p.baseline_stars,
                "features": {
                    "repo_age_days": p.repo_age_days,
                    "readme_length": p.readme_length,
                    "owner_is_org": int(p.owner_is_org),
                    "has_license": int(p.license_id is not None),
                    "title_length": len(p.title),
                    "is_show_hn": int(p.show_hn),
                    "is_weekend": int(p.t0.weekday() >= 5),
                    "hour_bin": p.t0.hour // 6,
                    "day_of_week": p.t0.weekday(),
                    "hn_score": p.hn_score,
                    "hn_comments": p.hn_comments,
                },
            }
            for p in plans
        ],
    }


def generate_corpus(spec: SynthSpec, data_dir: Path) -> dict:
    """Write a full synthetic corpus plus its ground-truth manifest."""
    data_dir = Path(data_dir)
    plans = plan_corpus(spec)
    events = sorted((_event(p) for p in plans), key=lambda e: (e.t0, e.post_id))
    write_jsonl(data_dir / "raw" / "hn_posts.jsonl", [post_to_record(_post(p)) for p in plans])
    write_jsonl(data_dir / "raw" / "pairs.jsonl", [event_to_record(e) for e in events])
    write_jsonl(
        data_dir / "raw" / "repos.jsonl",
        [snapshot_to_record(_snapshot(p)) for p in sorted(plans, key=lambda p: p.slug)],
    )
    for plan in plans:
        write_jsonl(
            data_dir / "raw" / "stars" / f"{plan.slug.file_stem}.jsonl",
            star_log_records(_star_log(plan)),
        )
    manifest = manifest_for(spec, plans)
    path = data_dir / "manifest.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=1, sort_keys=True), encoding="utf-8")
    return manifest


@dataclass
class VerifyReport:
    passed: bool
    failures: list[str]
    checked: int


def verify_against_manifest(manifest: dict, data_dir: Path, out_dir: Path) -> VerifyReport:
    """Compare pipeline outputs to the planted ground truth.

    Star-count recoveries must be exact; group means may differ only by the
    declared table rounding; importance is a rank-order check over the
    planted columns.
    """
    import csv

    from .align import series_from_record
    from .util import read_jsonl

    failures: list[str] = []
    checked = 0
    data_dir, out_dir = Path(data_dir), Path(out_dir)

    series = {}
    for rec in read_jsonl(data_dir / "aligned" / "series.jsonl"):
        s = series_from_record(rec)
        series[str(s.slug)] = s
    for repo in manifest["repos"]:
        key = f"{repo['owner']}/{repo['name']}"
        s = series.get(key)
        if s is None:
            failures.append(f"{key}: no aligned series produced")
            continue
        recovered = {
            "d24": align_mod.delta_stars(s, "24h"),
            "d48": align_mod.delta_stars(s, "48h"),
            "d7": align_mod.delta_stars(s, "7d"),
            "baseline_stars": s.baseline_stars,
        }
        for fieldname, expected in (("d24", repo["d24"]), ("d48", repo["d48"]),
                                    ("d7", repo["d7"]), ("baseline_stars", repo["baseline_stars"])):
            checked += 1
            if recovered[fieldname] != expected:
                failures.append(f"{key}: {fieldname} recovered {recovered[fieldname]} != planted {expected}")

    rows_path = data_dir / "features" / "rows.csv"
    if rows_path.exists():
        from .features import read_rows_csv

        by_slug = {str(r.slug): r for r in read_rows_csv(rows_path)}
        for repo in manifest["repos"]:
            key = f"{repo['owner']}/{repo['name']}"
            row = by_slug.get(key)
            if row is None:
                failures.append(f"{key}: no feature row produced")
                continue
            for fieldname, expected in repo["features"].items():
                checked += 1
                got = getattr(row, fieldname)
                ok = math.isclose(got, expected, abs_tol=1e-9) if fieldname == "repo_age_days" else got == expected
                if not ok:
                    failures.append(f"{key}: feature {fieldname} recovered {got!r} != planted {expected!r}")

    groups_path = out_dir / "tables" / "group_comparisons.csv"
    if groups_path.exists():
        by_slug_truth = {
            f"{r['owner']}/{r['name']}": r for r in manifest["repos"]
        }
        expected_means: dict[tuple[str, str, str], float] = {}
        sums: dict[tuple[str, str, str], list[int]] = {}
        labels = {0: "00-05", 1: "06-11", 2: "12-17", 3: "18-23"}
        for r in by_slug_truth.values():
            f = r["features"]
            for target in ("d24", "d48", "d7"):
                sums.setdefault(("show_hn", target, "show_hn" if f["is_show_hn"] else "non_show"), []).append(r[target])
                sums.setdefault(("weekend", target, "weekend" if f["is_weekend"] else "weekday"), []).append(r[target])
                sums.setdefault(("hour_bin", target, labels[f["hour_bin"]]), []).append(r[target])
        for key, values in sums.items():
            expected_means[key] = sum(values) / len(values)
        with open(groups_path, newline="", encoding="utf-8") as fh:
            for rec in csv.DictReader(fh):
                key = (rec["grouping"], rec["target"], rec["group"])
                if key not in expected_means:
                    failures.append(f"group table has unexpected group {key}")
                    continue
                checked += 1
                if abs(float(rec["mean"]) - expected_means[key]) > 0.05 + 1e-9:
                    failures.append(
                        f"group {key}: mean {rec['mean']} != planted {expected_means[key]:.4f}"
                    )

    info = manifest["importance"]
    report_path = out_dir / "models" / f"report_gbt_{info['target']}_{info['feature_set']}.csv"
    if report_path.exists():
        with open(report_path, newline="", encoding="utf-8") as fh:
            scores = {rec["column"]: float(rec["importance"]) for rec in csv.DictReader(fh)}
        planted = info["order"]
        missing = [c for c in planted if c not in scores]
        if missing:
            failures.append(f"importance report lacks planted columns: {missing}")
        else:
            checked += 1
            recovered = sorted(planted, key=lambda c: -scores[c])
            if recovered != planted:
                failures.append(f"importance order {recovered} != planted {planted}")
    else:
        failures.append(f"importance report missing: {report_path}")

    return VerifyReport(passed=not failures, failures=failures, checked=checked)

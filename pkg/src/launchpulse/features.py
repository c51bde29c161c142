"""Modeling rows with a strict wall between pre-launch and leaky quantities.

Pre-launch features describe the repository and the posting moment as they
were known at t0. Leaky features (HN score, comments, launch-day stars)
accrue after launch and are only usable in explicitly leaky configurations.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

import numpy as np

from .align import AlignedSeries, delta_stars
from .gh import RepoSnapshot
from .hn import LaunchEvent, RepoSlug
from .util import format_utc, parse_utc

TARGETS = ("d24", "d48", "d7")
FEATURE_SETS = ("pre_launch_only", "with_leaky")

# Fixed design-matrix column order. Hour bin 00-05 and Monday are the
# reference categories; Saturday and Sunday are pooled into one weekend
# contrast so the day block stays full rank alongside the intercept.
NUMERIC_COLUMNS = (
    "baseline_stars",
    "repo_age_days",
    "readme_length",
    "owner_is_org",
    "has_license",
    "title_length",
    "is_show_hn",
)
HOUR_DUMMIES = ("hour_bin_1", "hour_bin_2", "hour_bin_3")
DAY_DUMMIES = ("dow_tue", "dow_wed", "dow_thu", "dow_fri", "dow_weekend")
LEAKY_COLUMNS = ("hn_score", "hn_comments", "launch_day_stars")

# Quantities that define each target; they may never appear as columns for it.
TARGET_DEFINING = {
    "d24": {"d24", "launch_day_stars"},
    "d48": {"d48"},
    "d7": {"d7"},
}


class RowRejected(Exception):
    """The inputs cannot form a valid modeling row; carries the reason."""


@dataclass
class FeatureRow:
    slug: RepoSlug
    t0: datetime
    # pre-launch block
    baseline_stars: int
    repo_age_days: float
    readme_length: int
    owner_is_org: int
    has_license: int
    title_length: int
    is_show_hn: int
    is_weekend: int
    hour_bin: int
    day_of_week: int  # Monday=0
    # leaky block
    hn_score: int
    hn_comments: int
    launch_day_stars: int
    # targets
    d24: int
    d48: int
    d7: int
    # recorded but not encoded
    license_id: str | None = None
    topics: tuple[str, ...] = ()


def hour_bin(hour_utc: int) -> int:
    """Map a UTC hour to its posting bin: 00-05 -> 0, 06-11 -> 1, 12-17 -> 2, 18-23 -> 3."""
    if not 0 <= hour_utc <= 23:
        raise ValueError(f"hour out of range: {hour_utc}")
    return hour_utc // 6


def build_feature_row(event: LaunchEvent, snapshot: RepoSnapshot, series: AlignedSeries) -> FeatureRow:
    """Join one launch with its repo snapshot and aligned series."""
    if not (event.slug == snapshot.slug == series.slug):
        raise ValueError(f"slug mismatch: {event.slug} / {snapshot.slug} / {series.slug}")
    age_days = (event.t0 - snapshot.created_at).total_seconds() / 86400.0
    if age_days < 0:
        raise RowRejected(f"repo created after t0 ({format_utc(snapshot.created_at)} > {format_utc(event.t0)})")
    dow = event.t0.weekday()
    d24 = delta_stars(series, "24h")
    return FeatureRow(
        slug=event.slug,
        t0=event.t0,
        baseline_stars=series.baseline_stars,
        repo_age_days=age_days,
        readme_length=snapshot.readme_length,
        owner_is_org=int(snapshot.owner_is_org),
        has_license=int(snapshot.license_id is not None),
        title_length=len(event.title),
        is_show_hn=int(event.is_show_hn),
        is_weekend=int(dow >= 5),
        hour_bin=hour_bin(event.t0.hour),
        day_of_week=dow,
        hn_score=event.score,
        hn_comments=event.num_comments,
        launch_day_stars=d24,
        d24=d24,
        d48=delta_stars(series, "48h"),
        d7=delta_stars(series, "7d"),
        license_id=snapshot.license_id,
        topics=tuple(snapshot.topics),
    )


def matrix_columns(feature_set: str, target: str) -> list[str]:
    """The documented fixed column list for one (feature_set, target) design."""
    if feature_set not in FEATURE_SETS:
        raise ValueError(f"unknown feature set: {feature_set}")
    if target not in TARGETS:
        raise ValueError(f"unknown target: {target}")
    columns = ["intercept", *NUMERIC_COLUMNS, *HOUR_DUMMIES, *DAY_DUMMIES]
    if feature_set == "with_leaky":
        columns += [c for c in LEAKY_COLUMNS if c not in TARGET_DEFINING[target]]
    return columns


def _column_value(row: FeatureRow, column: str) -> float:
    if column == "intercept":
        return 1.0
    if column in HOUR_DUMMIES:
        return float(row.hour_bin == int(column[-1]))
    if column in DAY_DUMMIES:
        if column == "dow_weekend":
            return float(row.is_weekend)
        return float(row.day_of_week == 1 + DAY_DUMMIES.index(column))
    return float(getattr(row, column))


def assemble_design_matrix(
    rows: list[FeatureRow], feature_set: str, target: str
) -> tuple[np.ndarray, np.ndarray, list[str], list[str]]:
    """Build (X, y, column names, warnings) for one modeling configuration."""
    if not rows:
        raise ValueError("no feature rows to assemble")
    names = matrix_columns(feature_set, target)
    X = np.array([[_column_value(r, c) for c in names] for r in rows], dtype=float)
    y = np.array([float(getattr(r, target)) for r in rows], dtype=float)
    warnings = []
    for j, name in enumerate(names):
        if name != "intercept" and np.all(X[:, j] == X[0, j]):
            warnings.append(f"column {name} is constant across all rows")
    return X, y, names, warnings


# --- rows.csv serialization ------------------------------------------------

_PRE_FIELDS = (
    "baseline_stars", "repo_age_days", "readme_length", "owner_is_org", "has_license",
    "title_length", "is_show_hn", "is_weekend", "hour_bin", "day_of_week",
)
_LEAKY_FIELDS = ("hn_score", "hn_comments", "launch_day_stars")
_TARGET_FIELDS = ("d24", "d48", "d7")

ROWS_HEADER = (
    ["owner", "name", "t0"]
    + [f"pre.{f}" for f in _PRE_FIELDS]
    + [f"leaky.{f}" for f in _LEAKY_FIELDS]
    + [f"target.{f}" for f in _TARGET_FIELDS]
    + ["meta.license_id", "meta.topics"]
)


def write_rows_csv(rows: list[FeatureRow], path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ROWS_HEADER)
        for row in rows:
            record = [row.slug.owner, row.slug.name, format_utc(row.t0)]
            record += [repr(getattr(row, f)) if f == "repo_age_days" else getattr(row, f) for f in _PRE_FIELDS]
            record += [getattr(row, f) for f in _LEAKY_FIELDS]
            record += [getattr(row, f) for f in _TARGET_FIELDS]
            record += [row.license_id or "", ";".join(row.topics)]
            writer.writerow(record)


def read_rows_csv(path: Path) -> list[FeatureRow]:
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ROWS_HEADER:
            raise ValueError(f"unexpected rows header in {path}")
        for record in reader:
            values = dict(zip(header, record))
            rows.append(
                FeatureRow(
                    slug=RepoSlug(values["owner"], values["name"]),
                    t0=parse_utc(values["t0"]),
                    repo_age_days=float(values["pre.repo_age_days"]),
                    license_id=values["meta.license_id"] or None,
                    topics=tuple(t for t in values["meta.topics"].split(";") if t),
                    **{f: int(values[f"pre.{f}"]) for f in _PRE_FIELDS if f != "repo_age_days"},
                    **{f: int(values[f"leaky.{f}"]) for f in _LEAKY_FIELDS},
                    **{f: int(values[f"target.{f}"]) for f in _TARGET_FIELDS},
                )
            )
    return rows

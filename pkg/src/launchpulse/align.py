"""Event-window alignment: star events bucketed into hours around the launch instant.

The window is event-relative: hour boundaries sit at exact hour offsets from
t0, not at wall-clock hours, so every repository shares a common t=0.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta

from .gh import StarEventLog
from .hn import RepoSlug
from .util import format_utc, parse_utc

HOURS_BEFORE = 168
HOURS_TOTAL = 336
DAYS_TOTAL = 14

HORIZON_HOURS = {"24h": 24, "48h": 48, "7d": 168}
HORIZONS = ("24h", "48h", "7d")


@dataclass
class AlignedSeries:
    slug: RepoSlug
    t0: datetime
    hourly: list[int]  # 336 buckets, hours t0-168h .. t0+168h
    baseline_stars: int  # cumulative stars strictly before t0

    @property
    def daily(self) -> list[int]:
        """14 day totals; day d aggregates hours [24d, 24d+24) from the window start."""
        return [sum(self.hourly[24 * d : 24 * d + 24]) for d in range(DAYS_TOTAL)]


def build_window(t0: datetime) -> tuple[datetime, datetime]:
    """Half-open event window [t0-7d, t0+7d)."""
    span = timedelta(hours=HOURS_BEFORE)
    return t0 - span, t0 + span


def bucket_hourly(log: StarEventLog, t0: datetime) -> AlignedSeries:
    """Count star events per event-relative hour and tally the pre-launch baseline.

    Events before the window only raise the baseline; events at or past the
    window end are ignored. The log must be sorted (upstream invariant).
    """
    start, _ = build_window(t0)
    hourly = [0] * HOURS_TOTAL
    baseline = 0
    previous = None
    for ts in log.starred_at:
        if previous is not None and ts < previous:
            raise ValueError(f"star log for {log.slug} is not sorted: {ts} after {previous}")
        previous = ts
        if ts < t0:
            baseline += 1
        offset = int((ts - start).total_seconds() // 3600)
        if 0 <= offset < HOURS_TOTAL:
            hourly[offset] += 1
    return AlignedSeries(slug=log.slug, t0=t0, hourly=hourly, baseline_stars=baseline)


def delta_stars(series: AlignedSeries, horizon: str) -> int:
    """Stars gained in the first 24h/48h/7d after t0."""
    hours = HORIZON_HOURS[horizon]
    return sum(series.hourly[HOURS_BEFORE : HOURS_BEFORE + hours])


def series_to_record(series: AlignedSeries) -> dict:
    return {
        "owner": series.slug.owner,
        "name": series.slug.name,
        "t0": format_utc(series.t0),
        "baseline_stars": series.baseline_stars,
        "hourly": list(series.hourly),
        "daily": series.daily,
    }


def series_from_record(rec: dict) -> AlignedSeries:
    series = AlignedSeries(
        slug=RepoSlug(rec["owner"], rec["name"]),
        t0=parse_utc(rec["t0"]),
        hourly=[int(v) for v in rec["hourly"]],
        baseline_stars=int(rec["baseline_stars"]),
    )
    if len(series.hourly) != HOURS_TOTAL:
        raise ValueError(f"aligned series for {series.slug} has {len(series.hourly)} hourly buckets")
    if rec.get("daily") is not None and [int(v) for v in rec["daily"]] != series.daily:
        raise ValueError(f"aligned series for {series.slug}: daily totals disagree with hourly buckets")
    return series

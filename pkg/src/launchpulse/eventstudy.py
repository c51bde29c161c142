"""Launch-effect magnitudes, event curves, and unadjusted group comparisons."""

from __future__ import annotations

from dataclasses import dataclass
from statistics import mean, median

from .align import AlignedSeries, DAYS_TOTAL
from .features import FeatureRow, TARGETS

# Event-relative day boundaries: value at day d is the cumulative star gain
# over [t0-7d, t0+d days), so the curve starts at 0 and day 0 marks t0.
CURVE_DAYS = list(range(-7, 8))

HOUR_BIN_LABELS = ("00-05", "06-11", "12-17", "18-23")

GROUPINGS = ("show_hn", "weekend", "hour_bin")

# Published magnitudes from the original 2024-2025 collection; live data
# drifts, so these ride along as reference points and are never asserted.
REFERENCE_MEAN_GAIN = {"d24": 121.1, "d48": 188.7, "d7": 288.5}


@dataclass
class EventCurve:
    statistic: str  # "mean" or "median"
    days: list[int]
    values: list[float]
    n: int


@dataclass
class GroupComparison:
    grouping: str
    target: str
    groups: list[tuple[str, int, float]]  # (label, n, mean)
    difference: float | None  # group1 - group0 for binary groupings


def _cumulative_boundaries(series: AlignedSeries) -> list[int]:
    daily = series.daily
    out = [0]
    for d in range(DAYS_TOTAL):
        out.append(out[-1] + daily[d])
    return out


def event_curve(series_set: list[AlignedSeries], statistic: str) -> EventCurve:
    """Pointwise mean or median of per-repo cumulative daily curves."""
    if not series_set:
        raise ValueError("event curve needs at least one aligned series")
    if statistic not in ("mean", "median"):
        raise ValueError(f"unknown statistic: {statistic}")
    per_repo = [_cumulative_boundaries(s) for s in series_set]
    agg = mean if statistic == "mean" else median
    values = [float(agg([curve[i] for curve in per_repo])) for i in range(len(CURVE_DAYS))]
    return EventCurve(statistic=statistic, days=list(CURVE_DAYS), values=values, n=len(series_set))


def launch_effect_summary(rows: list[FeatureRow]) -> dict[str, dict[str, float]]:
    """Mean and median star gain per horizon."""
    if not rows:
        raise ValueError("launch effect summary needs at least one row")
    out = {}
    for target in TARGETS:
        values = [getattr(r, target) for r in rows]
        out[target] = {"mean": float(mean(values)), "median": float(median(values))}
    return out


def _group_label(row: FeatureRow, grouping: str) -> str:
    if grouping == "show_hn":
        return "show_hn" if row.is_show_hn else "non_show"
    if grouping == "weekend":
        return "weekend" if row.is_weekend else "weekday"
    if grouping == "hour_bin":
        return HOUR_BIN_LABELS[row.hour_bin]
    raise ValueError(f"unknown grouping: {grouping}")


def group_comparison(rows: list[FeatureRow], grouping: str, target: str) -> GroupComparison:
    """Unadjusted per-group means of one target; empty groups are simply absent."""
    order = {
        "show_hn": ("non_show", "show_hn"),
        "weekend": ("weekday", "weekend"),
        "hour_bin": HOUR_BIN_LABELS,
    }[grouping]
    buckets: dict[str, list[int]] = {}
    for row in rows:
        buckets.setdefault(_group_label(row, grouping), []).append(getattr(row, target))
    groups = [(label, len(buckets[label]), float(mean(buckets[label]))) for label in order if label in buckets]
    difference = None
    if grouping in ("show_hn", "weekend") and len(groups) == 2:
        difference = groups[1][2] - groups[0][2]
    return GroupComparison(grouping=grouping, target=target, groups=groups, difference=difference)

import random
from datetime import timedelta

import pytest
from hypothesis import given, strategies as st

from launchpulse.align import (
    AlignedSeries,
    HOURS_TOTAL,
    bucket_hourly,
    build_window,
    delta_stars,
    series_from_record,
    series_to_record,
)
from launchpulse.gh import StarEventLog
from launchpulse.hn import RepoSlug
from launchpulse.util import parse_utc

SLUG = RepoSlug("o", "r")
T0 = parse_utc("2024-06-01T12:00:00Z")


def _log(stamps):
    return StarEventLog(slug=SLUG, starred_at=list(stamps), complete=True)


class TestBuildWindow:
    def test_start_seven_days_before(self):
        start, _ = build_window(T0)
        assert start == parse_utc("2024-05-25T12:00:00Z")

    def test_length_336_hours(self):
        start, end = build_window(T0)
        assert (end - start) == timedelta(hours=336)

    def test_plain_boundary(self):
        _, end = build_window(parse_utc("2024-03-01T00:00:00Z"))
        assert end == parse_utc("2024-03-08T00:00:00Z")


class TestBucketHourly:
    def test_empty_log(self):
        series = bucket_hourly(_log([]), T0)
        assert series.hourly == [0] * HOURS_TOTAL
        assert series.baseline_stars == 0

    def test_single_event_after_launch(self):
        series = bucket_hourly(_log([T0 + timedelta(minutes=30)]), T0)
        assert series.hourly[168] == 1
        assert sum(series.hourly) == 1
        assert series.baseline_stars == 0

    def test_event_exactly_at_t0_is_not_baseline(self):
        series = bucket_hourly(_log([T0]), T0)
        assert series.baseline_stars == 0
        assert series.hourly[168] == 1

    def test_event_at_window_end_excluded(self):
        _, end = build_window(T0)
        series = bucket_hourly(_log([end]), T0)
        assert sum(series.hourly) == 0

    def test_pre_window_event_counts_only_to_baseline(self):
        series = bucket_hourly(_log([T0 - timedelta(days=30)]), T0)
        assert series.baseline_stars == 1
        assert sum(series.hourly) == 0

    def test_uniform_generator_vs_brute_force(self):
        # Scripted generator: place events, then count per hour independently.
        rng = random.Random(99)
        start, _ = build_window(T0)
        offsets = sorted(rng.randrange(0, 336 * 3600) for _ in range(1000))
        stamps = [start + timedelta(seconds=s) for s in offsets]
        expected = [0] * HOURS_TOTAL
        for s in offsets:
            expected[s // 3600] += 1  # independent brute-force counter
        series = bucket_hourly(_log(stamps), T0)
        assert series.hourly == expected
        assert series.baseline_stars == sum(expected[:168])

    def test_unsorted_log_hard_error(self):
        stamps = [T0 + timedelta(hours=2), T0 + timedelta(hours=1)]
        with pytest.raises(ValueError, match="not sorted"):
            bucket_hourly(_log(stamps), T0)

    def test_baseline_independence_of_prewindow_shift(self):
        inside = [T0 + timedelta(hours=h) for h in range(3)]
        near = bucket_hourly(_log([T0 - timedelta(days=10)] + inside), T0)
        far = bucket_hourly(_log([T0 - timedelta(days=400)] + inside), T0)
        assert near.hourly == far.hourly
        assert near.baseline_stars == far.baseline_stars == 1


class TestDailyConsistency:
    def test_daily_sums_match_hourly(self):
        rng = random.Random(5)
        hourly = [rng.randrange(0, 4) for _ in range(HOURS_TOTAL)]
        series = AlignedSeries(slug=SLUG, t0=T0, hourly=hourly, baseline_stars=0)
        daily = series.daily
        assert len(daily) == 14
        for d in range(14):
            assert daily[d] == sum(hourly[24 * d : 24 * d + 24])
        assert delta_stars(series, "7d") == sum(daily[7:14])


class TestDeltaStars:
    def test_all_zero(self):
        series = AlignedSeries(slug=SLUG, t0=T0, hourly=[0] * HOURS_TOTAL, baseline_stars=0)
        assert [delta_stars(series, h) for h in ("24h", "48h", "7d")] == [0, 0, 0]

    def test_constructed_step(self):
        hourly = [0] * HOURS_TOTAL
        for h in range(168, 192):  # 5 stars/hour for the first 24 post-launch hours
            hourly[h] = 5
        series = AlignedSeries(slug=SLUG, t0=T0, hourly=hourly, baseline_stars=0)
        assert delta_stars(series, "24h") == 120
        assert delta_stars(series, "48h") == 120
        assert delta_stars(series, "7d") == 120

    def test_synth_injected_delta_recovered(self):
        from launchpulse.synth import RepoPlan, _fill_post_hours, _star_log

        plan = RepoPlan(
            owner="o", name="r", post_id="1", t0=T0, title="t", show_hn=False,
            hn_score=10, hn_comments=1, created_at=T0 - timedelta(days=40),
            license_id="MIT", readme_length=10, topics=[], owner_is_org=False,
            pre_window_stars=7, pre_hourly=[0] * 168,
        )
        plan.d24, plan.d48, plan.d7 = 120, 200, 260
        _fill_post_hours(plan, 0.5)
        series = bucket_hourly(_star_log(plan), T0)
        assert delta_stars(series, "24h") == 120
        assert delta_stars(series, "48h") == 200
        assert delta_stars(series, "7d") == 260
        assert series.baseline_stars == 7

    @given(st.lists(st.integers(min_value=0, max_value=50), min_size=HOURS_TOTAL, max_size=HOURS_TOTAL))
    def test_monotone_deltas_property(self, hourly):
        series = AlignedSeries(slug=SLUG, t0=T0, hourly=hourly, baseline_stars=0)
        assert delta_stars(series, "24h") <= delta_stars(series, "48h") <= delta_stars(series, "7d")


class TestSerde:
    def test_round_trip(self):
        rng = random.Random(1)
        hourly = [rng.randrange(0, 3) for _ in range(HOURS_TOTAL)]
        series = AlignedSeries(slug=SLUG, t0=T0, hourly=hourly, baseline_stars=12)
        parsed = series_from_record(series_to_record(series))
        assert parsed == series

    def test_daily_disagreement_detected(self):
        series = AlignedSeries(slug=SLUG, t0=T0, hourly=[1] * HOURS_TOTAL, baseline_stars=0)
        record = series_to_record(series)
        record["daily"][0] += 1
        with pytest.raises(ValueError, match="daily totals disagree"):
            series_from_record(record)

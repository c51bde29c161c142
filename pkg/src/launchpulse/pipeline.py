"""Stage implementations: each reads its declared inputs and writes its declared outputs.

Stages are independently runnable; a missing input is reported with the
expected path so the operator knows which stage to run first.
"""

from __future__ import annotations

import json
import logging
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import align as align_mod
from . import eventstudy, inference, learn, report
from .client import CachedHTTPClient, CountingTransport, ForbiddenTransport
from .config import RunConfig
from .features import (
    FEATURE_SETS,
    FeatureRow,
    RowRejected,
    TARGETS,
    assemble_design_matrix,
    build_feature_row,
    matrix_columns,
    read_rows_csv,
    write_rows_csv,
)
from .gh import (
    fetch_repo_metadata,
    fetch_star_events,
    snapshot_from_record,
    snapshot_to_record,
    star_log_from_records,
    star_log_records,
)
from .hn import dedupe_earliest, event_from_record, event_to_record, extract_repo_slug, post_to_record, search_posts
from .store import FileCache
from .util import format_utc, read_jsonl, write_jsonl

logger = logging.getLogger(__name__)

HORIZON_LABEL = {"d24": "24h", "d48": "48h", "d7": "7d"}


class InputMissing(Exception):
    """A stage input file does not exist; carries the expected path."""

    def __init__(self, path: Path, hint: str):
        super().__init__(f"missing input {path} ({hint})")
        self.path = Path(path)


class StageError(Exception):
    """A stage failed hard; partial outputs are left in place."""


@dataclass
class StageReport:
    stage: str
    warnings: list[str] = field(default_factory=list)
    outputs: list[Path] = field(default_factory=list)
    counts: dict = field(default_factory=dict)


@dataclass
class Layout:
    """All file locations for one run."""

    data: Path
    out: Path

    @property
    def hn_posts(self) -> Path:
        return self.data / "raw" / "hn_posts.jsonl"

    @property
    def pairs(self) -> Path:
        return self.data / "raw" / "pairs.jsonl"

    @property
    def repos(self) -> Path:
        return self.data / "raw" / "repos.jsonl"

    @property
    def stars_dir(self) -> Path:
        return self.data / "raw" / "stars"

    @property
    def series(self) -> Path:
        return self.data / "aligned" / "series.jsonl"

    @property
    def align_exclusions(self) -> Path:
        return self.data / "aligned" / "exclusions.csv"

    @property
    def rows(self) -> Path:
        return self.data / "features" / "rows.csv"

    @property
    def feature_exclusions(self) -> Path:
        return self.data / "features" / "exclusions.csv"

    def matrix(self, feature_set: str, target: str) -> Path:
        return self.data / "features" / f"matrix_{feature_set}_{target}.csv"

    @property
    def tables(self) -> Path:
        return self.out / "tables"

    @property
    def figures(self) -> Path:
        return self.out / "figures"

    @property
    def models_dir(self) -> Path:
        return self.out / "models"


def layout_for(cfg: RunConfig) -> Layout:
    return Layout(data=Path(cfg.data_dir), out=Path(cfg.out_dir))


def build_client(cfg: RunConfig, transport=None) -> CachedHTTPClient:
    """Client per the run config; offline swaps in a counting forbidden transport."""
    if transport is None and cfg.offline:
        transport = CountingTransport(ForbiddenTransport())
    cache = FileCache(cfg.cache_dir)
    return CachedHTTPClient(
        cache,
        transport=transport,
        budget_per_min=cfg.rate_budget,
        rng=random.Random(cfg.seed),
        ignore_ttl=cfg.offline,  # a shipped fixture store is a frozen snapshot
    )


def _require(path: Path, hint: str) -> Path:
    if not path.exists():
        raise InputMissing(path, hint)
    return path


# --- fetch stages ------------------------------------------------------------


def run_fetch_hn(cfg: RunConfig, client: CachedHTTPClient | None = None) -> StageReport:
    rep = StageReport("fetch-hn")
    lay = layout_for(cfg)
    own_client = client is None
    client = client or build_client(cfg)
    try:
        posts, warnings = search_posts(
            client, cfg.keywords, (cfg.date_from, cfg.date_to), page_limit=cfg.hn_page_limit
        )
        rep.warnings.extend(warnings)
    finally:
        if own_client:
            client.close()
    write_jsonl(lay.hn_posts, [post_to_record(p) for p in posts])
    pairs = []
    for post in posts:
        slug = extract_repo_slug(post.url)
        if slug is not None:
            pairs.append((post, slug))
    events = dedupe_earliest(pairs)
    write_jsonl(lay.pairs, [event_to_record(e) for e in events])
    rep.outputs = [lay.hn_posts, lay.pairs]
    rep.counts = {"posts": len(posts), "pairs": len(events)}
    return rep


def run_fetch_gh(cfg: RunConfig, client: CachedHTTPClient | None = None) -> StageReport:
    rep = StageReport("fetch-gh")
    lay = layout_for(cfg)
    events = [event_from_record(r) for r in read_jsonl(_require(lay.pairs, "run fetch-hn first"))]
    own_client = client is None
    client = client or build_client(cfg)

    def fetch_one(event):
        snapshot, reason = fetch_repo_metadata(client, event.slug, token=cfg.github_token)
        log = fetch_star_events(client, event.slug, max_pages=cfg.max_pages, token=cfg.github_token)
        return event.slug, snapshot, reason, log

    try:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(fetch_one, events))
    finally:
        if own_client:
            client.close()

    results.sort(key=lambda item: item[0])
    snapshots = []
    for slug, snapshot, reason, log in results:
        if snapshot is None:
            rep.warnings.append(f"{slug}: {reason}")
        else:
            snapshots.append(snapshot)
        if not log.complete:
            rep.warnings.append(f"{slug}: star history incomplete ({log.reason})")
        write_jsonl(lay.stars_dir / f"{slug.file_stem}.jsonl", star_log_records(log))
    write_jsonl(lay.repos, [snapshot_to_record(s) for s in snapshots])
    rep.outputs = [lay.repos, lay.stars_dir]
    rep.counts = {"repos": len(snapshots), "star_logs": len(results)}
    return rep


# --- transformation stages ---------------------------------------------------


def run_align(cfg: RunConfig) -> StageReport:
    rep = StageReport("align")
    lay = layout_for(cfg)
    events = [event_from_record(r) for r in read_jsonl(_require(lay.pairs, "run fetch-hn first"))]
    _require(lay.stars_dir, "run fetch-gh first")

    series_records = []
    exclusions = []
    for event in events:
        star_path = lay.stars_dir / f"{event.slug.file_stem}.jsonl"
        if not star_path.exists():
            exclusions.append((str(event.slug), "no star log fetched"))
            continue
        log = star_log_from_records(list(read_jsonl(star_path)))
        if not log.complete:
            exclusions.append((str(event.slug), log.reason or "incomplete star history"))
            continue
        series = align_mod.bucket_hourly(log, event.t0)
        series_records.append(align_mod.series_to_record(series))
    write_jsonl(lay.series, series_records)
    report.write_csv(lay.align_exclusions, ["slug", "reason"], exclusions)
    for slug, reason in exclusions:
        rep.warnings.append(f"{slug} excluded from series: {reason}")
    rep.outputs = [lay.series, lay.align_exclusions]
    rep.counts = {"series": len(series_records), "excluded": len(exclusions)}
    return rep


def run_features(cfg: RunConfig) -> StageReport:
    rep = StageReport("features")
    lay = layout_for(cfg)
    events = {str(e.slug): e for e in (event_from_record(r) for r in read_jsonl(_require(lay.pairs, "run fetch-hn first")))}
    snapshots = {
        str(s.slug): s for s in (snapshot_from_record(r) for r in read_jsonl(_require(lay.repos, "run fetch-gh first")))
    }
    series_list = [align_mod.series_from_record(r) for r in read_jsonl(_require(lay.series, "run align first"))]

    rows: list[FeatureRow] = []
    exclusions = []
    for series in series_list:
        key = str(series.slug)
        event = events.get(key)
        snapshot = snapshots.get(key)
        if event is None:
            exclusions.append((key, "no launch event"))
            continue
        if snapshot is None:
            exclusions.append((key, "metadata missing"))
            continue
        try:
            rows.append(build_feature_row(event, snapshot, series))
        except RowRejected as exc:
            exclusions.append((key, str(exc)))
    write_rows_csv(rows, lay.rows)
    report.write_csv(lay.feature_exclusions, ["slug", "reason"], exclusions)
    for slug, reason in exclusions:
        rep.warnings.append(f"{slug} excluded from rows: {reason}")

    matrix_warnings = set()
    if rows:
        for feature_set in FEATURE_SETS:
            for target in TARGETS:
                X, y, names, warns = assemble_design_matrix(rows, feature_set, target)
                matrix_warnings.update(warns)
                path = lay.matrix(feature_set, target)
                report.write_csv(
                    path, names + ["y"], [[repr(v) for v in row] + [repr(val)] for row, val in zip(X.tolist(), y.tolist())]
                )
                rep.outputs.append(path)
    rep.warnings.extend(sorted(matrix_warnings))
    rep.outputs = [lay.rows, lay.feature_exclusions] + rep.outputs
    rep.counts = {"rows": len(rows), "excluded": len(exclusions)}
    return rep


# --- analysis stages ---------------------------------------------------------


def run_study(cfg: RunConfig) -> StageReport:
    rep = StageReport("study")
    lay = layout_for(cfg)
    series_list = [align_mod.series_from_record(r) for r in read_jsonl(_require(lay.series, "run align first"))]
    rows = read_rows_csv(_require(lay.rows, "run features first"))

    curve_rows = []
    if series_list:
        for statistic in ("mean", "median"):
            curve = eventstudy.event_curve(series_list, statistic)
            for day, value in zip(curve.days, curve.values):
                curve_rows.append([statistic, day, report.fmt_stars(value), curve.n])
    report.write_csv(lay.tables / "event_curves.csv", ["statistic", "day", "value", "n"], curve_rows)

    effect_rows = []
    if rows:
        summary = eventstudy.launch_effect_summary(rows)
        for target in TARGETS:
            effect_rows.append(
                [
                    HORIZON_LABEL[target],
                    report.fmt_stars(summary[target]["mean"]),
                    report.fmt_stars(summary[target]["median"]),
                    len(rows),
                    report.fmt_stars(eventstudy.REFERENCE_MEAN_GAIN[target]),
                ]
            )
    report.write_csv(
        lay.tables / "launch_effects.csv",
        ["horizon", "mean", "median", "n", "reference_mean"],
        effect_rows,
    )

    group_rows = []
    if rows:
        for grouping in eventstudy.GROUPINGS:
            for target in TARGETS:
                comparison = eventstudy.group_comparison(rows, grouping, target)
                for label, n, mean_value in comparison.groups:
                    group_rows.append(
                        [
                            grouping,
                            target,
                            label,
                            n,
                            report.fmt_stars(mean_value),
                            "" if comparison.difference is None else report.fmt_stars(comparison.difference),
                        ]
                    )
    report.write_csv(
        lay.tables / "group_comparisons.csv",
        ["grouping", "target", "group", "n", "mean", "difference"],
        group_rows,
    )
    rep.outputs = [
        lay.tables / "event_curves.csv",
        lay.tables / "launch_effects.csv",
        lay.tables / "group_comparisons.csv",
    ]
    rep.counts = {"series": len(series_list), "rows": len(rows)}
    return rep


def run_infer(cfg: RunConfig) -> StageReport:
    rep = StageReport("infer")
    lay = layout_for(cfg)
    rows = read_rows_csv(_require(lay.rows, "run features first"))

    summary_lines = ["Timing regressions with heteroskedasticity-robust (HC1) standard errors", ""]
    for contrast in inference.CONTRASTS:
        for target in TARGETS:
            path = lay.tables / f"regression_{contrast}_{target}.csv"
            try:
                fit = inference.contrast_fit(rows, contrast, target) if rows else None
            except ValueError as exc:
                fit = None
                rep.warnings.append(f"regression {contrast}/{target} not estimable: {exc}")
            if fit is None:
                report.write_csv(path, ["name", "coefficient", "std_error", "t_stat", "p_value"], [])
                rep.outputs.append(path)
                continue
            table = inference.coef_table(fit)
            report.write_csv(
                path,
                ["name", "coefficient", "std_error", "t_stat", "p_value"],
                [
                    [name, report.fmt_metric(coef), report.fmt_metric(se), report.fmt_metric(t), report.fmt_p(p)]
                    for name, coef, se, t, p in table
                ],
            )
            rep.outputs.append(path)
            summary_lines.append(f"[{contrast} / {HORIZON_LABEL[target]}]  n={fit.n} k={fit.k}")
            if fit.dropped_columns:
                summary_lines.append(f"  dropped constant columns: {', '.join(fit.dropped_columns)}")
            if fit.perfect_fit:
                summary_lines.append("  note: perfect fit; p-values reported as 0")
            for name, coef, se, t, p in table:
                if name in inference.contrast_effect_columns(contrast):
                    summary_lines.append(
                        f"  {name}: coef {report.fmt_stars(coef)} (SE {report.fmt_stars(se)}, p {report.fmt_p(p)})"
                    )
            summary_lines.append("")
    report.write_text(lay.out / "summary_inference.txt", "\n".join(summary_lines) + "\n")
    rep.outputs.append(lay.out / "summary_inference.txt")
    rep.counts = {"rows": len(rows)}
    return rep


def run_model(cfg: RunConfig) -> StageReport:
    rep = StageReport("model")
    lay = layout_for(cfg)
    rows = read_rows_csv(_require(lay.rows, "run features first"))
    performance_rows = []

    for feature_set in FEATURE_SETS:
        for target in TARGETS:
            reports = _train_pair(cfg, rows, feature_set, target, rep)
            for model_report in reports:
                path = lay.models_dir / f"report_{model_report.model_id}_{target}_{feature_set}.csv"
                _write_model_report(path, model_report)
                rep.outputs.append(path)
                performance_rows.append(
                    [
                        model_report.model_id,
                        HORIZON_LABEL[target],
                        feature_set,
                        report.fmt_metric(model_report.mae),
                        report.fmt_metric(model_report.rmse),
                        report.fmt_metric(model_report.r2),
                        model_report.test_n,
                    ]
                )
    report.write_csv(
        lay.tables / "model_performance.csv",
        ["model", "horizon", "feature_set", "mae", "rmse", "r2", "test_n"],
        performance_rows,
    )
    rep.outputs.append(lay.tables / "model_performance.csv")
    rep.counts = {"rows": len(rows), "configurations": len(performance_rows)}
    return rep


def _train_pair(cfg: RunConfig, rows, feature_set: str, target: str, rep: StageReport) -> list[learn.ModelReport]:
    if len(rows) < 10:
        rep.warnings.append(f"model {feature_set}/{target}: too few rows ({len(rows)}), skipped")
        return []
    X, y, names, _ = assemble_design_matrix(rows, feature_set, target)
    train_idx, test_idx = learn.train_test_split(list(range(len(rows))), cfg.split_ratio, cfg.seed)
    X_tr, y_tr = X[train_idx], y[train_idx]
    X_te, y_te = X[test_idx], y[test_idx]
    out = []

    best_lam, best_l1, _ = learn.cross_validate_enet(X_tr, y_tr, folds=5, seed=cfg.seed)
    enet = learn.elastic_net_fit(X_tr, y_tr, best_lam, best_l1, column_names=names)
    out.append(
        _evaluate_model(
            cfg, "elastic_net", enet, X_te, y_te, names, target, feature_set, rep,
            {"lambda": round(best_lam, 10), "l1_ratio": best_l1, "cv_folds": 5},
        )
    )

    gbt = learn.gbt_fit(
        X_tr,
        y_tr,
        n_trees=cfg.gbt_n_trees,
        learning_rate=cfg.gbt_learning_rate,
        max_depth=cfg.gbt_max_depth,
        min_leaf=cfg.gbt_min_leaf,
        seed=cfg.seed,
        column_names=names,
    )
    out.append(
        _evaluate_model(
            cfg, "gbt", gbt, X_te, y_te, names, target, feature_set, rep,
            {
                "n_trees": cfg.gbt_n_trees,
                "learning_rate": cfg.gbt_learning_rate,
                "max_depth": cfg.gbt_max_depth,
                "min_leaf": cfg.gbt_min_leaf,
            },
        )
    )
    return out


def _evaluate_model(cfg, model_id, model, X_te, y_te, names, target, feature_set, rep, hyper) -> learn.ModelReport:
    mae, rmse, r2 = learn.evaluate(y_te, model.predict(X_te))
    if r2 is None:
        rep.warnings.append(f"{model_id} {feature_set}/{target}: test target has no variance; r2 absent")
        importance = []
    else:
        importance = learn.permutation_importance(
            model, X_te, y_te, names, repeats=cfg.importance_repeats, seed=cfg.seed
        )
    return learn.ModelReport(
        model_id=model_id,
        target=target,
        feature_set=feature_set,
        mae=mae,
        rmse=rmse,
        r2=r2,
        test_n=len(y_te),
        importance=importance,
        hyperparameters=hyper,
    )


def _write_model_report(path: Path, mr: learn.ModelReport) -> None:
    hyper = json.dumps(mr.hyperparameters, sort_keys=True)
    base = [
        mr.model_id,
        HORIZON_LABEL[mr.target],
        mr.feature_set,
        report.fmt_metric(mr.mae),
        report.fmt_metric(mr.rmse),
        report.fmt_metric(mr.r2),
        mr.test_n,
        hyper,
    ]
    rows = [
        base + [rank, column, report.fmt_metric(score)]
        for rank, (column, score) in enumerate(mr.importance, start=1)
    ] or [base + ["", "", ""]]
    report.write_csv(
        path,
        ["model", "horizon", "feature_set", "mae", "rmse", "r2", "test_n", "hyperparameters", "rank", "column", "importance"],
        rows,
    )


# --- report stage ------------------------------------------------------------


def _read_csv_dicts(path: Path, hint: str) -> list[dict]:
    import csv

    with open(_require(path, hint), newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def run_report(cfg: RunConfig) -> StageReport:
    rep = StageReport("report")
    lay = layout_for(cfg)
    curves = _read_csv_dicts(lay.tables / "event_curves.csv", "run study first")
    effects = _read_csv_dicts(lay.tables / "launch_effects.csv", "run study first")
    groups = _read_csv_dicts(lay.tables / "group_comparisons.csv", "run study first")
    performance = _read_csv_dicts(lay.tables / "model_performance.csv", "run model first")
    show_reg = _read_csv_dicts(lay.tables / "regression_show_hn_d48.csv", "run infer first")
    weekend_reg = _read_csv_dicts(lay.tables / "regression_weekend_d48.csv", "run infer first")

    # Figures.
    if curves:
        days = sorted({int(r["day"]) for r in curves})
        series = []
        for statistic in ("mean", "median"):
            values = {int(r["day"]): float(r["value"]) for r in curves if r["statistic"] == statistic}
            series.append((statistic, [values[d] for d in days]))
        fig = report.FigureSpec(
            kind="event_curve",
            series=series,
            title="Cumulative stars around launch",
            x_label="days relative to launch",
            y_label="stars gained since window start",
            x_ticks=days,
        )
        report.write_text(lay.figures / "event_curves.svg", report.render_svg(fig))
        rep.outputs.append(lay.figures / "event_curves.svg")
    else:
        rep.warnings.append("no event curves to draw")

    hour_rows = [r for r in groups if r["grouping"] == "hour_bin" and r["target"] == "d48"]
    if hour_rows:
        fig = report.FigureSpec(
            kind="hour_bars",
            series=[(r["group"], [float(r["mean"])]) for r in hour_rows],
            title="Mean 48h star gain by posting hour (UTC)",
            x_label="posting hour bin (UTC)",
            y_label="mean stars gained in 48h",
        )
        report.write_text(lay.figures / "hour_impact.svg", report.render_svg(fig))
        rep.outputs.append(lay.figures / "hour_impact.svg")
    else:
        rep.warnings.append("no hour-bin groups to draw")

    # Table-2-shaped consolidated timing table.
    timing_rows = []
    for row in effects:
        timing_rows.append(
            [f"delta_{row['horizon']}_stars", row["mean"], "", "", f"median {row['median']}"]
        )
    timing_rows.append(_contrast_row("show_hn_vs_others_48h", show_reg, "is_show_hn", groups, "show_hn"))
    timing_rows.append(_contrast_row("weekend_vs_weekday_48h", weekend_reg, "dow_weekend", groups, "weekend"))
    if hour_rows:
        means = [float(r["mean"]) for r in hour_rows]
        best = hour_rows[max(range(len(means)), key=lambda i: means[i])]["group"]
        spread = report.fmt_stars(max(means) - min(means))
        timing_rows.append(["hour_bins_unadjusted_48h", spread, "", "", f"best {best} UTC (max-min spread)"])
    report.write_csv(
        lay.tables / "timing_analysis.csv",
        ["effect", "coefficient", "std_error", "p_value", "note"],
        timing_rows,
    )
    rep.outputs.append(lay.tables / "timing_analysis.csv")

    summary = _overview_text(cfg, lay, effects, performance, timing_rows)
    report.write_text(lay.out / "summary_overview.txt", summary)
    rep.outputs.append(lay.out / "summary_overview.txt")

    entries = report.write_manifest(lay.out)
    rep.outputs.append(lay.out / "manifest.csv")
    rep.counts = {"manifest_files": len(entries)}
    return rep


def _contrast_row(effect: str, reg_rows: list[dict], column: str, groups: list[dict], grouping: str) -> list:
    match = next((r for r in reg_rows if r["name"] == column), None)
    binary = [r for r in groups if r["grouping"] == grouping and r["target"] == "d48"]
    note = ""
    if len(binary) == 2:
        lower, higher = sorted(binary, key=lambda r: float(r["mean"]))
        note = f"{higher['group']} higher unadjusted"
    if match is None:
        return [effect, "", "", "", note or "not estimable"]
    coef = report.fmt_stars(float(match["coefficient"]))
    se = report.fmt_stars(float(match["std_error"]))
    return [effect, coef, se, match["p_value"], note]


def _overview_text(cfg: RunConfig, lay: Layout, effects, performance, timing_rows) -> str:
    import csv

    pairs = list(read_jsonl(lay.pairs)) if lay.pairs.exists() else []
    series_count = sum(1 for _ in read_jsonl(lay.series)) if lay.series.exists() else 0
    rows = read_rows_csv(lay.rows) if lay.rows.exists() else []
    exclusions = []
    for path in (lay.align_exclusions, lay.feature_exclusions):
        if path.exists():
            with open(path, newline="", encoding="utf-8") as fh:
                exclusions.extend((r["slug"], r["reason"]) for r in csv.DictReader(fh))

    lines = ["Launch effect analysis", "======================", "", "Corpus", "------"]
    lines.append(f"Total pairs: {len(pairs)}")
    lines.append(f"Valid series: {series_count}")
    lines.append(f"Modeling rows: {len(rows)}")
    lines.append(f"Excluded: {len(exclusions)}")
    for slug, reason in exclusions:
        lines.append(f"  - {slug}: {reason}")
    if pairs:
        show = sum(1 for p in pairs if p["is_show_hn"])
        non_show = len(pairs) - show
        lines.append(f"Show HN posts: {show} ({100.0 * show / len(pairs):.1f}%)")
        lines.append(f"Non-Show posts: {non_show} ({100.0 * non_show / len(pairs):.1f}%)")
        first = min(p["t0"] for p in pairs)[:10]
        last = max(p["t0"] for p in pairs)[:10]
        lines.append(f"Time period: {first} .. {last}")
    if rows:
        lines.append(
            "Mean baseline stars: " + report.fmt_stars(sum(r.baseline_stars for r in rows) / len(rows))
        )
        lines.append("Mean HN score: " + report.fmt_stars(sum(r.hn_score for r in rows) / len(rows)))
        lines.append("Mean HN comments: " + report.fmt_stars(sum(r.hn_comments for r in rows) / len(rows)))
    lines.append("")

    lines += ["Launch effects (stars gained after launch)", "------------------------------------------"]
    lines.append("horizon  mean  median  reference_mean")
    for row in effects:
        lines.append(f"{row['horizon']:>7}  {row['mean']:>6}  {row['median']:>6}  {row['reference_mean']:>6}")
    lines.append("(reference values: published magnitudes from the original 2024-2025 corpus)")
    lines.append("")

    lines += ["Timing analysis", "---------------"]
    for effect, coef, se, p, note in timing_rows:
        detail = f"coef {coef}" if coef != "" else ""
        if se:
            detail += f" (SE {se}, p {p})"
        lines.append(f"{effect}: {detail}  {note}".rstrip())
    lines.append("(full coefficient tables: out/tables/regression_*.csv)")
    lines.append("")

    lines += ["Model performance", "-----------------"]
    lines.append("model  horizon  feature_set  mae  rmse  r2  test_n")
    for row in performance:
        lines.append(
            f"{row['model']}  {row['horizon']}  {row['feature_set']}  "
            f"{row['mae']}  {row['rmse']}  {row['r2']}  {row['test_n']}"
        )
    lines.append("(source: out/tables/model_performance.csv)")
    lines.append("")
    return "\n".join(lines) + "\n"


# --- synth + orchestration ---------------------------------------------------


def run_synth(cfg: RunConfig, spec_path: Path | None, out_dir: Path | None) -> StageReport:
    from .synth import SynthSpec, generate_corpus

    rep = StageReport("synth")
    spec = SynthSpec.from_file(spec_path) if spec_path else SynthSpec()
    target = Path(out_dir) if out_dir else Path(cfg.data_dir)
    manifest = generate_corpus(spec, target)
    rep.outputs = [target / "manifest.json"]
    rep.counts = {"repos": manifest["n_repos"]}
    return rep


STAGES = ("fetch-hn", "fetch-gh", "align", "features", "study", "infer", "model", "report")

_STAGE_FUNCS = {
    "fetch-hn": run_fetch_hn,
    "fetch-gh": run_fetch_gh,
    "align": run_align,
    "features": run_features,
    "study": run_study,
    "infer": run_infer,
    "model": run_model,
    "report": run_report,
}


def run_stage(name: str, cfg: RunConfig) -> StageReport:
    if name not in _STAGE_FUNCS:
        raise ValueError(f"unknown stage: {name}")
    return _STAGE_FUNCS[name](cfg)


def expected_outputs(cfg: RunConfig) -> list[Path]:
    """Every file a full run must leave under out/."""
    lay = layout_for(cfg)
    paths = [
        lay.tables / "event_curves.csv",
        lay.tables / "launch_effects.csv",
        lay.tables / "group_comparisons.csv",
        lay.tables / "model_performance.csv",
        lay.tables / "timing_analysis.csv",
        lay.out / "summary_inference.txt",
        lay.out / "summary_overview.txt",
        lay.out / "manifest.csv",
        lay.figures / "event_curves.svg",
        lay.figures / "hour_impact.svg",
    ]
    for contrast in inference.CONTRASTS:
        for target in TARGETS:
            paths.append(lay.tables / f"regression_{contrast}_{target}.csv")
    for feature_set in FEATURE_SETS:
        for target in TARGETS:
            for model in ("elastic_net", "gbt"):
                paths.append(lay.models_dir / f"report_{model}_{target}_{feature_set}.csv")
    return paths


def run_all(cfg: RunConfig, from_stage: str = "fetch-hn") -> list[StageReport]:
    """Run the stage chain in order; the first hard error stops the chain."""
    if from_stage not in STAGES:
        raise ValueError(f"unknown stage: {from_stage}")
    reports = []
    for name in STAGES[STAGES.index(from_stage):]:
        logger.info("stage %s starting", name)
        reports.append(run_stage(name, cfg))
    missing = [str(p) for p in expected_outputs(cfg) if not p.exists()]
    if missing:
        raise StageError(f"run finished but expected outputs are missing: {', '.join(missing)}")
    return reports

"""Dual outputs: machine-readable CSV tables, SVG figures, and TXT summaries.

Everything here is byte-deterministic: fixed number formats, one CSV
dialect (comma, LF, minimal quoting), and string-built SVG with no external
fonts or scripts.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence


def fmt_stars(value: float) -> str:
    return f"{value:.1f}"


def fmt_p(value: float) -> str:
    return f"{value:.2f}"


def fmt_metric(value: float | None) -> str:
    return "" if value is None else f"{value:.3f}"


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow(list(row))


def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def write_manifest(out_dir: Path) -> list[tuple[str, int]]:
    """List every file under out/ (path, bytes) into out/manifest.csv."""
    out_dir = Path(out_dir)
    entries = []
    for p in sorted(out_dir.rglob("*")):
        if p.is_file() and p.name != "manifest.csv":
            entries.append((str(p.relative_to(out_dir)).replace("\\", "/"), p.stat().st_size))
    write_csv(out_dir / "manifest.csv", ["path", "bytes"], entries)
    return entries


# --- SVG rendering -----------------------------------------------------------

WIDTH, HEIGHT = 880, 560
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 170, 56, 70
SERIES_COLORS = ("#1f6fb4", "#d0622a", "#3a8f4e", "#7d55a8")


@dataclass
class FigureSpec:
    kind: str  # "event_curve" or "hour_bars"
    series: list[tuple[str, list[float]]]
    title: str
    x_label: str
    y_label: str
    x_ticks: list | None = None  # event_curve: day labels matching series length


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")


def _check_finite(fig: FigureSpec) -> None:
    for label, values in fig.series:
        if not values:
            raise ValueError(f"series {label!r} is empty")
        if not all(math.isfinite(v) for v in values):
            raise ValueError(f"series {label!r} contains a non-finite value")


def render_svg(fig: FigureSpec) -> str:
    """Self-contained deterministic SVG for one figure."""
    _check_finite(fig)
    if fig.kind == "event_curve":
        return _render_curves(fig)
    if fig.kind == "hour_bars":
        return _render_bars(fig)
    raise ValueError(f"unknown figure kind: {fig.kind}")


def _frame(fig: FigureSpec, y_max: float, y_min: float = 0.0):
    plot_l, plot_r = MARGIN_L, WIDTH - MARGIN_R
    plot_t, plot_b = MARGIN_T, HEIGHT - MARGIN_B
    span = y_max - y_min or 1.0

    def y_px(v: float) -> float:
        return plot_b - (v - y_min) / span * (plot_b - plot_t)

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">',
        '<rect width="100%" height="100%" fill="#ffffff"/>',
        f'<text x="{WIDTH / 2:.1f}" y="30" text-anchor="middle" font-size="19">{_escape(fig.title)}</text>',
    ]
    for i in range(6):
        v = y_min + span * i / 5
        y = y_px(v)
        lines.append(
            f'<line x1="{plot_l}" y1="{y:.2f}" x2="{plot_r}" y2="{y:.2f}" stroke="#dddddd" stroke-width="1"/>'
        )
        lines.append(
            f'<text x="{plot_l - 8}" y="{y + 4:.2f}" text-anchor="end" font-size="12">{v:.1f}</text>'
        )
    lines.append(
        f'<line x1="{plot_l}" y1="{plot_b}" x2="{plot_r}" y2="{plot_b}" stroke="#000000" stroke-width="1.5"/>'
    )
    lines.append(
        f'<line x1="{plot_l}" y1="{plot_t}" x2="{plot_l}" y2="{plot_b}" stroke="#000000" stroke-width="1.5"/>'
    )
    lines.append(
        f'<text x="{(plot_l + plot_r) / 2:.1f}" y="{HEIGHT - 18}" text-anchor="middle" font-size="14">'
        f"{_escape(fig.x_label)}</text>"
    )
    mid_y = (plot_t + plot_b) / 2
    lines.append(
        f'<text x="20" y="{mid_y:.1f}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 20 {mid_y:.1f})">{_escape(fig.y_label)}</text>'
    )
    return lines, y_px, (plot_l, plot_r, plot_t, plot_b)


def _render_curves(fig: FigureSpec) -> str:
    ticks = fig.x_ticks or list(range(len(fig.series[0][1])))
    y_max = max(max(vals) for _, vals in fig.series) or 1.0
    lines, y_px, (plot_l, plot_r, plot_t, plot_b) = _frame(fig, y_max)

    def x_px(i: int) -> float:
        return plot_l + i / max(len(ticks) - 1, 1) * (plot_r - plot_l)

    if 0 in ticks:  # launch marker at day 0
        x0 = x_px(ticks.index(0))
        lines.append(
            f'<line x1="{x0:.2f}" y1="{plot_t}" x2="{x0:.2f}" y2="{plot_b}" '
            'stroke="#888888" stroke-width="1" stroke-dasharray="5,4"/>'
        )
    for i, tick in enumerate(ticks):
        x = x_px(i)
        lines.append(
            f'<line x1="{x:.2f}" y1="{plot_b}" x2="{x:.2f}" y2="{plot_b + 5}" stroke="#000000" stroke-width="1"/>'
        )
        lines.append(f'<text x="{x:.2f}" y="{plot_b + 20}" text-anchor="middle" font-size="11">{tick}</text>')
    for idx, (label, values) in enumerate(fig.series):
        color = SERIES_COLORS[idx % len(SERIES_COLORS)]
        dash = "" if idx == 0 else ' stroke-dasharray="7,4"'
        points = " ".join(f"{x_px(i):.2f},{y_px(v):.2f}" for i, v in enumerate(values))
        lines.append(f'<polyline fill="none" stroke="{color}" stroke-width="2.5"{dash} points="{points}"/>')
        ly = plot_t + 16 + idx * 22
        lines.append(
            f'<line x1="{plot_r + 14}" y1="{ly}" x2="{plot_r + 40}" y2="{ly}" stroke="{color}" stroke-width="2.5"{dash}/>'
        )
        lines.append(f'<text x="{plot_r + 46}" y="{ly + 4}" font-size="13">{_escape(label)}</text>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def _render_bars(fig: FigureSpec) -> str:
    labels = [label for label, _ in fig.series]
    values = [vals[0] for _, vals in fig.series]
    y_max = max(max(values), 0.0) or 1.0
    y_min = min(min(values), 0.0)
    lines, y_px, (plot_l, plot_r, plot_t, plot_b) = _frame(fig, y_max, y_min)
    slot = (plot_r - plot_l) / len(values)
    for i, (label, value) in enumerate(zip(labels, values)):
        x = plot_l + slot * i + slot * 0.18
        w = slot * 0.64
        y0, y1 = y_px(max(value, 0.0)), y_px(min(value, 0.0))
        lines.append(
            f'<rect x="{x:.2f}" y="{y0:.2f}" width="{w:.2f}" height="{max(y1 - y0, 0.0):.2f}" '
            f'fill="{SERIES_COLORS[0]}"/>'
        )
        cx = x + w / 2
        lines.append(
            f'<text x="{cx:.2f}" y="{plot_b + 20}" text-anchor="middle" font-size="12">{_escape(label)}</text>'
        )
        lines.append(
            f'<text x="{cx:.2f}" y="{y0 - 6:.2f}" text-anchor="middle" font-size="12">{fmt_stars(value)}</text>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"

"""Static SVG information-plane plots, written by hand (SVG 1.1, no plotting backend)."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape


class TraceParseError(ValueError):
    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.line = line


@dataclass
class AxesConfig:
    x: str = "mi_xz"
    y: str = "mi_yz"
    color: str = "epoch"
    x_label: str = "I(X;Z) [nats]"
    y_label: str = "I(Y;Z) [nats]"
    width: int = 480
    height: int = 400
    margin: float = 0.05
    title: str = ""


def read_points(path, axes: AxesConfig) -> list[tuple[float, float, float]]:
    """``(x, y, color)`` per CSV row; empty cells are skipped."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TraceParseError(path, 1, "empty file") from None
        missing = [c for c in (axes.x, axes.y, axes.color) if c not in header]
        if missing:
            raise TraceParseError(path, 1, f"missing columns {missing}")
        cols = [header.index(c) for c in (axes.x, axes.y, axes.color)]
        points = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise TraceParseError(path, lineno, f"expected {len(header)} fields, got {len(row)}")
            cells = [row[c] for c in cols]
            if any(c == "" for c in cells):
                continue
            try:
                x, y, c = (float(v) for v in cells)
            except ValueError as exc:
                raise TraceParseError(path, lineno, str(exc)) from None
            if not (math.isfinite(x) and math.isfinite(y)):
                raise TraceParseError(path, lineno, "non-finite coordinate")
            points.append((x, y, c))
    return points


def axis_range(values, margin: float) -> tuple[float, float]:
    lo, hi = min(values), max(values)
    span = hi - lo
    if span <= 0:
        span = max(abs(lo), 1.0)
        return lo - margin * span, hi + margin * span
    return lo - margin * span, hi + margin * span


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    out = []
    t = start
    while t <= hi + 1e-12 * step:
        out.append(round(t, 12))
        t += step
    return out


def _color(t: float) -> str:
    # dark blue -> yellow
    a, b = (68, 1, 84), (253, 231, 37)
    rgb = [round(a[i] + (b[i] - a[i]) * t) for i in range(3)]
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def render_svg(points, axes: AxesConfig = AxesConfig()) -> str:
    if not points:
        raise ValueError("nothing to plot")
    points = sorted(points, key=lambda p: p[2])
    w, h = axes.width, axes.height
    left, right, top, bottom = 64, 20, 24, 52
    pw, ph = w - left - right, h - top - bottom
    x0, x1 = axis_range([p[0] for p in points], axes.margin)
    y0, y1 = axis_range([p[1] for p in points], axes.margin)
    c0, c1 = min(p[2] for p in points), max(p[2] for p in points)

    def sx(v):
        return left + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return top + ph - (v - y0) / (y1 - y0) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}" data-x-range="{x0!r} {x1!r}" data-y-range="{y0!r} {y1!r}">',
        f'<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    if axes.title:
        out.append(f'<text x="{w / 2:.1f}" y="16" text-anchor="middle" font-size="13">{escape(axes.title)}</text>')
    for t in _ticks(x0, x1):
        out.append(f'<line x1="{sx(t):.2f}" y1="{top + ph}" x2="{sx(t):.2f}" y2="{top + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{sx(t):.2f}" y="{top + ph + 16}" text-anchor="middle" font-size="10">{t:g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<line x1="{left - 4}" y1="{sy(t):.2f}" x2="{left}" y2="{sy(t):.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 6}" y="{sy(t) + 3:.2f}" text-anchor="end" font-size="10">{t:g}</text>')
    out.append(f'<text class="x-label" x="{left + pw / 2:.1f}" y="{h - 12}" text-anchor="middle" '
               f'font-size="12">{escape(axes.x_label)}</text>')
    out.append(f'<text class="y-label" x="14" y="{top + ph / 2:.1f}" text-anchor="middle" font-size="12" '
               f'transform="rotate(-90 14 {top + ph / 2:.1f})">{escape(axes.y_label)}</text>')
    if len(points) > 1:
        path = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y, _ in points)
        out.append(f'<polyline points="{path}" fill="none" stroke="#999999" stroke-width="1"/>')
    for x, y, c in points:
        t = 0.0 if c1 == c0 else (c - c0) / (c1 - c0)
        out.append(f'<circle class="marker" data-{escape(axes.color)}="{c:g}" data-x="{x!r}" data-y="{y!r}" '
                   f'cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="4" fill="{_color(t)}" stroke="black" stroke-width="0.5"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot_ip(csv_path, svg_path, axes: AxesConfig = AxesConfig()) -> Path:
    svg = render_svg(read_points(csv_path, axes), axes)
    svg_path = Path(svg_path)
    svg_path.parent.mkdir(parents=True, exist_ok=True)
    svg_path.write_text(svg, encoding="utf-8")
    return svg_path

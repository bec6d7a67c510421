"""Minimal static SVG 1.1 plots (polylines, scatter, markers).

Output is byte-deterministic for identical input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 720, 480
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 40, 50
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


@dataclass
class Series:
    x: Sequence[float]
    y: Sequence[Optional[float]]
    label: str = ""
    kind: str = "line"  # line | dashed | scatter
    color: Optional[str] = None


@dataclass
class Figure:
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    series: list[Series] = field(default_factory=list)
    markers: list[tuple[float, float, str]] = field(default_factory=list)

    def add(self, *args, **kwargs) -> "Figure":
        self.series.append(Series(*args, **kwargs))
        return self

    def render(self) -> str:
        return render(self)


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _limits(values):
    vals = [v for v in values if v is not None and math.isfinite(v)]
    if not vals:
        return 0.0, 1.0
    lo, hi = min(vals), max(vals)
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.04 * (hi - lo)
    return lo - pad, hi + pad


def _ticks(lo, hi, n=6):
    step = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(step))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= step), default=step)
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-12 * abs(hi):
        out.append(v)
        v += step
    return out


def render(fig: Figure) -> str:
    xs = [x for s in fig.series for x in s.x] + [m[0] for m in fig.markers]
    ys = [y for s in fig.series for y in s.y] + [m[1] for m in fig.markers]
    x0, x1 = _limits(xs)
    y0, y1 = _limits(ys)
    pw = WIDTH - MARGIN_L - MARGIN_R
    ph = HEIGHT - MARGIN_T - MARGIN_B

    def px(x):
        return MARGIN_L + (x - x0) / (x1 - x0) * pw

    def py(y):
        return MARGIN_T + (y1 - y) / (y1 - y0) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" '
        'fill="none" stroke="black"/>',
    ]
    for t in _ticks(x0, x1):
        out.append(f'<text x="{_fmt(px(t))}" y="{HEIGHT - MARGIN_B + 16}" font-size="11" '
                   f'text-anchor="middle">{t:.4g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<text x="{MARGIN_L - 6}" y="{_fmt(py(t) + 4)}" font-size="11" '
                   f'text-anchor="end">{t:.4g}</text>')
    out.append(f'<text x="{WIDTH / 2:.0f}" y="22" font-size="14" text-anchor="middle">'
               f'{escape(fig.title)}</text>')
    out.append(f'<text x="{MARGIN_L + pw / 2:.0f}" y="{HEIGHT - 10}" font-size="12" '
               f'text-anchor="middle">{escape(fig.xlabel)}</text>')
    out.append(f'<text x="16" y="{MARGIN_T + ph / 2:.0f}" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 16 {MARGIN_T + ph / 2:.0f})">{escape(fig.ylabel)}</text>')

    for i, s in enumerate(fig.series):
        color = s.color or PALETTE[i % len(PALETTE)]
        if s.kind == "scatter":
            for x, y in zip(s.x, s.y):
                if y is not None:
                    out.append(f'<circle cx="{_fmt(px(x))}" cy="{_fmt(py(y))}" r="1.2" '
                               f'fill="{color}"/>')
        else:
            dash = ' stroke-dasharray="6 4"' if s.kind == "dashed" else ""
            run: list[str] = []
            # None values break the polyline
            for x, y in list(zip(s.x, s.y)) + [(None, None)]:
                if y is None or x is None:
                    if len(run) > 1:
                        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5"'
                                   f'{dash} points="{" ".join(run)}"/>')
                    run = []
                else:
                    run.append(f"{_fmt(px(x))},{_fmt(py(y))}")
        if s.label:
            ly = MARGIN_T + 16 + 16 * i
            out.append(f'<text x="{WIDTH - MARGIN_R - 8}" y="{ly}" font-size="11" '
                       f'text-anchor="end" fill="{color}">{escape(s.label)}</text>')
    for x, y, label in fig.markers:
        out.append(f'<circle cx="{_fmt(px(x))}" cy="{_fmt(py(y))}" r="4" fill="none" '
                   'stroke="black" stroke-width="1.5"/>')
        if label:
            out.append(f'<text x="{_fmt(px(x) + 8)}" y="{_fmt(py(y) - 8)}" font-size="11">'
                       f'{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"

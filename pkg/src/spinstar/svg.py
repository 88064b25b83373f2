"""Minimal SVG line and scatter plots.

Plots are drawn from CSV files only, so every figure is a rendering of data
that was written to disk.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from xml.sax.saxutils import escape

_W, _H = 640, 400
_ML, _MR, _MT, _MB = 70, 20, 30, 50
_COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-9 * step:
        out.append(v)
        v += step
    return out


def _span(values) -> tuple[float, float]:
    finite = [v for v in values if math.isfinite(v)]
    if not finite:
        return 0.0, 1.0
    lo, hi = min(finite), max(finite)
    if lo == hi:
        pad = abs(lo) * 0.1 or 1.0
        return lo - pad, hi + pad
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def render(series, xlabel: str, ylabel: str, title: str = "") -> str:
    """SVG text for ``series``: list of (xs, ys, label, style) with style 'line' or 'scatter'."""
    xlo, xhi = _span([x for s in series for x in s[0]])
    ylo, yhi = _span([y for s in series for y in s[1]])
    pw, ph = _W - _ML - _MR, _H - _MT - _MB

    def px(x):
        return _ML + (x - xlo) / (xhi - xlo) * pw

    def py(y):
        return _MT + (1 - (y - ylo) / (yhi - ylo)) * ph

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
             f'font-family="sans-serif" font-size="11">',
             f'<rect x="{_ML}" y="{_MT}" width="{pw}" height="{ph}" fill="none" stroke="#000"/>']
    for t in _ticks(xlo, xhi):
        parts.append(f'<line x1="{px(t):.2f}" y1="{_MT + ph}" x2="{px(t):.2f}" y2="{_MT + ph + 4}" '
                     f'stroke="#000"/><text x="{px(t):.2f}" y="{_MT + ph + 16}" '
                     f'text-anchor="middle">{t:.4g}</text>')
    for t in _ticks(ylo, yhi):
        parts.append(f'<line x1="{_ML - 4}" y1="{py(t):.2f}" x2="{_ML}" y2="{py(t):.2f}" stroke="#000"/>'
                     f'<text x="{_ML - 6}" y="{py(t) + 4:.2f}" text-anchor="end">{t:.4g}</text>')
    parts.append(f'<text x="{_ML + pw / 2}" y="{_H - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    parts.append(f'<text x="15" y="{_MT + ph / 2}" text-anchor="middle" '
                 f'transform="rotate(-90 15 {_MT + ph / 2})">{escape(ylabel)}</text>')
    if title:
        parts.append(f'<text x="{_ML + pw / 2}" y="18" text-anchor="middle">{escape(title)}</text>')
    for i, (xs, ys, label, style) in enumerate(series):
        colour = _COLOURS[i % len(_COLOURS)]
        pts = [(px(x), py(y)) for x, y in zip(xs, ys) if math.isfinite(x) and math.isfinite(y)]
        if style == "scatter":
            parts.extend(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="3" fill="{colour}"/>' for x, y in pts)
        else:
            path = " ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
            parts.append(f'<polyline points="{path}" fill="none" stroke="{colour}" stroke-width="1"/>')
        if label:
            ly = _MT + 14 + 14 * i
            parts.append(f'<text x="{_ML + pw - 6}" y="{ly}" text-anchor="end" fill="{colour}">'
                         f'{escape(label)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def plot_csv(csv_path: str | Path, svg_path: str | Path, x: str, ys, xlabel: str | None = None,
             ylabel: str = "", title: str = "", style: str = "line", scale: dict | None = None) -> None:
    """Render columns ``ys`` against column ``x`` of a CSV file.

    ``scale`` multiplies named columns before plotting (unit changes only).
    """
    with open(csv_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    cols = {name: [float(r[name]) for r in rows] for name in [x, *ys]}
    scale = scale or {}
    xs = [v * scale.get(x, 1.0) for v in cols[x]]
    series = [(xs, [v * scale.get(y, 1.0) for v in cols[y]], y if len(ys) > 1 else "", style)
              for y in ys]
    Path(svg_path).write_text(render(series, xlabel or x, ylabel, title))

"""Minimal self-contained SVG line and step charts.

Output is a pure function of the inputs (fixed number formatting, no
timestamps or random ids), so plots are byte-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def _f(x: float) -> str:
    return f"{x:.2f}".rstrip("0").rstrip(".")


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 2.5, 5, 10) if s * mag >= raw), default=10 * mag)
    start = step * math.ceil(lo / step - 1e-9)
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 10))
        t += step
    return ticks


@dataclass
class Series:
    label: str
    x: list[float]
    y: list[float]
    step: bool = False
    markers: bool = False
    annotations: list[tuple[float, str]] = field(default_factory=list)


@dataclass
class Panel:
    title: str
    xlabel: str
    ylabel: str
    series: list[Series]
    xlim: tuple[float, float] | None = None
    ylim: tuple[float, float] | None = None
    hline: float | None = None
    note: str = ""


def _panel_svg(panel: Panel, ox: float, oy: float, w: float, h: float, out: list[str]) -> None:
    left, right, top, bottom = 60, 20, 30, 50
    pw, ph = w - left - right, h - top - bottom
    xs = [v for s in panel.series for v in s.x]
    ys = [v for s in panel.series for v in s.y]
    x0, x1 = panel.xlim or ((min(xs), max(xs)) if xs else (0.0, 1.0))
    y0, y1 = panel.ylim or ((min(ys), max(ys)) if ys else (0.0, 1.0))
    if x1 <= x0:
        x1 = x0 + 1.0
    if y1 <= y0:
        y1 = y0 + 1.0

    def px(x):
        return ox + left + (x - x0) / (x1 - x0) * pw

    def py(y):
        return oy + top + (1 - (y - y0) / (y1 - y0)) * ph

    out.append(f'<text x="{_f(ox + w / 2)}" y="{_f(oy + 18)}" text-anchor="middle" '
               f'font-size="14" font-weight="bold">{escape(panel.title)}</text>')
    out.append(f'<rect x="{_f(ox + left)}" y="{_f(oy + top)}" width="{_f(pw)}" height="{_f(ph)}" '
               f'fill="none" stroke="#333"/>')
    for t in _nice_ticks(x0, x1):
        if x0 - 1e-12 <= t <= x1 + 1e-12:
            X = px(t)
            out.append(f'<line x1="{_f(X)}" y1="{_f(oy + top + ph)}" x2="{_f(X)}" '
                       f'y2="{_f(oy + top + ph + 5)}" stroke="#333"/>')
            out.append(f'<text x="{_f(X)}" y="{_f(oy + top + ph + 18)}" text-anchor="middle" '
                       f'font-size="10">{t:g}</text>')
    for t in _nice_ticks(y0, y1):
        if y0 - 1e-12 <= t <= y1 + 1e-12:
            Y = py(t)
            out.append(f'<line x1="{_f(ox + left - 5)}" y1="{_f(Y)}" x2="{_f(ox + left)}" '
                       f'y2="{_f(Y)}" stroke="#333"/>')
            out.append(f'<text x="{_f(ox + left - 8)}" y="{_f(Y + 3)}" text-anchor="end" '
                       f'font-size="10">{t:g}</text>')
    out.append(f'<text x="{_f(ox + left + pw / 2)}" y="{_f(oy + h - 12)}" text-anchor="middle" '
               f'font-size="11">{escape(panel.xlabel)}</text>')
    cy = oy + top + ph / 2
    out.append(f'<text x="{_f(ox + 14)}" y="{_f(cy)}" text-anchor="middle" font-size="11" '
               f'transform="rotate(-90 {_f(ox + 14)} {_f(cy)})">{escape(panel.ylabel)}</text>')
    if panel.hline is not None and y0 <= panel.hline <= y1:
        Y = py(panel.hline)
        out.append(f'<line x1="{_f(ox + left)}" y1="{_f(Y)}" x2="{_f(ox + left + pw)}" y2="{_f(Y)}" '
                   f'stroke="#999" stroke-dasharray="4 3"/>')

    for i, s in enumerate(panel.series):
        color = PALETTE[i % len(PALETTE)]
        pts = []
        for j, (x, y) in enumerate(zip(s.x, s.y)):
            if s.step and j:
                pts.append((px(x), py(s.y[j - 1])))
            pts.append((px(x), py(y)))
        if pts:
            d = " ".join(f"{_f(a)},{_f(b)}" for a, b in pts)
            out.append(f'<polyline points="{d}" fill="none" stroke="{color}" stroke-width="1.8"/>')
        if s.markers:
            for x, y in zip(s.x, s.y):
                out.append(f'<circle cx="{_f(px(x))}" cy="{_f(py(y))}" r="3" fill="{color}"/>')
        for x, text in s.annotations:
            out.append(f'<text x="{_f(px(x))}" y="{_f(oy + top + ph + 30 + 10 * i)}" text-anchor="middle" '
                       f'font-size="9" fill="{color}">{escape(text)}</text>')
        ly = oy + top + 14 + 14 * i
        lx = ox + left + pw - 150
        out.append(f'<line x1="{_f(lx)}" y1="{_f(ly - 4)}" x2="{_f(lx + 18)}" y2="{_f(ly - 4)}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{_f(lx + 22)}" y="{_f(ly)}" font-size="10">{escape(s.label)}</text>')
    if panel.note:
        out.append(f'<text x="{_f(ox + left + 6)}" y="{_f(oy + top + ph - 8)}" font-size="10" '
                   f'fill="#444">{escape(panel.note)}</text>')


def render(panels: list[Panel], width: float = 520, height: float = 380) -> str:
    """Lay ``panels`` out side by side in one SVG document."""
    total_w = width * len(panels)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(total_w)}" height="{_f(height)}" '
        f'viewBox="0 0 {_f(total_w)} {_f(height)}" font-family="sans-serif">',
        f'<rect width="{_f(total_w)}" height="{_f(height)}" fill="white"/>',
    ]
    for i, panel in enumerate(panels):
        _panel_svg(panel, i * width, 0, width, height, out)
    out.append("</svg>")
    return "\n".join(out) + "\n"

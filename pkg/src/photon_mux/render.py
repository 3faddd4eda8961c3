"""Minimal SVG emitters: line charts and heatmaps with marked contour levels.

Output is plain text built from fixed-precision numbers, so identical data
always gives byte-identical files.
"""
from __future__ import annotations

import math
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#7f7f7f")
# viridis anchors
_CMAP = np.array(
    [
        [68, 1, 84],
        [59, 82, 139],
        [33, 145, 140],
        [94, 201, 98],
        [253, 231, 37],
    ],
    dtype=float,
)

W, H = 520, 400
MARGIN = dict(left=70, right=20, top=40, bottom=55)


def _n(x: float) -> str:
    return f"{x:.2f}"


def _color(t: float) -> str:
    t = min(max(t, 0.0), 1.0) * (len(_CMAP) - 1)
    i = min(int(t), len(_CMAP) - 2)
    rgb = _CMAP[i] + (t - i) * (_CMAP[i + 1] - _CMAP[i])
    return "#%02x%02x%02x" % tuple(int(round(c)) for c in rgb)


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    step = 10 ** math.floor(math.log10(raw))
    for mult in (1, 2, 5, 10):
        if raw <= mult * step:
            step *= mult
            break
    start = math.ceil(lo / step - 1e-9) * step
    out = []
    x = start
    while x <= hi + 1e-9 * step:
        out.append(round(x, 12))
        x += step
    return out


def _tick_label(x: float) -> str:
    return f"{x:g}"


class _Frame:
    def __init__(self, x0, y0, w, h, xlim, ylim, log_x=False):
        self.x0, self.y0, self.w, self.h = x0, y0, w, h
        self.log_x = log_x
        self.xlim = tuple(math.log10(v) for v in xlim) if log_x else xlim
        self.ylim = ylim

    def px(self, x):
        if self.log_x:
            x = math.log10(x)
        lo, hi = self.xlim
        return self.x0 + (x - lo) / (hi - lo or 1.0) * self.w

    def py(self, y):
        lo, hi = self.ylim
        return self.y0 + self.h - (y - lo) / (hi - lo or 1.0) * self.h

    def axes(self, xlabel, ylabel, title, xticks, yticks):
        out = [
            f'<rect x="{_n(self.x0)}" y="{_n(self.y0)}" width="{_n(self.w)}" height="{_n(self.h)}" '
            'fill="none" stroke="#000"/>'
        ]
        for t in xticks:
            x = self.px(t)
            yb = self.y0 + self.h
            out.append(f'<line x1="{_n(x)}" y1="{_n(yb)}" x2="{_n(x)}" y2="{_n(yb + 5)}" stroke="#000"/>')
            out.append(
                f'<text x="{_n(x)}" y="{_n(yb + 18)}" font-size="11" text-anchor="middle">{_tick_label(t)}</text>'
            )
        for t in yticks:
            y = self.py(t)
            out.append(f'<line x1="{_n(self.x0 - 5)}" y1="{_n(y)}" x2="{_n(self.x0)}" y2="{_n(y)}" stroke="#000"/>')
            out.append(
                f'<text x="{_n(self.x0 - 8)}" y="{_n(y + 4)}" font-size="11" text-anchor="end">{_tick_label(t)}</text>'
            )
        cx = self.x0 + self.w / 2
        out.append(
            f'<text x="{_n(cx)}" y="{_n(self.y0 + self.h + 40)}" font-size="13" text-anchor="middle">{escape(xlabel)}</text>'
        )
        cy = self.y0 + self.h / 2
        out.append(
            f'<text x="{_n(self.x0 - 50)}" y="{_n(cy)}" font-size="13" text-anchor="middle" '
            f'transform="rotate(-90 {_n(self.x0 - 50)} {_n(cy)})">{escape(ylabel)}</text>'
        )
        out.append(f'<text x="{_n(cx)}" y="{_n(self.y0 - 12)}" font-size="14" text-anchor="middle">{escape(title)}</text>')
        return out


def _document(width, height, body) -> str:
    head = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif">\n'
        f'<rect width="{width}" height="{height}" fill="#fff"/>\n'
    )
    return head + "\n".join(body) + "\n</svg>\n"


def line_chart(
    series: Sequence[tuple[str, Sequence[float], Sequence[float]]],
    xlabel: str,
    ylabel: str,
    title: str,
    log_x: bool = False,
    hline: tuple[str, float] | None = None,
) -> str:
    """``series`` is a list of ``(label, xs, ys)``; ``hline`` an optional labelled reference level."""
    xs = [x for _, sx, _ in series for x in sx]
    ys = [y for _, _, sy in series for y in sy]
    if hline:
        ys.append(hline[1])
    xlim = (min(xs), max(xs))
    pad = 0.05 * (max(ys) - min(ys) or 1.0)
    ylim = (min(ys) - pad, max(ys) + pad)
    fr = _Frame(MARGIN["left"], MARGIN["top"], W - MARGIN["left"] - MARGIN["right"],
                H - MARGIN["top"] - MARGIN["bottom"], xlim, ylim, log_x)
    if log_x:
        xticks = [10.0 ** e for e in range(math.ceil(math.log10(xlim[0])), math.floor(math.log10(xlim[1])) + 1)]
    else:
        xticks = _ticks(*xlim)
    body = fr.axes(xlabel, ylabel, title, xticks, [t for t in _ticks(*ylim) if ylim[0] <= t <= ylim[1]])
    if hline:
        y = fr.py(hline[1])
        body.append(
            f'<line x1="{_n(fr.x0)}" y1="{_n(y)}" x2="{_n(fr.x0 + fr.w)}" y2="{_n(y)}" '
            'stroke="#444" stroke-dasharray="5,4"/>'
        )
        body.append(f'<text x="{_n(fr.x0 + fr.w - 4)}" y="{_n(y - 4)}" font-size="10" text-anchor="end">{escape(hline[0])}</text>')
    for idx, (label, sx, sy) in enumerate(series):
        color = PALETTE[idx % len(PALETTE)]
        pts = " ".join(f"{_n(fr.px(x))},{_n(fr.py(y))}" for x, y in zip(sx, sy))
        body.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.6"/>')
        ly = fr.y0 + 14 + 15 * idx
        body.append(f'<line x1="{_n(fr.x0 + 10)}" y1="{_n(ly - 4)}" x2="{_n(fr.x0 + 28)}" y2="{_n(ly - 4)}" stroke="{color}" stroke-width="2"/>')
        body.append(f'<text x="{_n(fr.x0 + 32)}" y="{_n(ly)}" font-size="11">{escape(label)}</text>')
    return _document(W, H, body)


def _contour_edges(values: np.ndarray, level: float):
    """Cell-boundary segments separating cells below ``level`` from cells at or above it.

    Yields ``(i0, j0, i1, j1)`` in corner coordinates of the cell lattice.
    """
    above = values >= level
    nx, ny = values.shape
    for i in range(nx - 1):
        for j in range(ny):
            if above[i, j] != above[i + 1, j]:
                yield (i + 1, j, i + 1, j + 1)
    for i in range(nx):
        for j in range(ny - 1):
            if above[i, j] != above[i, j + 1]:
                yield (i, j + 1, i + 1, j + 1)


def _heatmap_panel(x0, y0, values, x_axis, y_axis, levels, title, xlabel, ylabel, vmin, vmax):
    """``values[i, j]`` sits at ``x_axis[i]``, ``y_axis[j]``."""
    values = np.asarray(values, dtype=float)
    nx, ny = values.shape
    pw, ph = 300.0, 300.0
    fr = _Frame(x0, y0, pw, ph, (x_axis[0], x_axis[-1]), (y_axis[0], y_axis[-1]))
    cw, ch = pw / nx, ph / ny
    body = []
    span = (vmax - vmin) or 1.0
    for i in range(nx):
        for j in range(ny):
            color = _color((values[i, j] - vmin) / span)
            body.append(
                f'<rect x="{_n(x0 + i * cw)}" y="{_n(y0 + ph - (j + 1) * ch)}" width="{_n(cw + 0.3)}" '
                f'height="{_n(ch + 0.3)}" fill="{color}"/>'
            )
    for level in levels:
        segs = list(_contour_edges(values, level))
        if not segs:
            continue
        d = " ".join(
            f"M{_n(x0 + a * cw)} {_n(y0 + ph - b * ch)}L{_n(x0 + c * cw)} {_n(y0 + ph - e * ch)}"
            for a, b, c, e in segs
        )
        body.append(f'<path d="{d}" fill="none" stroke="#fff" stroke-width="1"><title>{level:g}</title></path>')
    body += fr.axes(xlabel, ylabel, title, _ticks(x_axis[0], x_axis[-1]), _ticks(y_axis[0], y_axis[-1]))
    return body


def heatmaps(
    panels: Sequence[dict],
    xlabel: str,
    ylabel: str,
    levels: Sequence[float],
    colorbar_label: str = "",
) -> str:
    """Side-by-side heatmaps sharing one colour scale.

    Each panel dict holds ``values``, ``x_axis``, ``y_axis`` and ``title``;
    optional ``lines`` is a list of ``(xs, ys)`` polylines in data coordinates.
    """
    vmin = min(float(np.min(p["values"])) for p in panels)
    vmax = max(float(np.max(p["values"])) for p in panels)
    body = []
    width = 80 + 380 * len(panels) + 90
    for k, p in enumerate(panels):
        x0, y0 = 80 + 380 * k, 45
        body += _heatmap_panel(x0, y0, p["values"], p["x_axis"], p["y_axis"], levels, p["title"],
                               xlabel, ylabel, vmin, vmax)
        fr = _Frame(x0, y0, 300.0, 300.0, (p["x_axis"][0], p["x_axis"][-1]), (p["y_axis"][0], p["y_axis"][-1]))
        for xs, ys in p.get("lines", ()):
            pts = " ".join(f"{_n(fr.px(x))},{_n(fr.py(y))}" for x, y in zip(xs, ys))
            body.append(f'<polyline points="{pts}" fill="none" stroke="#1f77b4" stroke-width="2"/>')
        for x, y in p.get("markers", ()):
            body.append(f'<circle cx="{_n(fr.px(x))}" cy="{_n(fr.py(y))}" r="4" fill="#d62728"/>')
    # colour bar
    bx = width - 70
    for s in range(50):
        t = s / 49
        body.append(f'<rect x="{bx}" y="{_n(345 - (s + 1) * 6)}" width="16" height="6.3" fill="{_color(t)}"/>')
    body.append(f'<text x="{bx + 20}" y="349" font-size="10">{vmin:.3g}</text>')
    body.append(f'<text x="{bx + 20}" y="49" font-size="10">{vmax:.3g}</text>')
    if colorbar_label:
        body.append(f'<text x="{bx}" y="30" font-size="11">{escape(colorbar_label)}</text>')
    return _document(width, 420, body)

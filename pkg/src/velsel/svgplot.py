"""Minimal SVG line charts: theory curves plus data points with error bars.

Geometry is emitted directly, with fixed number formatting, so the same
data always produce the same file.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 440
MARGIN = dict(left=80, right=20, top=40, bottom=60)
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


@dataclass
class Series:
    x: np.ndarray
    y: np.ndarray
    label: str
    yerr: np.ndarray | None = None
    style: str = "line"  # "line" or "points"
    color: str | None = None
    extra: dict = field(default_factory=dict)


def _f(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, log: bool) -> list[float]:
    if log:
        a, b = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
        ticks = []
        for e in range(a, b + 1):
            for m in (1, 2, 5):
                t = m * 10.0 ** e
                if lo <= t <= hi:
                    ticks.append(t)
        return ticks
    span = hi - lo
    step = 10 ** math.floor(math.log10(span / 5)) if span > 0 else 1.0
    for m in (1, 2, 5, 10):
        if span / (m * step) <= 6:
            step *= m
            break
    start = math.ceil(lo / step) * step
    return [start + i * step for i in range(int((hi - start) / step + 1e-9) + 1)]


def _fmt_tick(t: float) -> str:
    return f"{t:g}"


def line_plot(path, series: list[Series], xlabel: str, ylabel: str, title: str = "",
              logx: bool = False, logy: bool = False) -> None:
    """Write an SVG chart of ``series`` to ``path``. Non-finite and (on log
    axes) non-positive values are skipped."""
    if not series:
        raise ValueError("nothing to plot")
    xs, ys = [], []
    for s in series:
        x, y = np.asarray(s.x, float), np.asarray(s.y, float)
        err = np.zeros_like(y) if s.yerr is None else np.asarray(s.yerr, float)
        xs.append(x)
        ys.extend([y - err, y + err])
    xall = np.concatenate(xs)
    yall = np.concatenate(ys)

    def usable(v, log):
        v = v[np.isfinite(v)]
        return v[v > 0] if log else v

    xv, yv = usable(xall, logx), usable(yall, logy)
    if xv.size == 0 or yv.size == 0:
        raise ValueError("no finite data to plot")
    x0, x1 = float(xv.min()), float(xv.max())
    y0, y1 = float(yv.min()), float(yv.max())
    if not logy:
        y0 = min(y0, 0.0)
    if x1 == x0:
        x0, x1 = (x0 / 2, x0 * 2) if logx else (x0 - 1, x0 + 1)
    if y1 == y0:
        y0, y1 = (y0 / 2, y0 * 2) if logy else (y0 - 1, y0 + 1)
    if logy:
        y0, y1 = y0 / 1.2, y1 * 1.2
    else:
        pad = 0.05 * (y1 - y0)
        y0, y1 = y0 - (pad if y0 < 0 else 0.0), y1 + pad

    L, R, T, B = MARGIN["left"], WIDTH - MARGIN["right"], MARGIN["top"], HEIGHT - MARGIN["bottom"]

    def tx(v):
        a, b, u = (math.log10(x0), math.log10(x1), math.log10(v)) if logx else (x0, x1, v)
        return L + (u - a) / (b - a) * (R - L)

    def ty(v):
        a, b, u = (math.log10(y0), math.log10(y1), math.log10(v)) if logy else (y0, y1, v)
        return B - (u - a) / (b - a) * (B - T)

    def ok(xv, yv):
        return (math.isfinite(xv) and math.isfinite(yv)
                and (xv > 0 or not logx) and (yv > 0 or not logy))

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
           f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<rect x="{L}" y="{T}" width="{R - L}" height="{B - T}" fill="none" stroke="black"/>']
    for t in _ticks(x0, x1, logx):
        p = _f(tx(t))
        out.append(f'<line x1="{p}" y1="{B}" x2="{p}" y2="{B + 5}" stroke="black"/>')
        out.append(f'<text x="{p}" y="{B + 18}" text-anchor="middle">{_fmt_tick(t)}</text>')
    for t in _ticks(y0, y1, logy):
        p = _f(ty(t))
        out.append(f'<line x1="{L - 5}" y1="{p}" x2="{L}" y2="{p}" stroke="black"/>')
        out.append(f'<text x="{L - 8}" y="{p}" text-anchor="end" dominant-baseline="middle">'
                   f'{_fmt_tick(t)}</text>')
    out.append(f'<text x="{(L + R) / 2:.1f}" y="{HEIGHT - 15}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="18" y="{(T + B) / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {(T + B) / 2:.1f})">{escape(ylabel)}</text>')
    if title:
        out.append(f'<text x="{(L + R) / 2:.1f}" y="22" text-anchor="middle" font-size="14">'
                   f'{escape(title)}</text>')

    for k, s in enumerate(series):
        color = s.color or PALETTE[k % len(PALETTE)]
        x, y = np.asarray(s.x, float), np.asarray(s.y, float)
        err = None if s.yerr is None else np.asarray(s.yerr, float)
        if s.style == "line":
            pts = [f"{_f(tx(a))},{_f(ty(b))}" for a, b in zip(x, y) if ok(a, b)]
            if len(pts) >= 2:
                out.append(f'<polyline points="{" ".join(pts)}" fill="none" stroke="{color}" '
                           f'stroke-width="1.5"/>')
        else:
            for i, (a, b) in enumerate(zip(x, y)):
                if not ok(a, b):
                    continue
                cx, cy = _f(tx(a)), _f(ty(b))
                if err is not None and math.isfinite(err[i]) and err[i] > 0:
                    lo, hi = b - err[i], b + err[i]
                    ylo = ty(lo) if ok(a, lo) else B
                    out.append(f'<line x1="{cx}" y1="{_f(ylo)}" x2="{cx}" y2="{_f(ty(hi))}" '
                               f'stroke="{color}"/>')
                out.append(f'<circle cx="{cx}" cy="{cy}" r="3" fill="{color}"/>')
        ly = T + 16 + 16 * k
        out.append(f'<rect x="{L + 10}" y="{ly - 8}" width="10" height="10" fill="{color}"/>')
        out.append(f'<text x="{L + 26}" y="{ly + 1}">{escape(s.label)}</text>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")

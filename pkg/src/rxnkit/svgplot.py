"""Minimal SVG line plots: axes with ticks, optional log time axis, legend."""

from __future__ import annotations

import math
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["line_plot"]

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    return [start + i * step for i in range(int((hi - start) / step + 1e-9) + 1)]


def _label(v: float) -> str:
    return f"{v:.4g}"


def line_plot(
    x,
    ys: Sequence,
    labels: Sequence[str],
    xlabel: str = "t",
    ylabel: str = "",
    title: str = "",
    logx: bool = False,
    width: int = 640,
    height: int = 400,
    step: bool = False,
    markers: Sequence[tuple] = (),
) -> str:
    """SVG document plotting each series in ``ys`` against ``x``.

    With ``logx`` nonpositive abscissae are dropped.  ``step`` draws
    piecewise-constant paths (for jump processes).  ``markers`` holds
    ``(x, y, label)`` point sets drawn as circles on the same axes.
    """
    x = np.asarray(x, dtype=float)
    ys = [np.asarray(y, dtype=float) for y in ys]
    keep = np.isfinite(x) & (x > 0 if logx else True)
    x = x[keep]
    ys = [y[keep] for y in ys]
    marks = []
    for mx, my, mlab in markers:
        mx, my = np.asarray(mx, dtype=float), np.asarray(my, dtype=float)
        ok = np.isfinite(mx) & np.isfinite(my) & (mx > 0 if logx else True)
        marks.append((mx[ok], my[ok], mlab))
    labels = list(labels) + [m[2] for m in marks]
    left, right, top, bottom = 70, 20 + 120 * bool(labels), 30 if title else 15, 45
    pw, ph = width - left - right, height - top - bottom

    tx = np.log10(x) if logx else x
    allx = np.concatenate([tx] + [np.log10(m[0]) if logx else m[0] for m in marks])
    xmin, xmax = (float(allx.min()), float(allx.max())) if allx.size else (0.0, 1.0)
    if xmax == xmin:
        xmax = xmin + 1.0
    finite = np.concatenate([y[np.isfinite(y)] for y in ys] + [m[1] for m in marks] + [np.zeros(0)])
    ymin, ymax = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    if ymax == ymin:
        ymin, ymax = ymin - 0.5, ymax + 0.5
    pad = 0.05 * (ymax - ymin)
    ymin, ymax = ymin - pad, ymax + pad

    def sx(v):
        return left + (v - xmin) / (xmax - xmin) * pw

    def sy(v):
        return top + (ymax - v) / (ymax - ymin) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
           f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    if title:
        out.append(f'<text x="{left + pw / 2}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>')
    if logx:
        xt = [float(e) for e in range(math.ceil(xmin), math.floor(xmax) + 1)] or [xmin]
        xtl = [f"1e{int(e)}" if e == int(e) else _label(10 ** e) for e in xt]
    else:
        xt = _nice_ticks(xmin, xmax)
        xtl = [_label(v) for v in xt]
    for v, lab in zip(xt, xtl):
        px = sx(v)
        out.append(f'<line x1="{px:.2f}" y1="{top + ph}" x2="{px:.2f}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{px:.2f}" y="{top + ph + 18}" text-anchor="middle">{lab}</text>')
    for v in _nice_ticks(ymin, ymax):
        py = sy(v)
        out.append(f'<line x1="{left - 5}" y1="{py:.2f}" x2="{left}" y2="{py:.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{py + 4:.2f}" text-anchor="end">{_label(v)}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{height - 8}" text-anchor="middle">'
               f'{escape(xlabel + (" (log scale)" if logx else ""))}</text>')
    if ylabel:
        out.append(f'<text x="15" y="{top + ph / 2}" text-anchor="middle" '
                   f'transform="rotate(-90 15 {top + ph / 2})">{escape(ylabel)}</text>')
    for i, y in enumerate(ys):
        color = _COLORS[i % len(_COLORS)]
        pts = []
        prev = None
        for a, b in zip(tx, y):
            if not math.isfinite(b):
                prev = None
                continue
            if step and prev is not None:
                pts.append(f"{sx(a):.2f},{sy(prev):.2f}")
            pts.append(f"{sx(a):.2f},{sy(b):.2f}")
            prev = b
        if pts:
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{" ".join(pts)}"/>')
    for i, (mx, my, _) in enumerate(marks):
        color = _COLORS[(len(ys) + i) % len(_COLORS)]
        for a, b in zip(np.log10(mx) if logx else mx, my):
            out.append(f'<circle cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="2.5" fill="{color}"/>')
    for i, lab in enumerate(labels):
        color = _COLORS[i % len(_COLORS)]
        ly = top + 10 + 16 * i
        lx = left + pw + 10
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 25}" y="{ly + 4}">{escape(str(lab))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"

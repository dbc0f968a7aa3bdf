"""Minimal SVG line charts (no plotting dependency)."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
           "#bcbd22", "#17becf")


def _ticks(lo, hi, n=5):
    if hi <= lo:
        hi = lo + 1.0
    return np.linspace(lo, hi, n)


def line_chart(series, title="", xlabel="", ylabel="", width=640, height=400, ylim=None):
    """Render ``series`` as an SVG string.

    Each series is a dict with ``x``, ``y``, ``label`` and optional
    ``dashed`` (bool) and ``color``.
    """
    ml, mr, mt, mb = 60, 150, 36, 48
    pw, ph = width - ml - mr, height - mt - mb
    xs = np.concatenate([np.asarray(s["x"], dtype=float) for s in series]) if series else np.zeros(1)
    ys = np.concatenate([np.asarray(s["y"], dtype=float) for s in series]) if series else np.zeros(1)
    x0, x1 = float(np.nanmin(xs)), float(np.nanmax(xs))
    y0, y1 = ylim if ylim else (min(0.0, float(np.nanmin(ys))), float(np.nanmax(ys)))
    if x1 <= x0:
        x1 = x0 + 1.0
    if y1 <= y0:
        y1 = y0 + 1.0

    def px(x):
        return ml + (x - x0) / (x1 - x0) * pw

    def py(y):
        return mt + ph - (y - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="11">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="13">{escape(title)}</text>',
           f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for t in _ticks(x0, x1):
        out.append(f'<line x1="{px(t):.1f}" y1="{mt + ph}" x2="{px(t):.1f}" y2="{mt + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{px(t):.1f}" y="{mt + ph + 16}" text-anchor="middle">{t:.3g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<line x1="{ml - 4}" y1="{py(t):.1f}" x2="{ml}" y2="{py(t):.1f}" stroke="black"/>')
        out.append(f'<text x="{ml - 6}" y="{py(t) + 4:.1f}" text-anchor="end">{t:.3g}</text>')
    out.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 10}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="14" y="{mt + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 14 {mt + ph / 2:.1f})">{escape(ylabel)}</text>')
    for k, s in enumerate(series):
        color = s.get("color", PALETTE[k % len(PALETTE)])
        pts = " ".join(f"{px(x):.1f},{py(y):.1f}" for x, y in zip(s["x"], s["y"]) if np.isfinite(y))
        dash = ' stroke-dasharray="6,4"' if s.get("dashed") else ""
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.6"{dash}/>')
        ly = mt + 14 * k + 8
        out.append(f'<line x1="{ml + pw + 10}" y1="{ly}" x2="{ml + pw + 30}" y2="{ly}" stroke="{color}" '
                   f'stroke-width="1.6"{dash}/>')
        out.append(f'<text x="{ml + pw + 34}" y="{ly + 4}">{escape(str(s.get("label", "")))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def save_line_chart(path, series, **kw):
    with open(path, "w") as fh:
        fh.write(line_chart(series, **kw))
    return path

"""Minimal deterministic SVG line charts for trajectories and recovery reports."""

from xml.sax.saxutils import escape

import numpy as np

from .exceptions import InvalidInput

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf")


def _ticks(lo, hi, n=5):
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def _fmt(x):
    return f"{x:.4g}"


def line_chart(x, series, x_label="", y_label="", title="", width=640, height=400):
    """SVG text with one ``<polyline>`` per entry of ``series`` (name -> y values)."""
    x = np.asarray(x, dtype=float)
    if not series:
        raise InvalidInput("nothing to plot")
    ys = {name: np.asarray(v, dtype=float) for name, v in series.items()}
    for name, y in ys.items():
        if y.shape != x.shape:
            raise InvalidInput(f"series {name!r} has {y.size} values, x has {x.size}")
    all_y = np.concatenate(list(ys.values()))
    finite = np.isfinite(all_y)
    if not finite.any() or not np.isfinite(x).all():
        raise InvalidInput("no finite values to plot")
    x0, x1 = float(x.min()), float(x.max())
    y0, y1 = float(all_y[finite].min()), float(all_y[finite].max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    left, right, top, bottom = 70, 20, 40, 50
    pw, ph = width - left - right, height - top - bottom

    def sx(v):
        return left + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return top + (1 - (v - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
    ]
    if title:
        out.append(f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>')
    for v in _ticks(x0, x1):
        out.append(f'<text x="{sx(v):.2f}" y="{top + ph + 18}" text-anchor="middle">{_fmt(v)}</text>')
    for v in _ticks(y0, y1):
        out.append(f'<text x="{left - 6}" y="{sy(v) + 4:.2f}" text-anchor="end">{_fmt(v)}</text>')
    if x_label:
        out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 10}" text-anchor="middle">{escape(x_label)}</text>')
    if y_label:
        out.append(f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" '
                   f'transform="rotate(-90 16 {top + ph / 2:.1f})">{escape(y_label)}</text>')
    for i, (name, y) in enumerate(ys.items()):
        color = PALETTE[i % len(PALETTE)]
        ok = np.isfinite(y)
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x[ok], y[ok]))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}">'
                   f"<title>{escape(name)}</title></polyline>")
        ly = top + 14 + 16 * i
        out.append(f'<line x1="{left + pw - 110}" y1="{ly - 4}" x2="{left + pw - 90}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw - 85}" y="{ly}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"

"""Minimal log-log SVG line plots.

The plot area maps ``log10`` data coordinates linearly onto pixels; the axis
ranges are stored in the ``<metadata>`` element so the curves can be read
back with :func:`read_polylines`.
"""

from __future__ import annotations

import json
import math
import xml.etree.ElementTree as ET
from typing import Sequence
from xml.sax.saxutils import escape, quoteattr

SVG_NS = "http://www.w3.org/2000/svg"
PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")

WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 150, 20, 50


def _bounds(values):
    vals = [v for v in values if v > 0 and math.isfinite(v)]
    if not vals:
        return 0.0, 1.0
    lo, hi = math.log10(min(vals)), math.log10(max(vals))
    if hi - lo < 1e-9:
        lo, hi = lo - 0.5, hi + 0.5
    return lo, hi


def loglog_svg(
    curves: Sequence[tuple[str, Sequence[float], Sequence[float]]],
    markers: Sequence[tuple[float, float]] = (),
    title: str = "",
    xlabel: str = "compute",
    ylabel: str = "error",
) -> str:
    """Render ``(name, xs, ys)`` curves and cross markers on log-log axes.

    Nonpositive points are dropped since they have no place on a log axis.
    """
    xs_all = [x for _, xs, _ in curves for x in xs] + [m[0] for m in markers]
    ys_all = [y for _, _, ys in curves for y in ys] + [m[1] for m in markers]
    lx0, lx1 = _bounds(xs_all)
    ly0, ly1 = _bounds(ys_all)
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def px(x):
        return LEFT + (math.log10(x) - lx0) / (lx1 - lx0) * pw

    def py(y):
        return TOP + ph - (math.log10(y) - ly0) / (ly1 - ly0) * ph

    meta = json.dumps({"log10_x": [lx0, lx1], "log10_y": [ly0, ly1], "plot": [LEFT, TOP, pw, ph]})
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="{SVG_NS}" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f"<metadata>{escape(meta)}</metadata>",
        f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#000"/>',
    ]
    if title:
        out.append(f'<title>{escape(title)}</title>')
    for k in range(math.ceil(lx0), math.floor(lx1) + 1):
        x = LEFT + (k - lx0) / (lx1 - lx0) * pw
        out.append(f'<line x1="{x:.2f}" y1="{TOP + ph}" x2="{x:.2f}" y2="{TOP + ph + 5}" stroke="#000"/>')
        out.append(f'<text x="{x:.2f}" y="{TOP + ph + 18}" font-size="11" text-anchor="middle">1e{k}</text>')
    ticks = [v for v in (0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 1, 2, 3, 5, 10, 20, 50) if ly0 <= math.log10(v) <= ly1]
    for v in ticks:
        y = py(v)
        out.append(f'<line x1="{LEFT - 5}" y1="{y:.2f}" x2="{LEFT}" y2="{y:.2f}" stroke="#000"/>')
        out.append(f'<text x="{LEFT - 8}" y="{y + 4:.2f}" font-size="11" text-anchor="end">{v:g}</text>')
    out.append(f'<text x="{LEFT + pw / 2}" y="{HEIGHT - 10}" font-size="12" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="15" y="{TOP + ph / 2}" font-size="12" text-anchor="middle" '
        f'transform="rotate(-90 15 {TOP + ph / 2})">{escape(ylabel)}</text>'
    )
    for i, (name, xs, ys) in enumerate(curves):
        color = PALETTE[i % len(PALETTE)]
        pts = [(px(x), py(y)) for x, y in zip(xs, ys) if x > 0 and y > 0]
        if not pts:
            continue
        coords = " ".join(f"{x:.4f},{y:.4f}" for x, y in pts)
        out.append(
            f'<polyline data-name={quoteattr(name)} points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        ly = TOP + 14 * (i + 1)
        out.append(f'<line x1="{WIDTH - RIGHT + 10}" y1="{ly}" x2="{WIDTH - RIGHT + 30}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{WIDTH - RIGHT + 34}" y="{ly + 4}" font-size="11">{escape(name)}</text>')
    for x, y in markers:
        if x > 0 and y > 0:
            cx, cy = px(x), py(y)
            out.append(
                f'<path class="marker" d="M{cx - 4:.4f},{cy - 4:.4f} L{cx + 4:.4f},{cy + 4:.4f} '
                f'M{cx - 4:.4f},{cy + 4:.4f} L{cx + 4:.4f},{cy - 4:.4f}" stroke="#000" stroke-width="1.5"/>'
            )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def read_polylines(svg_text: str) -> dict[str, list[tuple[float, float]]]:
    """Recover data coordinates of every curve in an SVG made by :func:`loglog_svg`."""
    root = ET.fromstring(svg_text)
    meta = json.loads(root.find(f"{{{SVG_NS}}}metadata").text)
    lx0, lx1 = meta["log10_x"]
    ly0, ly1 = meta["log10_y"]
    left, top, pw, ph = meta["plot"]
    curves = {}
    for poly in root.iter(f"{{{SVG_NS}}}polyline"):
        pts = []
        for pair in poly.get("points").split():
            x, y = map(float, pair.split(","))
            pts.append(
                (
                    10 ** (lx0 + (x - left) / pw * (lx1 - lx0)),
                    10 ** (ly0 + (top + ph - y) / ph * (ly1 - ly0)),
                )
            )
        curves[poly.get("data-name")] = pts
    return curves

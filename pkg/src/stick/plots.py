"""Minimal SVG output for demo traces.  Illustrative only; the CSVs are the record."""

from __future__ import annotations

import math
from typing import Sequence
from xml.sax.saxutils import escape

W, H, PAD = 640, 420, 48
COLORS = ("#c0392b", "#2471a3", "#1e8449", "#7d3c98", "#b9770e")


def _scale(lo, hi, a, b):
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    return lambda v: a + (v - lo) * (b - a) / (hi - lo)


def _frame(title: str, body: list) -> str:
    head = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
    ]
    return "\n".join(head + body + ["</svg>"]) + "\n"


def time_series(series: dict, title: str = "", reference: dict = None) -> str:
    """``series``: label -> values per step.  ``reference`` curves are dashed."""
    reference = reference or {}
    allv = [v for vals in list(series.values()) + list(reference.values()) for v in vals]
    n = max(len(v) for v in series.values())
    sx = _scale(0, max(1, n - 1), PAD, W - PAD)
    sy = _scale(min(allv + [0.0]), max(allv + [0.0]), H - PAD, PAD)
    body = [
        f'<line x1="{PAD}" y1="{sy(0):.1f}" x2="{W - PAD}" y2="{sy(0):.1f}" stroke="#bbb"/>',
        f'<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{H - PAD}" stroke="#333"/>',
        f'<text x="{W / 2}" y="{H - 12}" text-anchor="middle">step</text>',
    ]
    for i, (label, vals) in enumerate(series.items()):
        col = COLORS[i % len(COLORS)]
        if label in reference:
            ref = " ".join(f"{sx(k):.1f},{sy(v):.1f}" for k, v in enumerate(reference[label]))
            body.append(f'<polyline points="{ref}" fill="none" stroke="#888" stroke-dasharray="4 3"/>')
        pts = " ".join(f"{sx(k):.1f},{sy(v):.1f}" for k, v in enumerate(vals))
        body.append(f'<polyline points="{pts}" fill="none" stroke="{col}" stroke-width="1.5"/>')
        for k, v in enumerate(vals):
            body.append(f'<circle cx="{sx(k):.1f}" cy="{sy(v):.1f}" r="2.2" fill="{col}"/>')
        body.append(f'<text x="{W - PAD + 4}" y="{PAD + 16 * i}" fill="{col}">{escape(label)}</text>')
    return _frame(title, body)


def phase_portrait(xs: Sequence[float], ys: Sequence[float], zs: Sequence[float],
                   title: str = "", fixed_points: Sequence = (), origin=None,
                   azimuth: float = 0.7, elevation: float = 0.35) -> str:
    """Orthographic projection of a 3-D trajectory."""
    ca, sa, ce, se = math.cos(azimuth), math.sin(azimuth), math.cos(elevation), math.sin(elevation)

    def project(p):
        x, y, z = p
        u = ca * x - sa * y
        w = se * (sa * x + ca * y) + ce * z
        return u, w

    pts = [project(p) for p in zip(xs, ys, zs)]
    extra = [project(p) for p in list(fixed_points) + ([origin] if origin else [])]
    us = [p[0] for p in pts + extra]
    ws = [p[1] for p in pts + extra]
    span = max(max(us) - min(us), max(ws) - min(ws), 1e-9)
    cu, cw = (max(us) + min(us)) / 2, (max(ws) + min(ws)) / 2
    k = min(W, H - 40) / (span * 1.15)
    tx = lambda u: W / 2 + (u - cu) * k  # noqa: E731
    ty = lambda w: H / 2 + 10 - (w - cw) * k  # noqa: E731
    line = " ".join(f"{tx(u):.1f},{ty(w):.1f}" for u, w in pts)
    body = [f'<polyline points="{line}" fill="none" stroke="#c0392b" stroke-width="0.6"/>']
    for p in fixed_points:
        u, w = project(p)
        body.append(f'<circle cx="{tx(u):.1f}" cy="{ty(w):.1f}" r="4" fill="#2471a3"/>')
    if origin is not None:
        u, w = project(origin)
        body.append(f'<circle cx="{tx(u):.1f}" cy="{ty(w):.1f}" r="4" fill="#1e8449"/>')
    return _frame(title, body)

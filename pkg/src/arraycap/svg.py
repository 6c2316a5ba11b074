"""Minimal SVG rendering for scan results; no plotting dependency."""

from __future__ import annotations

import numpy as np

__all__ = ["line_svg", "polar_svg"]

_W = 640
_H = 480
_MARGIN = 56


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def line_svg(x, y, x_label: str, y_label: str, title: str = "", log_x: bool = False) -> str:
    """Polyline plot of y against x with framed axes and range labels."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xs = np.log10(x) if log_x else x
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(y.min()), float(y.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pad = 0.05 * (y1 - y0)
    y0 -= pad
    y1 += pad
    px = _MARGIN + (xs - x0) / (x1 - x0) * (_W - 2 * _MARGIN)
    py = _H - _MARGIN - (y - y0) / (y1 - y0) * (_H - 2 * _MARGIN)
    points = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(px, py))
    x_lo = f"{10**x0:.4g}" if log_x else f"{x0:.4g}"
    x_hi = f"{10**x1:.4g}" if log_x else f"{x1:.4g}"
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_MARGIN}" y="{_MARGIN}" width="{_W - 2 * _MARGIN}" '
        f'height="{_H - 2 * _MARGIN}" fill="none" stroke="#444"/>',
        f'<polyline points="{points}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>',
        f'<text x="{_W // 2}" y="24" text-anchor="middle" font-size="15">{title}</text>',
        f'<text x="{_W // 2}" y="{_H - 12}" text-anchor="middle" font-size="13">{x_label}'
        f" [{x_lo} .. {x_hi}]</text>",
        f'<text x="16" y="{_H // 2}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 16 {_H // 2})">{y_label} [{y0:.4g} .. {y1:.4g}]</text>',
        "</svg>",
    ]
    return "\n".join(parts) + "\n"


def polar_svg(azimuth_rad, values, title: str = "") -> str:
    """Polar plot of values over azimuth; radius spans the value range."""
    theta = np.asarray(azimuth_rad, dtype=float)
    r = np.asarray(values, dtype=float)
    r0, r1 = float(r.min()), float(r.max())
    span = r1 - r0 if r1 > r0 else 1.0
    radius_px = (_H - 2 * _MARGIN) / 2.0
    cx, cy = _W / 2.0, _H / 2.0
    # Map the value range onto [0.25, 1.0] of the plot radius so flat scans
    # still draw a visible circle.
    rho = (0.25 + 0.75 * (r - r0) / span) * radius_px
    px = cx + rho * np.cos(theta)
    py = cy - rho * np.sin(theta)
    points = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(px, py))
    rings = "".join(
        f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(f * radius_px)}" '
        f'fill="none" stroke="#ccc"/>'
        for f in (0.25, 0.625, 1.0)
    )
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        rings,
        f'<line x1="{_fmt(cx - radius_px)}" y1="{_fmt(cy)}" x2="{_fmt(cx + radius_px)}" '
        f'y2="{_fmt(cy)}" stroke="#ccc"/>',
        f'<line x1="{_fmt(cx)}" y1="{_fmt(cy - radius_px)}" x2="{_fmt(cx)}" '
        f'y2="{_fmt(cy + radius_px)}" stroke="#ccc"/>',
        f'<polygon points="{points}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>',
        f'<text x="{_W // 2}" y="24" text-anchor="middle" font-size="15">{title}</text>',
        f'<text x="{_W // 2}" y="{_H - 12}" text-anchor="middle" font-size="13">'
        f"radial range {r0:.4g} .. {r1:.4g} bits</text>",
        "</svg>",
    ]
    return "\n".join(parts) + "\n"

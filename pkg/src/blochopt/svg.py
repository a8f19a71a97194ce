"""Minimal SVG emitter for trajectories and synthesis charts.

Curve kinds carry the same styling conventions everywhere: solid for the
collinearity locus, dashed for the singular lines, dot-dashed for optimal
singular arcs, dotted for the switch curve, and a bold line for the overlap
locus.  No plotting library is involved so output is byte-deterministic.
"""

from __future__ import annotations

import numpy as np

_SIZE = 640
_SCALE = _SIZE / 2.2  # world range [-1.1, 1.1]

_STYLE = {
    "CA": 'stroke="#202020" stroke-width="1.4"',
    "CB": 'stroke="#555555" stroke-width="1.1" stroke-dasharray="8,5"',
    "S": 'stroke="#b03030" stroke-width="2.0" stroke-dasharray="10,4,2,4"',
    "C": 'stroke="#2040c0" stroke-width="1.6" stroke-dasharray="2,4"',
    "K": 'stroke="#207040" stroke-width="2.4"',
    "boundary": 'stroke="#808080" stroke-width="1.0"',
    "trajectory": 'stroke="#c05020" stroke-width="1.8"',
}

_REGION_FILLS = ["#dce8f6", "#f6e8dc", "#e2f3de", "#f3dee9", "#eef0d8", "#d8eef0"]


def _xy(pt) -> str:
    x = (float(pt[0]) + 1.1) * _SCALE
    y = (1.1 - float(pt[1])) * _SCALE
    return f"{x:.2f},{y:.2f}"


def _polyline(points, style: str) -> str:
    pts = " ".join(_xy(q) for q in points)
    return f'<polyline fill="none" {style} points="{pts}"/>'


def _polygon(points, fill: str) -> str:
    pts = " ".join(_xy(q) for q in points)
    return f'<polygon fill="{fill}" fill-opacity="0.55" stroke="none" points="{pts}"/>'


def _header() -> list[str]:
    c = _xy((0.0, 0.0))
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SIZE}" height="{_SIZE}" '
        f'viewBox="0 0 {_SIZE} {_SIZE}">',
        f'<rect width="{_SIZE}" height="{_SIZE}" fill="white"/>',
        f'<circle cx="{c.split(",")[0]}" cy="{c.split(",")[1]}" r="{_SCALE:.2f}" '
        'fill="none" stroke="black" stroke-width="1.6"/>',
    ]


def _marker(pt, label: str | None = None, open_circle: bool = True) -> str:
    x, y = _xy(pt).split(",")
    fill = "white" if open_circle else "black"
    out = f'<circle cx="{x}" cy="{y}" r="4" fill="{fill}" stroke="black"/>'
    if label:
        out += (f'<text x="{float(x) + 7:.2f}" y="{float(y) - 7:.2f}" '
                f'font-size="13" font-family="sans-serif">{label}</text>')
    return out


def render_curves(curves, markers=(), trajectories=()) -> str:
    """SVG drawing of disk, styled curves, markers and extra trajectories."""
    parts = _header()
    for kind, pts in curves:
        if len(pts) >= 2:
            parts.append(_polyline(pts, _STYLE.get(kind, _STYLE["boundary"])))
    for traj_pts in trajectories:
        parts.append(_polyline(traj_pts, _STYLE["trajectory"]))
    for pt, label in markers:
        parts.append(_marker(pt, label))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_chart(chart) -> str:
    """Chart rendering: shaded labeled regions under the organizing curves."""
    parts = _header()
    for i, region in enumerate(chart.regions):
        parts.append(_polygon(region.polygon, _REGION_FILLS[i % len(_REGION_FILLS)]))
        centroid = np.asarray(region.polygon).mean(axis=0)
        x, y = _xy(centroid).split(",")
        suffix = "?" if region.ambiguous else ""
        parts.append(
            f'<text x="{x}" y="{y}" font-size="12" font-family="sans-serif" '
            f'text-anchor="middle">{region.label}{suffix}</text>'
        )
    for kind, pts in chart.curves:
        if len(pts) >= 2:
            parts.append(_polyline(pts, _STYLE.get(kind, _STYLE["boundary"])))
    try:
        from .model import free_fixed_point

        fp = free_fixed_point(chart.p)
        parts.append(_marker((fp.x2, fp.x3)))
    except Exception:
        pass
    parts.append(_marker(chart.s0, "start", open_circle=False))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"

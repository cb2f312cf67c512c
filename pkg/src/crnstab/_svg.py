"""Minimal deterministic SVG emitters for the two figure types.

Fixed float formatting keeps reruns byte-identical; these are plot files,
not a UI.
"""

from __future__ import annotations

import math

import numpy as np


def _fmt(v: float) -> str:
    return f"{v:.6f}"


def vector_field_svg(points: np.ndarray, values: np.ndarray, width: int = 640) -> str:
    """Arrow plot of a sampled vector field (log-compressed magnitudes)."""
    x1 = points[:, 0]
    x2 = points[:, 1]
    lo1, hi1 = float(x1.min()), float(x1.max())
    lo2, hi2 = float(x2.min()), float(x2.max())
    span1 = max(hi1 - lo1, 1e-9)
    span2 = max(hi2 - lo2, 1e-9)
    height = width
    pad = 30.0
    scale1 = (width - 2 * pad) / span1
    scale2 = (height - 2 * pad) / span2
    n_side = max(int(round(math.sqrt(len(points)))), 2)
    cell = min((width - 2 * pad) / n_side, (height - 2 * pad) / n_side)

    def to_px(a, b):
        return pad + (a - lo1) * scale1, height - pad - (b - lo2) * scale2

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    mags = np.linalg.norm(values, axis=1)
    mmax = float(np.log1p(mags).max()) or 1.0
    for (a, b), (f1, f2), mag in zip(points, values, mags):
        if mag == 0:
            continue
        px, py = to_px(a, b)
        ln = 0.45 * cell * math.log1p(mag) / mmax
        dx = f1 / mag * ln
        dy = -f2 / mag * ln
        qx, qy = px + dx, py + dy
        lines.append(
            f'<line x1="{_fmt(px)}" y1="{_fmt(py)}" x2="{_fmt(qx)}" y2="{_fmt(qy)}" '
            f'stroke="#1f4e79" stroke-width="1"/>'
        )
        lines.append(
            f'<circle cx="{_fmt(qx)}" cy="{_fmt(qy)}" r="1.4" fill="#1f4e79"/>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


_REGION_COLORS = {
    "T0": "#d7e8f7",
    "T00": "#b8d4ef",
    "T0prime": "#9bc2e6",
    "T01": "#7fb0dd",
    "T1": "#c9e7c0",
    "T12": "#a8d89a",
    "T2": "#f8e3a3",
    "T23": "#f3cf76",
    "T3": "#f4b8a0",
    "T34": "#ec9a77",
    "T4": "#d9c4e8",
    "T4star": "#c3a3db",
}


def surface_svg(
    states: np.ndarray,
    values: np.ndarray,
    tags: list[str],
    width: int = 640,
) -> str:
    """Heatmap of log10(value) with region hue overlay on a lattice window."""
    x1 = states[:, 0].astype(int)
    x2 = states[:, 1].astype(int)
    n1 = int(x1.max()) + 1
    n2 = int(x2.max()) + 1
    pad = 30.0
    cell = (width - 2 * pad) / max(n1, n2)
    height = width
    logs = np.log10(np.maximum(values, 1e-300))
    lo, hi = float(logs.min()), float(logs.max())
    span = max(hi - lo, 1e-9)
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    for a, b, v, tag in zip(x1, x2, logs, tags):
        px = pad + a * cell
        py = height - pad - (b + 1) * cell
        shade = (v - lo) / span
        base = _REGION_COLORS.get(tag, "#cccccc")
        lines.append(
            f'<rect x="{_fmt(px)}" y="{_fmt(py)}" width="{_fmt(cell)}" height="{_fmt(cell)}" '
            f'fill="{base}" fill-opacity="{_fmt(0.25 + 0.75 * shade)}"/>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"

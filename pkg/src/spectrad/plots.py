"""Plot data emission: per-layer CSV series and an optional minimal SVG.

Output is data-first.  The CSV holds three series in long format
(series, x_lo, x_hi, y): density-normalized histogram bins, a 500-point
sample of the fitted MP density, and the fitted power-law tail scaled to
overlay the histogram.  Rendering is left to the caller; the bundled SVG
writer is a bare-bones convenience with no plotting-library dependency.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .esd import ESD, Histogram, histogram
from .heavytail import PlFit
from .mp import MPFit, mp_density

MP_CURVE_POINTS = 500


def mp_curve(fit: MPFit, n_points: int = MP_CURVE_POINTS):
    """Sample the fitted MP density on its support.

    Points sit at midpoints of a uniform grid in the arcsine-transformed
    coordinate, which clusters them near the edges; a trapezoid over the
    returned sample integrates to 1 within ~1e-5 even in the square-aspect
    case where the density diverges at zero.
    """
    c = 1.0 + 1.0 / fit.q
    r = 2.0 / math.sqrt(fit.q)
    t = -np.pi / 2.0 + np.pi * (np.arange(n_points) + 0.5) / n_points
    xs = fit.sigma_sq * (c + r * np.sin(t))
    ys = mp_density(xs, fit.sigma_sq, fit.q)
    return xs, ys


def pl_curve(fit: PlFit, esd: ESD, n_points: int = MP_CURVE_POINTS):
    """Fitted power-law tail density, scaled by the tail mass fraction.

    y = (n_tail/M) * (alpha-1)/x_min * (x/x_min)^-alpha on
    [x_min, lambda_max], geometrically spaced, so the curve overlays a
    density-normalized histogram of the full spectrum.
    """
    hi = max(esd.lambda_max, fit.x_min * (1.0 + 1e-9))
    xs = np.geomspace(fit.x_min, hi, n_points)
    scale = fit.n_tail / esd.m
    ys = scale * (fit.alpha - 1.0) / fit.x_min * (xs / fit.x_min) ** (-fit.alpha)
    return xs, ys


def _rows(esd: ESD, mp_fit: Optional[MPFit], pl_fit: Optional[PlFit],
          n_bins: int, log_scale: bool) -> list:
    hist = histogram(esd, n_bins=n_bins)
    rows = []

    def emit(series: str, lo: float, hi: float, y: float) -> None:
        if log_scale:
            if lo <= 0.0 or hi <= 0.0:
                return  # nonpositive support cannot be drawn in log space
            lo, hi = math.log10(lo), math.log10(hi)
        rows.append((series, lo, hi, y))

    for lo, hi, y in zip(hist.bin_edges[:-1], hist.bin_edges[1:],
                         hist.densities):
        emit("histogram", float(lo), float(hi), float(y))
    if mp_fit is not None and mp_fit.converged:
        for x, y in zip(*mp_curve(mp_fit)):
            emit("mp_density", float(x), float(x), float(y))
    if pl_fit is not None:
        for x, y in zip(*pl_curve(pl_fit, esd)):
            emit("pl_tail", float(x), float(x), float(y))
    return rows


def emit_plot_data(esd: ESD, mp_fit: Optional[MPFit], pl_fit: Optional[PlFit],
                   path: Union[str, Path], n_bins: int = 100,
                   log_scale: bool = False) -> None:
    """Write the long-format plot CSV for one analyzed layer.

    Absent fits contribute no rows of their series.  With log_scale the x
    columns hold log10 values and bins touching zero are dropped.
    """
    rows = _rows(esd, mp_fit, pl_fit, n_bins, log_scale)
    with open(path, "w") as fh:
        fh.write("series,x_lo,x_hi,y\n")
        for series, lo, hi, y in rows:
            fh.write(f"{series},{lo!r},{hi!r},{y!r}\n")


# ---------------------------------------------------------------------------
# Minimal SVG rendering (optional output, no dependencies)

_W, _H = 640, 400
_ML, _MR, _MT, _MB = 60, 15, 15, 35


def _scale(v, v0, v1, p0, p1):
    if v1 <= v0:
        return p0
    return p0 + (v - v0) / (v1 - v0) * (p1 - p0)


def render_svg(esd: ESD, mp_fit: Optional[MPFit], pl_fit: Optional[PlFit],
               path: Union[str, Path], n_bins: int = 100,
               log_scale: bool = False) -> None:
    """Render histogram plus fit overlays as a small standalone SVG."""
    rows = _rows(esd, mp_fit, pl_fit, n_bins, log_scale)
    bars = [r for r in rows if r[0] == "histogram"]
    curves = {
        name: [(r[1], r[3]) for r in rows if r[0] == name]
        for name in ("mp_density", "pl_tail")
    }
    xs = [r[1] for r in rows] + [r[2] for r in rows]
    ys = [r[3] for r in rows]
    x0, x1 = min(xs), max(xs)
    y1 = max(ys) if ys else 1.0
    y1 = y1 * 1.05 or 1.0

    def px(x):
        return _scale(x, x0, x1, _ML, _W - _MR)

    def py(y):
        return _scale(y, 0.0, y1, _H - _MB, _MT)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
    ]
    for _, lo, hi, y in bars:
        x = px(lo)
        w = max(px(hi) - px(lo), 0.5)
        h = (_H - _MB) - py(y)
        parts.append(f'<rect x="{x:.2f}" y="{py(y):.2f}" width="{w:.2f}" '
                     f'height="{h:.2f}" fill="#b8c4d9"/>')
    for name, color in (("mp_density", "#c02020"), ("pl_tail", "#2060c0")):
        pts = curves[name]
        if pts:
            d = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)
            parts.append(f'<polyline points="{d}" fill="none" '
                         f'stroke="{color}" stroke-width="1.5"/>')
    axis = (f'<line x1="{_ML}" y1="{_H - _MB}" x2="{_W - _MR}" '
            f'y2="{_H - _MB}" stroke="black"/>'
            f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_H - _MB}" '
            f'stroke="black"/>')
    parts.append(axis)
    for frac in (0.0, 0.5, 1.0):
        xv = x0 + frac * (x1 - x0)
        yv = frac * y1
        parts.append(f'<text x="{px(xv):.1f}" y="{_H - _MB + 16}" '
                     f'font-size="11" text-anchor="middle">{xv:.3g}</text>')
        parts.append(f'<text x="{_ML - 6}" y="{py(yv) + 4:.1f}" font-size="11" '
                     f'text-anchor="end">{yv:.3g}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")

"""Space-time diagrams: space runs left to right, time runs upward."""
from __future__ import annotations

import warnings

import numpy as np

from .engine import Outcome
from .model import ParticleSystem

MAX_DRAWN = 100_000

PALETTE = {-1.0: "#d62728", 0.0: "#222222", 1.0: "#1f77b4"}
_NEG = (0xd6, 0x27, 0x28)
_MID = (0x88, 0x88, 0x88)
_POS = (0x1f, 0x77, 0xb4)


def _gradient(v: float, v_max: float) -> str:
    s = 0.0 if v_max == 0 else max(-1.0, min(1.0, v / v_max))
    end = _POS if s > 0 else _NEG
    s = abs(s)
    rgb = (round(m + (e - m) * s) for m, e in zip(_MID, end))
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def _colors(speeds: np.ndarray) -> list[str]:
    if np.all(np.isin(speeds, (-1.0, 0.0, 1.0))):
        return [PALETTE[float(v)] for v in speeds]
    v_max = float(np.max(np.abs(speeds))) if speeds.size else 0.0
    return [_gradient(float(v), v_max) for v in speeds]


def render_svg(sys: ParticleSystem, outcome: Outcome, horizon: float | None = None,
               width: int = 800, height: int = 600, margin: int = 30,
               max_particles: int = MAX_DRAWN) -> str:
    """One segment per particle, from its start to its death point or to the
    top of the picture.  Output is a pure function of the arguments."""
    n = len(sys)
    idx = np.arange(n)
    if n > max_particles:
        warnings.warn(f"drawing {max_particles} of {n} particles (uniform index thinning)",
                      stacklevel=2)
        idx = np.unique(np.linspace(0, n - 1, max_particles).round().astype(np.int64))
    x0 = sys.positions[idx]
    v = sys.speeds[idx]
    death = outcome.death_time[idx]
    if horizon is None:
        finite = death[np.isfinite(death)]
        horizon = float(finite.max()) * 1.1 if finite.size else 1.0
    end_t = np.minimum(death, horizon)
    x1 = x0 + v * end_t

    if n:
        lo = float(min(x0.min(), x1.min()))
        hi = float(max(x0.max(), x1.max()))
    else:
        lo, hi = 0.0, 1.0
    if hi <= lo:
        lo, hi = lo - 0.5, hi + 0.5
    span_x = width - 2 * margin
    span_y = height - 2 * margin

    def px(x):
        return margin + (x - lo) / (hi - lo) * span_x

    def py(t):
        return height - margin - t / horizon * span_y

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
        '<g id="axes" stroke="#000000" stroke-width="1">',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" y2="{height - margin}"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{margin}" y2="{margin}"/>',
        '</g>',
        f'<text x="{width - margin}" y="{height - margin + 18}" font-size="12" '
        f'text-anchor="end">x [{lo:.4g}, {hi:.4g}]</text>',
        f'<text x="{margin - 6}" y="{margin - 8}" font-size="12">t (0 to {horizon:.4g})</text>',
        '<g id="trajectories" stroke-width="0.8" stroke-linecap="round">',
    ]
    for a, b, t, color in zip(x0, x1, end_t, _colors(v)):
        out.append(f'<line x1="{px(a):.3f}" y1="{py(0.0):.3f}" x2="{px(b):.3f}" '
                   f'y2="{py(t):.3f}" stroke="{color}"/>')
    out.append('</g>')
    out.append('</svg>')
    return "\n".join(out) + "\n"

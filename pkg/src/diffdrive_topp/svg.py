"""Static SVG of a planned path coloured by speed utilisation."""

from __future__ import annotations

import numpy as np
from scipy.signal import find_peaks

from .trajectory import TimedTrajectory

_BINS = 10
_SIZE = 800.0
_PAD = 20.0


def _colour(frac):
    # blue (slow) to red (at the cap)
    r = int(round(255 * frac))
    return f"#{r:02x}40{255 - r:02x}"


def speed_minima(v, prominence=0.1):
    """Indices of interior speed minima that stand out by ``prominence * max(v)``."""
    v = np.asarray(v, dtype=float)
    if len(v) < 3 or v.max() <= 0:
        return np.array([], dtype=int)
    idx, _ = find_peaks(-v, prominence=prominence * v.max())
    return idx


def render(tt: TimedTrajectory, vcap) -> str:
    x, y = np.asarray(tt.x), np.asarray(tt.y)
    span = max(np.ptp(x), np.ptp(y), 1e-9)
    scale = (_SIZE - 2 * _PAD) / span
    px = _PAD + (x - x.min()) * scale
    py = _PAD + (y.max() - y) * scale
    width = 2 * _PAD + np.ptp(x) * scale
    height = 2 * _PAD + np.ptp(y) * scale

    util = np.clip(np.asarray(tt.v)[:-1] / np.asarray(vcap)[:-1], 0.0, 1.0)
    bins = np.minimum((util * _BINS).astype(int), _BINS - 1)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}" '
        f'viewBox="0 0 {width:.1f} {height:.1f}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    # consecutive segments in the same colour bin share one polyline
    start = 0
    for k in range(1, len(bins) + 1):
        if k == len(bins) or bins[k] != bins[start]:
            pts = " ".join(f"{px[i]:.2f},{py[i]:.2f}" for i in range(start, k + 1))
            colour = _colour((bins[start] + 0.5) / _BINS)
            out.append(
                f'<polyline points="{pts}" fill="none" stroke="{colour}" stroke-width="2"/>'
            )
            start = k
    for i in speed_minima(tt.v):
        out.append(
            f'<circle cx="{px[i]:.2f}" cy="{py[i]:.2f}" r="6" fill="none" stroke="black">'
            f"<title>t={tt.t[i]:.2f} s, v={tt.v[i]:.3f} m/s</title></circle>"
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"

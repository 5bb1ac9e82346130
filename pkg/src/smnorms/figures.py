"""Static SVG figures: radar profiles, paired histograms and heatmaps.

Output is plain SVG 1.1 with generic font families only, so files render
identically without a plotting runtime.
"""

from __future__ import annotations

import math
from typing import Sequence
from xml.sax.saxutils import escape, quoteattr

import numpy as np

_FONT = 'font-family="sans-serif"'


def _num(v: float) -> str:
    return f"{v:.2f}"


def _doc(width: int, height: int, body: list[str], title: str = "") -> str:
    head = (f'<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
            f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">\n')
    if title:
        head += f"<title>{escape(title)}</title>\n"
    return head + "\n".join(body) + "\n</svg>\n"


def _text(x, y, s, size=11, anchor="middle", extra=""):
    return (f'<text x="{_num(x)}" y="{_num(y)}" {_FONT} font-size="{size}" '
            f'text-anchor="{anchor}"{extra}>{escape(str(s))}</text>')


def radar_svg(labels: Sequence[str], values: Sequence[float], scale_max: Sequence[float] | float,
              title: str = "", size: int = 420) -> str:
    """Radar chart with one spoke per label; each value is drawn relative to its scale max."""
    k = len(labels)
    if k < 3 or len(values) != k:
        raise ValueError("need at least 3 spokes and one value per label")
    maxes = [float(scale_max)] * k if np.isscalar(scale_max) else [float(m) for m in scale_max]
    cx = cy = size / 2
    radius = size * 0.34
    body = [f'<rect width="{size}" height="{size}" fill="white"/>']
    if title:
        body.append(_text(cx, 22, title, size=15))

    def point(i, frac):
        ang = -math.pi / 2 + 2 * math.pi * i / k
        return cx + radius * frac * math.cos(ang), cy + 10 + radius * frac * math.sin(ang)

    for ring in (0.2, 0.4, 0.6, 0.8, 1.0):
        pts = " ".join(f"{_num(x)},{_num(y)}" for x, y in (point(i, ring) for i in range(k)))
        body.append(f'<polygon points="{pts}" fill="none" stroke="#cccccc" stroke-width="1"/>')
    for i, lab in enumerate(labels):
        x, y = point(i, 1.0)
        body.append(f'<line x1="{_num(cx)}" y1="{_num(cy + 10)}" x2="{_num(x)}" y2="{_num(y)}" '
                    f'stroke="#bbbbbb" stroke-width="1"/>')
        lx, ly = point(i, 1.17)
        body.append(_text(lx, ly + 4, lab, size=10))
    fracs = [min(max(v / m, 0.0), 1.0) if m > 0 else 0.0 for v, m in zip(values, maxes)]
    pts = " ".join(f"{_num(x)},{_num(y)}" for x, y in (point(i, f) for i, f in enumerate(fracs)))
    body.append(f'<polygon points="{pts}" fill="#4c72b0" fill-opacity="0.35" '
                f'stroke="#4c72b0" stroke-width="2"/>')
    for i, (f, v) in enumerate(zip(fracs, values)):
        x, y = point(i, f)
        body.append(f'<circle cx="{_num(x)}" cy="{_num(y)}" r="3" fill="#4c72b0">'
                    f'<title>{escape(labels[i])}: {v:.3f}</title></circle>')
    return _doc(size, size, body, title)


def histogram_svg(human, predicted, title: str = "", annotation: str = "",
                  lo: float = 0.0, hi: float = 5.0, bins: int = 25,
                  width: int = 420, height: int = 300) -> str:
    """Overlaid density histograms: human ratings in grey, predictions in orange."""
    edges = np.linspace(lo, hi, bins + 1)
    h1, _ = np.histogram(np.clip(human, lo, hi), bins=edges, density=True)
    h2, _ = np.histogram(np.clip(predicted, lo, hi), bins=edges, density=True)
    top = max(float(h1.max(initial=0)), float(h2.max(initial=0)), 1e-12)
    left, right, upper, lower = 45, 15, 35, 35
    pw = width - left - right
    ph = height - upper - lower
    body = [f'<rect width="{width}" height="{height}" fill="white"/>']
    if title:
        body.append(_text(width / 2, 20, title, size=14))
    bw = pw / bins
    for hist, color in ((h1, "#999999"), (h2, "#ff8c1a")):
        for i, v in enumerate(hist):
            bh = ph * v / top
            body.append(f'<rect x="{_num(left + i * bw)}" y="{_num(upper + ph - bh)}" '
                        f'width="{_num(bw)}" height="{_num(bh)}" fill="{color}" fill-opacity="0.6"/>')
    body.append(f'<line x1="{left}" y1="{upper + ph}" x2="{left + pw}" y2="{upper + ph}" stroke="black"/>')
    body.append(f'<line x1="{left}" y1="{upper}" x2="{left}" y2="{upper + ph}" stroke="black"/>')
    for t in np.linspace(lo, hi, 6):
        x = left + pw * (t - lo) / (hi - lo)
        body.append(_text(x, upper + ph + 15, f"{t:g}", size=10))
    body.append(_text(left - 6, upper + 8, f"{top:.2f}", size=9, anchor="end"))
    if annotation:
        body.append(_text(left + pw - 4, upper + 14, annotation, size=11, anchor="end"))
    body.append(f'<rect x="{left + 8}" y="{upper + 4}" width="10" height="10" fill="#999999"/>')
    body.append(_text(left + 22, upper + 13, "human", size=10, anchor="start"))
    body.append(f'<rect x="{left + 8}" y="{upper + 18}" width="10" height="10" fill="#ff8c1a"/>')
    body.append(_text(left + 22, upper + 27, "predicted", size=10, anchor="start"))
    return _doc(width, height, body, title)


def _lerp(c1, c2, t):
    return tuple(round(a + (b - a) * t) for a, b in zip(c1, c2))


def _hex(c):
    return "#{:02x}{:02x}{:02x}".format(*c)


def _diverging(v, lo, hi, neg, pos):
    """White at the scale midpoint (0 for a symmetric scale)."""
    white = (255, 255, 255)
    mid = 0.5 * (lo + hi)
    if hi == lo:
        return _hex(white)
    if v >= mid:
        t = min((v - mid) / (hi - mid), 1.0)
        return _hex(_lerp(white, pos, t))
    t = min((mid - v) / (mid - lo), 1.0)
    return _hex(_lerp(white, neg, t))


def heatmap_svg(matrix, labels: Sequence[str] | None = None, title: str = "",
                symmetric: bool = True, cell: float | None = None) -> str:
    """Heatmap of a square matrix.

    ``symmetric=True`` uses a diverging scale anchored at 0 (blue positive, red
    negative, for correlations); otherwise the scale runs from the data minimum
    (blue) through white to the maximum (orange), as for RDMs.
    """
    M = np.asarray(matrix, dtype=float)
    n = M.shape[0]
    if cell is None:
        cell = max(4.0, min(36.0, 600.0 / n))
    show_labels = labels is not None and cell >= 12
    margin = 110 if show_labels else 20
    upper = 40 if title else 15
    width = int(margin + n * cell + 20)
    height = int(upper + margin + n * cell + 10) if show_labels else int(upper + n * cell + 20)
    body = [f'<rect width="{width}" height="{height}" fill="white"/>']
    if title:
        body.append(_text(width / 2, 22, title, size=14))
    if symmetric:
        bound = float(np.nanmax(np.abs(M))) or 1.0
        lo, hi, neg, pos = -bound, bound, (214, 39, 40), (31, 119, 180)
    else:
        lo, hi = float(np.nanmin(M)), float(np.nanmax(M))
        neg, pos = (31, 119, 180), (255, 127, 14)
    y0 = upper + (margin - 20 if show_labels else 0)
    for i in range(n):
        for j in range(n):
            color = _diverging(M[i, j], lo, hi, neg, pos)
            body.append(f'<rect x="{_num(margin + j * cell)}" y="{_num(y0 + i * cell)}" '
                        f'width="{_num(cell)}" height="{_num(cell)}" fill="{color}"/>')
            if show_labels and cell >= 30 and symmetric:
                body.append(_text(margin + (j + 0.5) * cell, y0 + (i + 0.5) * cell + 4,
                                  f"{M[i, j]:.2f}", size=9))
    if show_labels:
        for i, lab in enumerate(labels):
            body.append(_text(margin - 4, y0 + (i + 0.5) * cell + 4, lab, size=10, anchor="end"))
            x = margin + (i + 0.5) * cell
            body.append(f'<text x="{_num(x)}" y="{_num(y0 - 4)}" {_FONT} font-size="10" '
                        f'text-anchor="start" transform={quoteattr(f"rotate(-60 {_num(x)} {_num(y0 - 4)})")}>'
                        f'{escape(lab)}</text>')
    return _doc(width, height, body, title)

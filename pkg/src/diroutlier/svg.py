"""
Minimal deterministic SVG rendering: a FOM scatter and a heatmap grid.

Output is plain text with fixed number formatting, so the same inputs always
produce byte-identical files.
"""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["fom_svg", "heatmap_svg", "write_svg"]

WIDTH = 480
HEIGHT = 400
MARGIN = 50


def _f(x: float) -> str:
    return f"{x:.3f}"


def _header(w, h, title):
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
        f"<title>{escape(title)}</title>",
        f'<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>',
    ]


def fom_svg(points: np.ndarray, curve: np.ndarray, flags, title: str = "functional outlier map") -> str:
    """Scatter of (fDO, vDO) with the cutoff curve; flagged functions in red."""
    pts = np.asarray(points, dtype=float)
    cur = np.asarray(curve, dtype=float)
    flags = np.asarray(flags, dtype=bool)
    fin = np.isfinite(pts).all(axis=1)
    both = np.vstack([pts[fin], cur]) if fin.any() else cur
    xmax = float(both[:, 0].max()) * 1.05 or 1.0
    ymax = float(both[:, 1].max()) * 1.05 or 1.0
    pw, ph = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN

    def sx(x):
        return MARGIN + pw * min(x, xmax) / xmax

    def sy(y):
        return HEIGHT - MARGIN - ph * min(y, ymax) / ymax

    out = _header(WIDTH, HEIGHT, title)
    x0, y0 = MARGIN, HEIGHT - MARGIN
    out.append(f'<line x1="{x0}" y1="{y0}" x2="{WIDTH - MARGIN}" y2="{y0}" stroke="black"/>')
    out.append(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{MARGIN}" stroke="black"/>')
    out.append(f'<text x="{WIDTH // 2}" y="{HEIGHT - 12}" text-anchor="middle" font-size="12">fDO (max {_f(xmax)})</text>')
    out.append(f'<text x="14" y="{HEIGHT // 2}" font-size="12" transform="rotate(-90 14 {HEIGHT // 2})" '
               f'text-anchor="middle">vDO (max {_f(ymax)})</text>')
    poly = " ".join(f"{_f(sx(x))},{_f(sy(y))}" for x, y in cur)
    out.append(f'<polyline points="{poly}" fill="none" stroke="blue" stroke-width="1.5"/>')
    for i, (x, y) in enumerate(pts):
        if not (np.isfinite(x) and np.isfinite(y)):
            continue
        color = "red" if flags[i] else "black"
        out.append(f'<circle id="f{i}" cx="{_f(sx(x))}" cy="{_f(sy(y))}" r="2.5" fill="{color}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def heatmap_svg(grid: np.ndarray, title: str = "DO heatmap", cell: int = 6) -> str:
    """One rectangle per cell, white (0) to dark red (max finite value)."""
    g = np.asarray(grid, dtype=float)
    if g.ndim == 1:
        g = g[None, :]
    fin = g[np.isfinite(g)]
    top = float(fin.max()) if fin.size and fin.max() > 0 else 1.0
    rows, cols = g.shape
    out = _header(cols * cell, rows * cell, title)
    for i in range(rows):
        for j in range(cols):
            v = g[i, j]
            u = 1.0 if not np.isfinite(v) else min(max(v / top, 0.0), 1.0)
            gb = int(round(255 * (1.0 - u)))
            r = int(round(255 - 116 * u))
            out.append(f'<rect x="{j * cell}" y="{i * cell}" width="{cell}" height="{cell}" fill="rgb({r},{gb},{gb})"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path, text: str) -> Path:
    path = Path(path)
    path.write_text(text)
    return path

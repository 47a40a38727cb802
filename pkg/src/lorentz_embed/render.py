"""Deterministic SVG scatter plots of 2-d Poincare-disk embeddings."""

from xml.sax.saxutils import escape, quoteattr

import numpy as np


def _fmt(v):
    s = f"{v:.3f}".rstrip("0").rstrip(".")
    return "0" if s == "-0" else s


def render_svg(ids, coords, size=512, radius=3.0, edges=(), labels=False, margin=10):
    """Draw points of the unit disk on a ``size`` x ``size`` canvas.

    ``coords`` are Poincare coordinates with shape ``(m, 2)``; ``edges`` are
    pairs of ids drawn as line segments below the points. Numbers are
    printed with fixed precision, so equal inputs give byte-identical output.
    """
    coords = np.asarray(coords, dtype=np.float64)
    if coords.ndim != 2 or coords.shape[1] != 2:
        raise ValueError("render_svg needs 2-d Poincare coordinates")
    if size <= 2 * margin:
        raise ValueError(f"canvas size {size} too small")
    center = size / 2.0
    scale = center - margin

    def xy(p):
        return center + scale * p[0], center - scale * p[1]

    index = {c: r for r, c in enumerate(ids)}
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<circle class="boundary" cx="{_fmt(center)}" cy="{_fmt(center)}" r="{_fmt(scale)}" '
        'fill="none" stroke="black" stroke-width="1"/>',
    ]
    if edges:
        out.append('<g class="edges" stroke="#999999" stroke-width="0.5">')
        for a, b in edges:
            if a not in index or b not in index:
                continue
            x1, y1 = xy(coords[index[a]])
            x2, y2 = xy(coords[index[b]])
            out.append(f'<line class="edge" x1="{_fmt(x1)}" y1="{_fmt(y1)}" '
                       f'x2="{_fmt(x2)}" y2="{_fmt(y2)}"/>')
        out.append("</g>")
    out.append('<g class="points" fill="#1f77b4">')
    for c, p in zip(ids, coords):
        x, y = xy(p)
        out.append(f'<circle class="point" cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(radius)}">'
                   f"<title>{escape(c)}</title></circle>")
    out.append("</g>")
    if labels:
        out.append('<g class="labels" font-family="sans-serif" font-size="8">')
        for c, p in zip(ids, coords):
            x, y = xy(p)
            out.append(f'<text x="{_fmt(x + radius + 1)}" y="{_fmt(y)}" '
                       f"data-id={quoteattr(c)}>{escape(c)}</text>")
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"

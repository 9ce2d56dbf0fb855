"""Self-contained SVG quiver plots with boundary and certificate boxes."""
from __future__ import annotations

from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

PANEL = 420
MARGIN = 30


@dataclass
class Panel:
    title: str
    field: object                 # callable (x, y) -> (2, ...)
    domain: object                # PlanarDomain
    boxes: list = field(default_factory=list)     # (xmin, ymin, xmax, ymax, degree)
    markers: list = field(default_factory=list)   # (x, y, label)


def _fmt(v):
    return f"{v:.3f}"


def _panel_svg(panel, offset_x, grid=21):
    x0, y0, x1, y1 = panel.domain.bbox
    span = max(x1 - x0, y1 - y0) * 1.1
    cx, cy = (x0 + x1) / 2, (y0 + y1) / 2
    scale = (PANEL - 2 * MARGIN) / span

    def to_px(x, y):
        return (offset_x + PANEL / 2 + (np.asarray(x) - cx) * scale,
                PANEL / 2 + 10 - (np.asarray(y) - cy) * scale)

    out = [f'<g class="panel">',
           f'<text x="{_fmt(offset_x + PANEL / 2)}" y="16" text-anchor="middle" '
           f'font-family="sans-serif" font-size="12">{escape(panel.title)}</text>']
    poly = panel.domain.curve.polygon(400)
    px, py = to_px(poly[:, 0], poly[:, 1])
    pts = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(px, py))
    out.append(f'<polygon points="{pts}" fill="none" stroke="black" stroke-width="1.2"/>')

    gx, gy = np.meshgrid(np.linspace(x0, x1, grid), np.linspace(y0, y1, grid))
    gx, gy = gx.ravel(), gy.ravel()
    keep = panel.domain.contains(gx, gy)
    gx, gy = gx[keep], gy[keep]
    if gx.size:
        v = np.asarray(panel.field(gx, gy), float)
        norm = np.hypot(v[0], v[1])
        ok = norm > 0
        length = 0.4 * span / grid
        ux = np.where(ok, v[0] / np.where(ok, norm, 1), 0) * length
        uy = np.where(ok, v[1] / np.where(ok, norm, 1), 0) * length
        ax, ay = to_px(gx - ux / 2, gy - uy / 2)
        bx, by = to_px(gx + ux / 2, gy + uy / 2)
        for a, b, c, d in zip(ax, ay, bx, by):
            out.append(f'<line x1="{_fmt(a)}" y1="{_fmt(b)}" x2="{_fmt(c)}" y2="{_fmt(d)}" '
                       f'stroke="#4a6fa5" stroke-width="1" marker-end="url(#arrow)"/>')
    for xmin, ymin, xmax, ymax, degree in panel.boxes:
        ax, ay = to_px(xmin, ymax)
        w = max((xmax - xmin) * scale, 6.0)
        h = max((ymax - ymin) * scale, 6.0)
        mx, my = to_px((xmin + xmax) / 2, (ymin + ymax) / 2)
        out.append(f'<rect x="{_fmt(mx - w / 2)}" y="{_fmt(my - h / 2)}" width="{_fmt(w)}" '
                   f'height="{_fmt(h)}" fill="none" stroke="#c0392b" stroke-width="1.5"/>')
        out.append(f'<text x="{_fmt(mx + w / 2 + 3)}" y="{_fmt(my - 3)}" font-family="sans-serif" '
                   f'font-size="11" fill="#c0392b">deg {degree}</text>')
    for x, y, label in panel.markers:
        mx, my = to_px(x, y)
        out.append(f'<circle cx="{_fmt(mx)}" cy="{_fmt(my)}" r="4" fill="#27ae60"/>')
        out.append(f'<text x="{_fmt(mx + 6)}" y="{_fmt(my + 12)}" font-family="sans-serif" '
                   f'font-size="10" fill="#27ae60">{escape(label)}</text>')
    out.append("</g>")
    return out


def render(panels):
    """SVG document text for one or more side-by-side panels."""
    width = PANEL * len(panels)
    head = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{PANEL + 20}" '
            f'viewBox="0 0 {width} {PANEL + 20}">',
            '<defs><marker id="arrow" markerWidth="6" markerHeight="6" refX="5" refY="3" '
            'orient="auto"><path d="M0,0 L6,3 L0,6 z" fill="#4a6fa5"/></marker></defs>',
            f'<rect width="{width}" height="{PANEL + 20}" fill="white"/>']
    body = []
    for i, p in enumerate(panels):
        body.extend(_panel_svg(p, i * PANEL))
    return "\n".join(head + body + ["</svg>", ""])

"""Static SVG drawings of a reference (blue) and query (orange) path."""
from __future__ import annotations

from html import escape
from typing import Sequence

from .geometry import NavWorld

SIZE = 600
MARGIN = 0.05
REFERENCE_COLOR = "#1f77b4"
QUERY_COLOR = "#ff7f0e"
EDGE_COLOR = "#d9d9d9"


class _Frame:
    """World bounding box fitted into the square viewport, y pointing up."""

    def __init__(self, world: NavWorld):
        x0, y0, x1, y1 = world.bounds()
        span = max(x1 - x0, y1 - y0) or 1.0
        inner = SIZE * (1 - 2 * MARGIN)
        self.scale = inner / span
        self.ox = SIZE * MARGIN + (inner - (x1 - x0) * self.scale) / 2 - x0 * self.scale
        self.oy = SIZE * MARGIN + (inner - (y1 - y0) * self.scale) / 2 + y1 * self.scale

    def __call__(self, x: float, y: float) -> tuple[float, float]:
        return self.ox + x * self.scale, self.oy - y * self.scale


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _polyline(points, color: str, width: float, extra: str = "") -> str:
    coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in points)
    return (
        f'<polyline points="{coords}" fill="none" stroke="{color}" '
        f'stroke-width="{width}" stroke-linejoin="round" stroke-linecap="round"{extra}/>'
    )


def render_episode(
    world: NavWorld,
    reference: Sequence[int],
    query: Sequence[int],
    caption: str,
) -> str:
    frame = _Frame(world)
    out = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        '<!DOCTYPE svg PUBLIC "-//W3C//DTD SVG 1.1//EN" '
        '"http://www.w3.org/Graphics/SVG/1.1/DTD/svg11.dtd">',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SIZE}" '
        f'height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">',
        f'<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="#ffffff"/>',
        '<g id="world">',
    ]
    for a, b in sorted(world.edges):
        (x1, y1), (x2, y2) = frame(*world.position(a)), frame(*world.position(b))
        out.append(
            f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}" '
            f'stroke="{EDGE_COLOR}" stroke-width="1"/>'
        )
    out.append("</g>")
    ref_pts = [frame(*world.position(n)) for n in reference]
    qry_pts = [frame(*world.position(n)) for n in query]
    out.append(_polyline(ref_pts, REFERENCE_COLOR, 6, ' id="reference" stroke-opacity="0.8"'))
    out.append(_polyline(qry_pts, QUERY_COLOR, 3, ' id="query"'))
    for (x, y), color in ((ref_pts[0], REFERENCE_COLOR), (qry_pts[0], QUERY_COLOR)):
        out.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="6" fill="{color}"/>')
    out.append(
        f'<text x="{SIZE / 2:.0f}" y="{SIZE * MARGIN * 0.75:.0f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="18">{escape(caption)}</text>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_index(entries: Sequence[tuple[str, str]]) -> str:
    """HTML page showing ``(svg filename, caption)`` pairs in the given order."""
    rows = [
        "<!DOCTYPE html>",
        "<html><head><meta charset=\"utf-8\"><title>Episodes by nDTW</title></head><body>",
        "<ol id=\"episodes\">",
    ]
    for name, caption in entries:
        rows.append(
            f'<li><figure><img src="{escape(name)}" width="300" height="300" alt="{escape(name)}">'
            f"<figcaption>{escape(caption)}</figcaption></figure></li>"
        )
    rows += ["</ol>", "</body></html>"]
    return "\n".join(rows) + "\n"

"""Minimal SVG floor-plan writer (no plotting dependency)."""

from __future__ import annotations

from typing import Iterable, List, Sequence, Tuple

import numpy as np

COLORS = {"gt": "#1f4fd1", "noisy": "#9a9a9a", "pseudo": "#2e9e44", "fused": "#d12f2f"}


def _fmt(v: float) -> str:
    return f"{v:.3f}"


class FloorPlan:
    """Collects polylines in world metres and renders them to an SVG string.

    The world z axis points up the page.
    """

    def __init__(self, size_px: int = 640, margin_m: float = 0.5):
        self.size_px = size_px
        self.margin_m = margin_m
        self._items: List[Tuple[str, np.ndarray, dict]] = []

    def polygon(self, pts, stroke: str, width: float = 2.0, opacity: float = 1.0, closed: bool = True):
        self._items.append(("polygon" if closed else "polyline", np.asarray(pts, dtype=float),
                            {"stroke": stroke, "stroke-width": width, "stroke-opacity": opacity, "fill": "none"}))

    def marker(self, xz, color: str = "#000000", radius: float = 4.0):
        self._items.append(("circle", np.asarray(xz, dtype=float).reshape(1, 2), {"fill": color, "r": radius}))

    def _bounds(self):
        pts = np.concatenate([p for _, p, _ in self._items]) if self._items else np.zeros((1, 2))
        lo = pts.min(axis=0) - self.margin_m
        hi = pts.max(axis=0) + self.margin_m
        return lo, hi

    def render(self, title: str = "", legend: Iterable[str] = ()) -> str:
        lo, hi = self._bounds()
        span = float(max(hi - lo))
        scale = self.size_px / span

        def px(p):
            return (p[:, 0] - lo[0]) * scale, (hi[1] - p[:, 1]) * scale

        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.size_px}" height="{self.size_px}" '
            f'viewBox="0 0 {self.size_px} {self.size_px}">',
            f'<rect width="{self.size_px}" height="{self.size_px}" fill="#ffffff"/>',
        ]
        if title:
            out.append(f'<title>{_escape(title)}</title>')
        for kind, pts, attrs in self._items:
            x, y = px(pts)
            if kind == "circle":
                out.append(f'<circle cx="{_fmt(x[0])}" cy="{_fmt(y[0])}" r="{attrs["r"]}" fill="{attrs["fill"]}"/>')
                continue
            coords = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(x, y))
            style = " ".join(f'{k}="{v}"' for k, v in attrs.items())
            out.append(f'<{kind} points="{coords}" {style}/>')
        for i, name in enumerate(legend):
            y = 18 + 16 * i
            out.append(f'<line x1="10" y1="{y - 4}" x2="30" y2="{y - 4}" stroke="{COLORS.get(name, "#000")}" '
                       f'stroke-width="3"/>')
            out.append(f'<text x="36" y="{y}" font-family="sans-serif" font-size="12">{_escape(name)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def room_floor_plan(gt_polygon: np.ndarray, layers: Sequence[Tuple[str, Sequence[np.ndarray]]],
                    cameras: Sequence[np.ndarray], title: str = "") -> str:
    """GT footprint plus per-view boundary layers (``(name, [polyline, ...])``) in world metres."""
    fp = FloorPlan()
    for name, polys in layers:
        for p in polys:
            fp.polygon(p, COLORS.get(name, "#000000"), width=1.0, opacity=0.6)
    fp.polygon(gt_polygon, COLORS["gt"], width=2.5)
    for c in cameras:
        fp.marker(c)
    return fp.render(title, legend=["gt"] + [name for name, _ in layers])

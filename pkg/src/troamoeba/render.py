"""Deterministic SVG scenes: fixed 800x800 canvas, 5% padding, rays clipped to the view."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import EmptyScene, ValidationError

SIZE = 800
PAD = 0.05
KINDS = ("polygon", "segments", "rays", "points", "arrows")

STYLES = {
    "polytope": 'fill="#f3f1ea" stroke="#222" stroke-width="1.5"',
    "legendre": 'fill="none" stroke="#6a6a6a" stroke-width="1" stroke-dasharray="6 3"',
    "cone": 'fill="none" stroke="#8a8a8a" stroke-width="0.8" stroke-dasharray="2 3"',
    "tropical": 'fill="none" stroke="#1f5fa8" stroke-width="1.6"',
    "limit": 'fill="none" stroke="#b0302a" stroke-width="2.2"',
    "gq": 'fill="none" stroke="#2e7d32" stroke-width="2.2"',
    "gq_boundary": 'fill="none" stroke="#e08a00" stroke-width="3"',
    "sample": 'fill="#555" fill-opacity="0.35" stroke="none"',
    "lattice": 'fill="#fff" stroke="#111" stroke-width="1.2"',
    "field": 'fill="none" stroke="#7b3fa0" stroke-width="0.8"',
}
POINT_RADIUS = {"lattice": 4.0, "sample": 0.9}


@dataclass
class Layer:
    kind: str
    geometry: object
    style: str = "tropical"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown layer kind {self.kind!r}")
        if self.style not in STYLES:
            raise ValidationError(f"unknown style {self.style!r}")


@dataclass
class Scene:
    layers: list[Layer] = field(default_factory=list)
    viewport: tuple[tuple[float, float], tuple[float, float]] | None = None
    title: str = ""

    def add(self, kind: str, geometry, style: str) -> "Scene":
        self.layers.append(Layer(kind, geometry, style))
        return self

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Viewport from the finite geometry (rays contribute only their base points)."""
        if self.viewport is not None:
            lo, hi = self.viewport
            return np.asarray(lo, float), np.asarray(hi, float)
        pts = []
        for layer in self.layers:
            g = layer.geometry
            if layer.kind == "rays":
                pts += [np.asarray(b, float) for b, _ in g]
            elif layer.kind == "arrows":
                pts += [np.asarray(p, float) for a in g for p in a]
            else:
                arr = np.asarray(g, dtype=float)
                if arr.size:
                    pts += list(arr.reshape(-1, 2))
        if not pts:
            return np.array([-1.0, -1.0]), np.array([1.0, 1.0])
        P = np.asarray(pts)
        lo, hi = P.min(axis=0), P.max(axis=0)
        span = np.maximum(hi - lo, 1e-9)
        side = span.max()
        mid = 0.5 * (lo + hi)
        return mid - side / 2, mid + side / 2


def clip_ray(base, direction, lo, hi) -> tuple[np.ndarray, np.ndarray] | None:
    """Part of ``base + t d`` (t >= 0) inside the box, by Liang-Barsky; None if it misses."""
    base = np.asarray(base, float)
    d = np.asarray(direction, float)
    t0, t1 = 0.0, np.inf
    for i in range(2):
        if d[i] == 0:
            if base[i] < lo[i] or base[i] > hi[i]:
                return None
            continue
        a = (lo[i] - base[i]) / d[i]
        b = (hi[i] - base[i]) / d[i]
        if a > b:
            a, b = b, a
        t0, t1 = max(t0, a), min(t1, b)
    if t0 > t1 or not np.isfinite(t1):
        return None
    return base + t0 * d, base + t1 * d


def _fmt(x: float) -> str:
    s = f"{x:.2f}"
    return "0.00" if s == "-0.00" else s


class _Map:
    def __init__(self, lo, hi):
        side = float(max(hi - lo))
        self.lo = lo
        self.scale = SIZE * (1 - 2 * PAD) / side
        self.off = SIZE * PAD

    def __call__(self, p) -> tuple[str, str]:
        x = self.off + (p[0] - self.lo[0]) * self.scale
        y = SIZE - (self.off + (p[1] - self.lo[1]) * self.scale)
        return _fmt(x), _fmt(y)


def render_scene(scene: Scene) -> str:
    """Standalone SVG document; identical scenes give identical bytes."""
    if not scene.layers:
        raise EmptyScene("scene has no layers")
    lo, hi = scene.bounds()
    side = float(max(hi - lo))
    mid = 0.5 * (lo + hi)
    lo, hi = mid - side / 2, mid + side / 2
    M = _Map(lo, hi)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">',
        f'<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="#ffffff"/>',
    ]
    if scene.title:
        out.append(f'<title>{_escape(scene.title)}</title>')
    vlo = lo - PAD / (1 - 2 * PAD) * side
    vhi = hi + PAD / (1 - 2 * PAD) * side
    for layer in scene.layers:
        style = STYLES[layer.style]
        out.append(f'<g class="{layer.style}">')
        if layer.kind == "polygon":
            pts = np.asarray(layer.geometry, float).reshape(-1, 2)
            d = "M " + " L ".join(" ".join(M(p)) for p in pts) + " Z"
            out.append(f'<path d="{d}" {style}/>')
        elif layer.kind == "segments":
            for a, b in np.asarray(layer.geometry, float).reshape(-1, 2, 2):
                (x1, y1), (x2, y2) = M(a), M(b)
                out.append(f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" {style}/>')
        elif layer.kind == "rays":
            for base, d in layer.geometry:
                seg = clip_ray(base, d, vlo, vhi)
                if seg is None:
                    continue
                (x1, y1), (x2, y2) = M(seg[0]), M(seg[1])
                out.append(f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" {style}/>')
        elif layer.kind == "points":
            r = POINT_RADIUS.get(layer.style, 2.0)
            for p in np.asarray(layer.geometry, float).reshape(-1, 2):
                x, y = M(p)
                out.append(f'<circle cx="{x}" cy="{y}" r="{r}" {style}/>')
        elif layer.kind == "arrows":
            for a, b in layer.geometry:
                (x1, y1), (x2, y2) = M(a), M(b)
                out.append(f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" {style}/>')
                out.append(f'<circle cx="{x2}" cy="{y2}" r="1.2" fill="#7b3fa0"/>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def polygon_of(vertices: Sequence) -> np.ndarray:
    """Vertices of a convex polygon in counter-clockwise order."""
    V = np.asarray(vertices, float)
    c = V.mean(axis=0)
    ang = np.arctan2(V[:, 1] - c[1], V[:, 0] - c[0])
    return V[np.argsort(ang, kind="stable")]


def lift_1d(points) -> np.ndarray:
    """Embed 1D data on the horizontal axis for drawing."""
    p = np.asarray(points, float).reshape(-1, 1)
    return np.hstack([p, np.zeros_like(p)])

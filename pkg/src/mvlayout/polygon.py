"""Small planar polygon toolkit: area, containment, ray casting, simplicity."""

from __future__ import annotations

import numpy as np

PARALLEL_EPS = 1e-12


def as_polygon(vertices) -> np.ndarray:
    p = np.asarray(vertices, dtype=float)
    if p.ndim != 2 or p.shape[1] != 2:
        raise ValueError("polygon must be an (N, 2) array")
    return p


def _next(a: np.ndarray) -> np.ndarray:
    # np.roll(a, -1, axis=0) without its per-call overhead
    return np.concatenate((a[1:], a[:1]))


def signed_area(poly) -> float:
    p = as_polygon(poly)
    x, z = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, _next(z)) - np.dot(_next(x), z))


def area(poly) -> float:
    """Shoelace area of a simple polygon."""
    return abs(signed_area(poly))


def edges(poly):
    p = as_polygon(poly)
    return p, _next(p)


def contains(poly, pts) -> np.ndarray:
    """Even-odd point-in-polygon test, vectorised over ``pts``."""
    a, b = edges(poly)
    q = np.atleast_2d(np.asarray(pts, dtype=float))
    x, z = q[:, 0:1], q[:, 1:2]
    az, bz = a[:, 1][None, :], b[:, 1][None, :]
    ax, bx = a[:, 0][None, :], b[:, 0][None, :]
    straddle = (az > z) != (bz > z)
    with np.errstate(divide="ignore", invalid="ignore"):
        xc = ax + (z - az) * (bx - ax) / (bz - az)
    hit = straddle & (x < xc)
    return (np.count_nonzero(hit, axis=1) % 2) == 1


def distance_to_boundary(poly, pts) -> np.ndarray:
    """Euclidean distance from each point to the nearest polygon edge."""
    a, b = edges(poly)
    q = np.atleast_2d(np.asarray(pts, dtype=float))[:, None, :]
    e = (b - a)[None, :, :]
    ee = np.maximum(np.sum(e * e, axis=2), 1e-300)
    t = np.clip(np.sum((q - a[None]) * e, axis=2) / ee, 0.0, 1.0)
    proj = a[None] + t[..., None] * e
    d = q - proj
    return np.min(np.hypot(d[..., 0], d[..., 1]), axis=1)


def ray_hits(origin, directions, poly) -> np.ndarray:
    """Distance to the nearest edge along each unit direction from ``origin``.

    Parallel edges (|cross| < 1e-12) never count as hits. A ray through a
    vertex hits both adjacent edges at the same distance and the minimum is
    taken, so vertices are never double- or zero-counted. Rays that miss
    every edge give ``inf``.
    """
    a, b = edges(poly)
    o = np.asarray(origin, dtype=float)
    u = np.atleast_2d(np.asarray(directions, dtype=float))[:, None, :]
    e = (b - a)[None, :, :]
    w = (a - o)[None, :, :]
    denom = u[..., 0] * e[..., 1] - u[..., 1] * e[..., 0]
    ok = np.abs(denom) >= PARALLEL_EPS
    safe = np.where(ok, denom, 1.0)
    t = (w[..., 0] * e[..., 1] - w[..., 1] * e[..., 0]) / safe
    s = (w[..., 0] * u[..., 1] - w[..., 1] * u[..., 0]) / safe
    hit = ok & (t > 0) & (s >= -1e-12) & (s <= 1 + 1e-12)
    return np.min(np.where(hit, t, np.inf), axis=1)


def _orient(p, q, r):
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])


def segments_cross(p1, p2, q1, q2, eps: float = 1e-12) -> bool:
    """True when the closed segments p1p2 and q1q2 share a point."""
    d1 = _orient(q1, q2, p1)
    d2 = _orient(q1, q2, p2)
    d3 = _orient(p1, p2, q1)
    d4 = _orient(p1, p2, q2)
    if ((d1 > eps and d2 < -eps) or (d1 < -eps and d2 > eps)) and (
        (d3 > eps and d4 < -eps) or (d3 < -eps and d4 > eps)
    ):
        return True

    def on_seg(a, b, c, d):
        return abs(d) <= eps and min(a[0], b[0]) - eps <= c[0] <= max(a[0], b[0]) + eps and \
            min(a[1], b[1]) - eps <= c[1] <= max(a[1], b[1]) + eps

    return on_seg(q1, q2, p1, d1) or on_seg(q1, q2, p2, d2) or on_seg(p1, p2, q1, d3) or on_seg(p1, p2, q2, d4)


def segment_crosses_open(p1, p2, q1, q2, eps: float = 1e-9) -> bool:
    """Proper crossing: the segments intersect at a point interior to both."""
    d1 = _orient(q1, q2, p1)
    d2 = _orient(q1, q2, p2)
    d3 = _orient(p1, p2, q1)
    d4 = _orient(p1, p2, q2)
    return ((d1 > eps and d2 < -eps) or (d1 < -eps and d2 > eps)) and (
        (d3 > eps and d4 < -eps) or (d3 < -eps and d4 > eps)
    )


def is_simple(poly) -> bool:
    """No two non-adjacent edges touch and no edge has zero length."""
    a, b = edges(poly)
    n = len(a)
    if n < 3 or np.any(np.linalg.norm(b - a, axis=1) <= 1e-12):
        return False
    for i in range(n):
        for j in range(i + 1, n):
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            if segments_cross(a[i], b[i], a[j], b[j]):
                return False
    return True

"""1D cost volumes over longitude columns and depth planes.

Each view's per-column features are splatted into the reference view's
(column, depth plane) grid at the location of that view's pose-aligned
boundary point. The cost of a cell is the population variance of the
features that the contributing views put there; the depth of a column is
the centre of its lowest-cost plane.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .errors import InvalidArgument
from .geometry import (
    CameraPose,
    HorizonDepth,
    LongitudeGrid,
    Points3D,
    column_of_angle,
    d2l,
    depth_to_points,
    transform_points,
)
from .simulator import RoomScene, render_depth, rng_for, view_directions

PLANE_MODES = ("radial", "strict-z")


@dataclass(frozen=True)
class DepthPlanes:
    """``count`` equal slices of the normalised range ``[0, 1)``; ``d_max`` metres map to 1."""

    count: int = 64
    d_max: float = 10.0

    def __post_init__(self):
        if int(self.count) != self.count or self.count < 2:
            raise InvalidArgument("need at least two depth planes")
        if not self.d_max > 0:
            raise InvalidArgument("d_max must be > 0")

    @property
    def width_m(self) -> float:
        return self.d_max / self.count

    def centers_m(self) -> np.ndarray:
        return (np.arange(self.count) + 0.5) / self.count * self.d_max


def default_d_max(scene: RoomScene) -> float:
    return 2.0 * scene.max_extent()


@dataclass(frozen=True, eq=False)
class CostVolume:
    values: np.ndarray  # (C, W, D), +inf where nothing contributed
    count: np.ndarray   # (W, D) number of contributing views
    d_max: float
    h_ref: float

    @property
    def support_mask(self) -> np.ndarray:
        return self.count > 0

    @property
    def shape(self):
        return self.values.shape


def align_points(
    depths: Sequence[HorizonDepth],
    poses: Sequence[CameraPose],
    ref: int,
    g: LongitudeGrid,
    visibility_gate: float | None = None,
) -> List[Points3D]:
    """Every view's floor points expressed in view ``ref``, normalised by its height.

    With ``visibility_gate`` set, points of other views lying more than that
    fraction behind the reference view's own depth in their column are
    marked invalid (they sit on walls the reference camera cannot see).
    """
    if len(depths) != len(poses):
        raise InvalidArgument("need one pose per depth sequence")
    if not 0 <= ref < len(depths):
        raise InvalidArgument(f"unknown reference view {ref!r}")
    target = poses[ref]
    own = depths[ref]
    out = []
    for v, (d, p) in enumerate(zip(depths, poses)):
        if v == ref:
            out.append(depth_to_points(d, g))
            continue
        s = d2l(d, p, g)
        pts = np.where(s.valid[:, None], s.points, 0.0)
        local = transform_points(transform_points(pts, p, "to_world"), target, "to_view") / target.h
        valid = s.valid.copy()
        if visibility_gate is not None:
            col = column_of_angle(np.arctan2(local[:, 0], local[:, 1]), d.width)
            behind = own.valid[col] & (np.hypot(local[:, 0], local[:, 1]) > own.depths[col] * (1.0 + visibility_gate))
            valid &= ~behind
        xyz = np.stack([local[:, 0], np.ones(d.width), local[:, 1]], axis=1)
        out.append(Points3D(np.where(valid[:, None], xyz, np.nan), valid))
    return out


def plane_coordinates(p: Points3D, h_ref: float, d_max: float, mode: str = "radial") -> np.ndarray:
    x, z = p.xyz[:, 0], p.xyz[:, 2]
    if mode == "radial":
        return np.hypot(x, z) * h_ref / d_max
    if mode == "strict-z":
        return np.maximum(z, 0.0) * h_ref / d_max
    raise InvalidArgument(f"unknown plane mode {mode!r}")


def _splat(feat: np.ndarray, p: Points3D, planes: DepthPlanes, h_ref: float, mode: str):
    """Mean feature per (column, plane) cell for one view, plus the hit mask."""
    C, W = feat.shape
    coord = plane_coordinates(p, h_ref, planes.d_max, mode)
    ok = p.valid & np.isfinite(coord) & (coord >= 0) & (coord < 1)
    src = np.flatnonzero(ok)
    col = column_of_angle(np.arctan2(p.xyz[src, 0], p.xyz[src, 2]), W)
    k = np.floor(coord[src] * planes.count).astype(np.int64)
    cell = col * planes.count + k
    n = np.bincount(cell, minlength=W * planes.count).astype(float)
    acc = np.zeros((C, W * planes.count))
    for c in range(C):
        acc[c] = np.bincount(cell, weights=feat[c, src], minlength=W * planes.count)
    hit = n > 0
    mean = np.zeros_like(acc)
    mean[:, hit] = acc[:, hit] / n[hit]
    return mean.reshape(C, W, planes.count), hit.reshape(W, planes.count)


def build_cost_volume(
    features: Sequence[np.ndarray],
    aligned: Sequence[Points3D],
    planes: DepthPlanes,
    h_ref: float,
    mode: str = "radial",
) -> CostVolume:
    """Variance-aggregated cost volume for one reference view.

    ``features[v]`` is a ``(C, W)`` array for view ``v`` and ``aligned[v]``
    its points in the reference frame (see :func:`align_points`). A cell's
    cost is the population variance over the views that hit it; cells no
    view hits cost ``+inf``.
    """
    if len(features) != len(aligned):
        raise InvalidArgument("need one aligned point set per feature sequence")
    if len(features) < 2:
        raise InvalidArgument("a cost volume needs at least two views")
    feats = [np.asarray(f, dtype=float) for f in features]
    C, W = feats[0].shape
    for f, p in zip(feats, aligned):
        if f.shape != (C, W) or p.xyz.shape[0] != W:
            raise InvalidArgument("feature and point widths must agree across views")
        if not np.all(np.isfinite(f)):
            raise InvalidArgument("features must be finite")

    splats = [_splat(f, p, planes, h_ref, mode) for f, p in zip(feats, aligned)]
    # Deviations from the first contributor of each cell are exactly zero
    # when all contributors agree, so such cells get a variance of exactly 0.
    count = np.zeros((W, planes.count), dtype=np.int64)
    anchor = np.zeros((C, W, planes.count))
    total = np.zeros((C, W, planes.count))
    for mean, hit in splats:
        first = hit & (count == 0)
        anchor = np.where(first, mean, anchor)
        count += hit
        total += np.where(hit, mean - anchor, 0.0)
    has = count > 0
    avg = np.where(has, total / np.maximum(count, 1), 0.0)
    var = np.zeros_like(total)
    for mean, hit in splats:
        var += np.where(hit, (mean - anchor - avg) ** 2, 0.0)
    cost = np.where(has, var / np.maximum(count, 1), np.inf)
    return CostVolume(cost, count, planes.d_max, float(h_ref))


def extract_depth(c: CostVolume, planes: DepthPlanes, min_views: int = 2) -> HorizonDepth:
    """Lowest-cost plane per column, as horizon depth of the reference view.

    Costs are averaged over channels, and only cells hit by at least
    ``min_views`` views compete; a cell with one contributor has zero
    variance by construction and says nothing about agreement. Ties go to
    the nearer plane. Columns without an eligible cell are invalid.
    """
    if c.values.shape[2] != planes.count:
        raise InvalidArgument("cost volume and plane count disagree")
    cost = np.where(c.count >= min_views, c.values.mean(axis=0), np.inf)
    k = np.argmin(cost, axis=1)
    valid = np.isfinite(cost[np.arange(cost.shape[0]), k])
    depth = (k + 0.5) / planes.count * planes.d_max / c.h_ref
    return HorizonDepth(np.where(valid, depth, np.nan), valid)


def confidence_alpha(support) -> np.ndarray:
    """Per-column cost-volume weight ``s / (s + 1)``."""
    s = np.asarray(support, dtype=float)
    return s / (s + 1.0)


def fuse_depth(d_cost: HorizonDepth, d: HorizonDepth, alpha=0.5) -> HorizonDepth:
    """Convex blend ``alpha * d_cost + (1 - alpha) * d``.

    ``alpha`` is a scalar or a per-column array in ``[0, 1]``. Where only one
    input is valid it is returned unchanged.
    """
    if d_cost.width != d.width:
        raise InvalidArgument("depth widths differ")
    a = np.broadcast_to(np.asarray(alpha, dtype=float), (d.width,))
    if np.any(~np.isfinite(a)) or np.any(a < 0) or np.any(a > 1):
        raise InvalidArgument("alpha must lie in [0, 1]")
    both = d_cost.valid & d.valid
    out = np.where(d.valid, d.depths, d_cost.depths)
    out = np.where(both, a * d_cost.depths + (1.0 - a) * d.depths, out)
    return HorizonDepth(out, d_cost.valid | d.valid)


_FEATURE_TABLE_SEED = 0x5EED_F00D


def _channel_params(channels: int):
    rng = rng_for(_FEATURE_TABLE_SEED, channels)
    freq = rng.uniform(0.8, 2.5, size=(channels, 2)) * rng.choice([-1.0, 1.0], size=(channels, 2))
    phase = rng.uniform(0, 2 * np.pi, size=channels)
    return freq, phase


def geometric_features(world_points: np.ndarray, channels: int) -> np.ndarray:
    """``(C, N)`` smooth features of world floor points; identical points get identical features."""
    freq, phase = _channel_params(channels)
    arg = world_points @ freq.T + phase
    return np.sin(arg).T


def synth_features(scene: RoomScene, g: LongitudeGrid, channels: int = 8, mode: str = "geometric",
                   seed: int = 0, noise: float = 0.1) -> List[np.ndarray]:
    """Stand-in backbone features: one ``(C, W)`` array per camera in ``scene``.

    Each column's features depend only on the world point of the wall that
    column sees, so co-visible columns in different views agree exactly.
    ``random`` mode adds per-view Gaussian noise of std ``noise``.
    """
    if channels < 1:
        raise InvalidArgument("need at least one feature channel")
    if mode not in ("geometric", "random"):
        raise InvalidArgument(f"unknown feature mode {mode!r}")
    out = []
    for v, pose in enumerate(scene.poses):
        d = render_depth(scene, pose, g)
        world = pose.t + view_directions(pose, g) * (d.depths * pose.h)[:, None]
        f = geometric_features(world, channels)
        if mode == "random" and noise > 0:
            f = f + noise * rng_for(seed, 3, v).standard_normal(f.shape)
        out.append(f)
    return out


def summary_csv(c: CostVolume, min_views: int = 2) -> str:
    """``column, argmin plane, min cost, support count`` for every column."""
    cost = np.where(c.count >= min_views, c.values.mean(axis=0), np.inf)
    k = np.argmin(cost, axis=1)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["column", "argmin_plane", "min_cost", "support"])
    for j, kj in enumerate(k):
        best = cost[j, kj]
        if np.isfinite(best):
            w.writerow([j, int(kj), f"{best:.6f}", int(c.count[j, kj])])
        else:
            w.writerow([j, "", "", 0])
    return buf.getvalue()

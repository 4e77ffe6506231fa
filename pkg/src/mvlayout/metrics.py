"""Layout evaluation metrics against simulator ground truth.

Polygon overlap is computed by scanline rasterisation: the union bounding
box is cut into ``resolution`` horizontal strips, and along the centre line
of each strip the inside intervals of both polygons are found exactly from
edge crossings. The error is therefore confined to the strip direction and
bounded by roughly ``perimeter * strip_height``. Single-polygon areas use
the shoelace formula.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import List, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import polygon as pg
from .errors import InvalidArgument
from .geometry import BoundarySamples, HorizonDepth, latitude_rows, project_to_image


@dataclass(frozen=True)
class MetricReport:
    iou2d: float
    iou3d: float
    rmse: float
    delta1: float
    ce: float
    pe: float

    def as_row(self) -> List[str]:
        return [f"{v:.6f}" for v in asdict(self).values()]


def _check_polygon(poly) -> np.ndarray:
    p = pg.as_polygon(poly)
    if len(p) < 3 or not pg.area(p) > 0 or not np.all(np.isfinite(p)):
        raise InvalidArgument("degenerate polygon")
    return p


def _row_intervals(poly: np.ndarray, ys: np.ndarray) -> List[np.ndarray]:
    a, b = pg.edges(poly)
    az, bz = a[:, 1][None, :], b[:, 1][None, :]
    y = ys[:, None]
    straddle = (az > y) != (bz > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xc = a[:, 0][None, :] + (y - az) * (b[:, 0] - a[:, 0])[None, :] / (bz - az)
    out = []
    for row, mask in zip(xc, straddle):
        xs = np.sort(row[mask])
        out.append(xs.reshape(-1, 2))
    return out


def _overlap_length(p: np.ndarray, q: np.ndarray) -> float:
    total = 0.0
    i = j = 0
    while i < len(p) and j < len(q):
        lo = max(p[i, 0], q[j, 0])
        hi = min(p[i, 1], q[j, 1])
        if hi > lo:
            total += hi - lo
        if p[i, 1] < q[j, 1]:
            i += 1
        else:
            j += 1
    return total


def intersection_area(a, b, resolution: int = 512) -> float:
    """Rasterised area of the overlap of two simple polygons."""
    pa, pb = _check_polygon(a), _check_polygon(b)
    lo = np.minimum(pa.min(axis=0), pb.min(axis=0))
    hi = np.maximum(pa.max(axis=0), pb.max(axis=0))
    if (pa[:, 0].max() <= pb[:, 0].min() or pb[:, 0].max() <= pa[:, 0].min()
            or pa[:, 1].max() <= pb[:, 1].min() or pb[:, 1].max() <= pa[:, 1].min()):
        return 0.0
    dy = (hi[1] - lo[1]) / resolution
    ys = lo[1] + (np.arange(resolution) + 0.5) * dy
    ia = _row_intervals(pa, ys)
    ib = _row_intervals(pb, ys)
    return dy * sum(_overlap_length(x, y) for x, y in zip(ia, ib))


def iou2d(pred, gt, resolution: int = 512) -> float:
    inter = intersection_area(pred, gt, resolution)
    union = pg.area(pred) + pg.area(gt) - inter
    return float(min(max(inter / union, 0.0), 1.0))


def iou3d(pred, pred_height: float, gt, gt_height: float, resolution: int = 512) -> float:
    """IoU of the two footprints extruded from a shared floor to their heights."""
    if not (pred_height > 0 and gt_height > 0):
        raise InvalidArgument("room heights must be > 0")
    inter = intersection_area(pred, gt, resolution) * min(pred_height, gt_height)
    union = pg.area(pred) * pred_height + pg.area(gt) * gt_height - inter
    return float(min(max(inter / union, 0.0), 1.0))


def _shared(d: HorizonDepth, d_hat: HorizonDepth) -> np.ndarray:
    if d.width != d_hat.width:
        raise InvalidArgument("depth widths differ")
    m = d.valid & d_hat.valid
    if not m.any():
        raise InvalidArgument("no shared valid column")
    return m


def rmse(d: HorizonDepth, d_hat: HorizonDepth) -> float:
    m = _shared(d, d_hat)
    return float(np.sqrt(np.mean((d.depths[m] - d_hat.depths[m]) ** 2)))


def delta_acc(d: HorizonDepth, d_hat: HorizonDepth, threshold: float = 1.25) -> float:
    m = _shared(d, d_hat)
    a, b = d.depths[m], d_hat.depths[m]
    return float(np.mean(np.maximum(a / b, b / a) < threshold))


def _point_line_distance(pts: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    e = b - a
    n = math.hypot(e[0], e[1])
    if n == 0:
        return np.hypot(pts[:, 0] - a[0], pts[:, 1] - a[1])
    return np.abs(e[0] * (pts[:, 1] - a[1]) - e[1] * (pts[:, 0] - a[0])) / n


def _douglas_peucker(pts: np.ndarray, tol: float) -> List[int]:
    keep = {0, len(pts) - 1}
    stack = [(0, len(pts) - 1)]
    while stack:
        i, j = stack.pop()
        if j <= i + 1:
            continue
        dist = _point_line_distance(pts[i + 1:j], pts[i], pts[j])
        k = int(np.argmax(dist))
        if dist[k] > tol:
            m = i + 1 + k
            keep.add(m)
            stack.extend([(i, m), (m, j)])
    return sorted(keep)


def extract_corners(s: BoundarySamples, tolerance: float = 0.05) -> np.ndarray:
    """Corners of a closed boundary by Douglas-Peucker simplification.

    The loop is split at the first valid sample and the sample farthest from
    it; afterwards any kept sample lying within ``tolerance`` of the chord
    through its neighbours is dropped, so the split points do not survive
    as fake corners. Corners come back in column order.
    """
    idx = np.flatnonzero(s.valid)
    if idx.size < 8:
        raise InvalidArgument("need at least 8 valid boundary samples")
    pts = s.points[idx]
    if tolerance <= 0:
        return pts.copy()
    far = int(np.argmax(np.hypot(*(pts - pts[0]).T)))
    first = _douglas_peucker(pts[: far + 1], tolerance)
    loop = np.concatenate([pts[far:], pts[:1]])
    second = [far + i for i in _douglas_peucker(loop, tolerance)[1:-1]]
    keep = sorted(set(first) | set(second))
    changed = True
    while changed and len(keep) > 3:
        changed = False
        for n in range(len(keep)):
            prev, cur, nxt = keep[n - 1], keep[n], keep[(n + 1) % len(keep)]
            if _point_line_distance(pts[cur][None], pts[prev], pts[nxt])[0] <= tolerance:
                keep.pop(n)
                changed = True
                break
    return pts[keep]


def _corner_pixels(corners: np.ndarray, r: float, image_w: int, image_h: int, h: float) -> np.ndarray:
    c = np.asarray(corners, dtype=float).reshape(-1, 2)
    theta = np.arctan2(c[:, 0], c[:, 1])
    u = (theta / (2 * np.pi) + 0.5) * image_w
    floor_row, ceil_row = latitude_rows(np.hypot(c[:, 0], c[:, 1]) / h, r, image_h)
    return np.concatenate([np.stack([u, floor_row], 1), np.stack([u, ceil_row], 1)])


def corner_error(pred_corners, gt_corners, image_w: int, image_h: int, r: float, r_gt: float | None = None,
                 h: float = 1.0) -> float:
    """Normalised pixel distance between optimally matched floor and ceiling corners.

    Corners are view-frame floor points (divided by ``h``) and each gives a
    floor and a ceiling pixel. Pixels are matched by the Hungarian method
    with horizontal wrap-around; each unmatched pixel costs one image
    diagonal. The sum is divided by the diagonal times the larger pixel count.
    """
    if len(pred_corners) == 0 or len(gt_corners) == 0:
        raise InvalidArgument("corner lists must be non-empty")
    r_gt = r if r_gt is None else r_gt
    p = _corner_pixels(pred_corners, r, image_w, image_h, h)
    q = _corner_pixels(gt_corners, r_gt, image_w, image_h, h)
    du = np.abs(p[:, None, 0] - q[None, :, 0])
    du = np.minimum(du, image_w - du)
    dv = p[:, None, 1] - q[None, :, 1]
    dist = np.hypot(du, dv)
    rows, cols = linear_sum_assignment(dist)
    diag = math.hypot(image_w, image_h)
    unmatched = max(len(p), len(q)) - len(rows)
    return float((dist[rows, cols].sum() + unmatched * diag) / (diag * max(len(p), len(q))))


def _class_map(floor_row: np.ndarray, ceil_row: np.ndarray, image_h: int) -> np.ndarray:
    v = np.arange(image_h)[:, None] + 0.5
    cls = np.ones((image_h, floor_row.shape[0]), dtype=np.int8)
    cls[v < ceil_row[None, :]] = 0
    cls[v > floor_row[None, :]] = 2
    return cls


def pixel_error(d_pred: HorizonDepth, r_pred: float, d_gt: HorizonDepth, r_gt: float, image_h: int = 512) -> float:
    """Fraction of pixels whose ceiling/wall/floor class differs.

    Only columns valid in both inputs are compared.
    """
    m = _shared(d_pred, d_gt)
    fp, cp = project_to_image(d_pred, r_pred, image_h)
    fg, cg = project_to_image(d_gt, r_gt, image_h)
    a = _class_map(fp[m], cp[m], image_h)
    b = _class_map(fg[m], cg[m], image_h)
    return float(np.count_nonzero(a != b) / a.size)


def boundary_polygon(s: BoundarySamples) -> np.ndarray:
    """Valid boundary samples as a polygon (counter-clockwise)."""
    pts = s.points[s.valid]
    if len(pts) < 3:
        raise InvalidArgument("need at least three valid samples for a polygon")
    return pts if pg.signed_area(pts) > 0 else pts[::-1]


def mean_report(reports: Sequence[MetricReport]) -> MetricReport:
    arr = np.array([list(asdict(r).values()) for r in reports])
    return MetricReport(*[float(x) for x in arr.mean(axis=0)])

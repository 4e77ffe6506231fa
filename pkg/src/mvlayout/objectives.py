"""Scalar training objectives for layout pre-training and pseudo-label fine-tuning.

All sigma-weighted terms divide by ``max(sigma, floor) ** 2`` so columns
where every view agreed exactly do not produce infinite weights.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .consensus import SIGMA_FLOOR
from .errors import InvalidArgument
from .geometry import HorizonDepth, ceiling_points, depth_to_points, longitude_grid

log = logging.getLogger(__name__)

BCE_CLAMP = 1e-7


@dataclass(frozen=True)
class LossWeights:
    mu: float = 0.75
    lambda1: float = 0.1
    lambda2: float = 0.9
    lambda3: float = 0.08

    def __post_init__(self):
        if min(self.mu, self.lambda1, self.lambda2, self.lambda3) < 0:
            raise InvalidArgument("loss weights must be >= 0")


def bce(pred, gt) -> float:
    p = np.clip(np.asarray(pred, dtype=float), BCE_CLAMP, 1 - BCE_CLAMP)
    g = np.asarray(gt, dtype=float)
    if p.shape != g.shape:
        raise InvalidArgument("prediction and label lengths differ")
    return float(-np.mean(g * np.log(p) + (1 - g) * np.log(1 - p)))


def pretrain_loss(l_seg: float, l_lay: float, w: LossWeights = LossWeights()) -> float:
    return math.fsum([w.mu * l_seg, l_lay])


def finetune_loss(ln: float, lg: float, ld: float, lr: float, w: LossWeights = LossWeights()) -> float:
    # fsum rounds the exact sum once, so (1, 1, 1, 1) gives exactly 1.18.
    return math.fsum([w.lambda1 * ln, w.lambda1 * lg, w.lambda2 * ld, w.lambda3 * lr])


def _weights(sigma, n: int, floor: float) -> np.ndarray:
    if sigma is None:
        return np.ones(n)
    s = np.asarray(sigma, dtype=float)
    if s.shape != (n,):
        raise InvalidArgument(f"sigma has shape {s.shape}, expected ({n},)")
    if np.any(s < 0):
        raise InvalidArgument("sigma must be >= 0")
    return 1.0 / np.maximum(s, floor) ** 2


def sigma_weight(x, sigma, floor: float = SIGMA_FLOOR) -> np.ndarray:
    """Element-wise ``x / max(sigma, floor)**2``."""
    x = np.asarray(x, dtype=float)
    if np.shape(sigma) != x.shape:
        raise InvalidArgument("x and sigma lengths differ")
    return x * _weights(sigma, x.shape[0], floor)


def _shared_mask(d: HorizonDepth, d_hat: HorizonDepth) -> np.ndarray:
    if d.width != d_hat.width:
        raise InvalidArgument("depth widths differ")
    m = d.valid & d_hat.valid
    if not m.any():
        raise InvalidArgument("prediction and target share no valid column")
    return m


def weighted_depth_loss(d: HorizonDepth, d_hat: HorizonDepth, sigma=None, floor: float = SIGMA_FLOOR) -> float:
    """Mean absolute difference of sigma-weighted depths over shared valid columns."""
    m = _shared_mask(d, d_hat)
    w = _weights(sigma, d.width, floor)
    return float(np.mean(np.abs(d.depths[m] - d_hat.depths[m]) * w[m]))


def _segment_normals(d: HorizonDepth):
    """Unit floor-plane normals of the segments between columns ``i`` and ``i + 1``."""
    g = longitude_grid(d.width)
    p = depth_to_points(d, g).xyz[:, [0, 2]]
    e = np.roll(p, -1, axis=0) - p
    length = np.hypot(e[:, 0], e[:, 1])
    n = np.stack([e[:, 1], -e[:, 0]], axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        n = n / length[:, None]
    ok = d.valid & np.roll(d.valid, -1) & (length > 0)
    return n, ok


def _normal_terms(d: HorizonDepth, d_hat: HorizonDepth):
    _shared_mask(d, d_hat)
    n, ok = _segment_normals(d)
    nh, ok_h = _segment_normals(d_hat)
    ok = ok & ok_h
    degenerate = int(np.count_nonzero((d.valid & d_hat.valid) & ~ok & np.roll(d.valid & d_hat.valid, -1)))
    if degenerate:
        log.info("skipping %d zero-length boundary segments", degenerate)
    if np.count_nonzero(ok) < 2:
        raise InvalidArgument("need at least three consecutive valid columns")
    return n, nh, ok


def normal_loss(d: HorizonDepth, d_hat: HorizonDepth, sigma=None, floor: float = SIGMA_FLOOR) -> float:
    """Mean cosine dissimilarity ``1 - <n, n_hat>`` of boundary segment normals."""
    n, nh, ok = _normal_terms(d, d_hat)
    w = _weights(sigma, d.width, floor)
    term = 1.0 - np.sum(n * nh, axis=1)
    return float(np.mean(np.maximum(term[ok], 0.0) * w[ok]))


def _turn(n: np.ndarray) -> np.ndarray:
    m = np.roll(n, -1, axis=0)
    return np.arctan2(n[:, 0] * m[:, 1] - n[:, 1] * m[:, 0], np.sum(n * m, axis=1))


def normal_gradient_loss(d: HorizonDepth, d_hat: HorizonDepth, sigma=None, floor: float = SIGMA_FLOOR) -> float:
    """Mean absolute difference of the turning angle between consecutive normals."""
    n, nh, ok = _normal_terms(d, d_hat)
    pair = ok & np.roll(ok, -1)
    if not pair.any():
        raise InvalidArgument("need at least three consecutive valid columns")
    w = _weights(sigma, d.width, floor)
    diff = np.abs(_turn(n) - _turn(nh))
    return float(np.mean(diff[pair] * w[pair]))


def ceiling3d_loss(d: HorizonDepth, r_pred: float, d_pseudo: HorizonDepth, r_pseudo: float, sigma=None,
                   floor: float = SIGMA_FLOOR) -> float:
    """Mean sigma-weighted L1 distance between predicted and pseudo-label ceiling points.

    Both horizon depths are lifted to the ceiling (``y = -ratio``) and the
    absolute differences are averaged over the three axes and all shared
    valid columns.
    """
    if not (r_pred > 0 and r_pseudo > 0):
        raise InvalidArgument("ratios must be > 0")
    m = _shared_mask(d, d_pseudo)
    g = longitude_grid(d.width)
    c = ceiling_points(depth_to_points(d, g), r_pred).xyz[m]
    c_hat = ceiling_points(depth_to_points(d_pseudo, g), r_pseudo).xyz[m]
    w = _weights(sigma, d.width, floor)[m]
    return float(np.sum(np.abs(c - c_hat) * w[:, None]) / (3 * np.count_nonzero(m)))


def layout_loss(d: HorizonDepth, d_hat: HorizonDepth, r_pred: float, r_gt: float, w: LossWeights = LossWeights()) -> float:
    """Layout term of pre-training: the fine-tuning combination with sigma fixed at 1."""
    ones = np.ones(d.width)
    return finetune_loss(
        normal_loss(d, d_hat, ones),
        normal_gradient_loss(d, d_hat, ones),
        weighted_depth_loss(d, d_hat, ones),
        ceiling3d_loss(d, r_pred, d_hat, r_gt, ones),
        w,
    )


def loss_parts(d: HorizonDepth, r_pred: float, d_pseudo: HorizonDepth, r_pseudo: float, sigma, w: LossWeights = LossWeights()) -> dict:
    """All four fine-tuning terms and their weighted total."""
    parts = {
        "ln": normal_loss(d, d_pseudo, sigma),
        "lg": normal_gradient_loss(d, d_pseudo, sigma),
        "ld": weighted_depth_loss(d, d_pseudo, sigma),
        "lr": ceiling3d_loss(d, r_pred, d_pseudo, r_pseudo, sigma),
    }
    parts["total"] = finetune_loss(parts["ln"], parts["lg"], parts["ld"], parts["lr"], w)
    return parts

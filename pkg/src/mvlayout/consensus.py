"""Multi-view pseudo-label generation from registered horizon-depth predictions.

Every view's prediction is turned into floor-plane boundary points, moved to
the shared world frame, and re-expressed in each reference view. There the
points are binned by longitude and reduced column by column with a robust
aggregate; the spread of each column's candidates becomes the confidence
``sigma`` used to weight fine-tuning losses. Unsupported columns are filled
along the boundary polyline before converting back to horizon depth.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .aggregation import ColumnAggregation, aggregate_column, aggregate_groups, as_aggregation  # noqa: F401
from .errors import InvalidArgument
from .geometry import (
    CameraPose,
    HorizonDepth,
    LongitudeGrid,
    d2l,
    longitude_grid,
    polar_bins,
    transform_points,
)

log = logging.getLogger(__name__)

SIGMA_FLOOR = 1e-3


@dataclass(frozen=True, eq=False)
class PseudoLabelSet:
    depths: List[HorizonDepth]
    sigma: List[np.ndarray]
    support: List[np.ndarray]
    supported: List[np.ndarray]
    strategy: str
    iterations: int

    def __len__(self):
        return len(self.depths)

    def view_dict(self, v: int) -> dict:
        return {
            "depths": [float(x) for x in self.depths[v].depths],
            "sigma": [float(x) for x in self.sigma[v]],
            "support": [int(x) for x in self.support[v]],
            "strategy": self.strategy,
            "iterations": self.iterations,
        }


def fill_invalid(d: HorizonDepth, g: LongitudeGrid | None = None) -> HorizonDepth:
    """Fill invalid runs by walking the straight chord between the valid ends.

    The two valid columns bracketing a run (circularly) are turned into
    floor points; each missing column takes the range at which its ray
    meets that chord. If the ray misses the chord (runs spanning half the
    panorama or more) the depth is interpolated linearly instead.
    """
    g = g or longitude_grid(d.width)
    if d.width != g.width:
        raise InvalidArgument("depth and grid widths differ")
    idx = np.flatnonzero(d.valid)
    if idx.size == 0:
        raise InvalidArgument("cannot fill a depth with no valid columns")
    if idx.size == d.width:
        return d
    out = d.depths.copy()
    if idx.size == 1:
        out[:] = d.depths[idx[0]]
        return HorizonDepth.full(out)

    W = d.width
    theta = g.angles
    unit = np.stack([np.sin(theta), np.cos(theta)], axis=1)
    pts = d.depths[:, None] * unit
    nxt = np.roll(idx, -1)
    for a, b in zip(idx, nxt):
        gap = (b - a) % W
        if gap <= 1:
            continue
        cols = (a + np.arange(1, gap)) % W
        pa, pb = pts[a], pts[b]
        e = pb - pa
        u = unit[cols]
        denom = u[:, 0] * e[1] - u[:, 1] * e[0]
        ok = np.abs(denom) > 1e-15
        safe = np.where(ok, denom, 1.0)
        t = (pa[0] * e[1] - pa[1] * e[0]) / safe
        s = (pa[0] * u[:, 1] - pa[1] * u[:, 0]) / safe
        ok &= (t > 0) & (s >= -1e-9) & (s <= 1 + 1e-9)
        frac = np.arange(1, gap) / gap
        linear = d.depths[a] + frac * (d.depths[b] - d.depths[a])
        out[cols] = np.where(ok, t, linear)
    return HorizonDepth.full(out)


def _check_inputs(depths: Sequence[HorizonDepth], poses: Sequence[CameraPose], g: LongitudeGrid):
    if len(depths) != len(poses):
        raise InvalidArgument("need one pose per depth sequence")
    if len(depths) < 2:
        raise InvalidArgument("pseudo-labels need at least two views")
    for d in depths:
        if d.width != g.width:
            raise InvalidArgument(f"depth width {d.width} does not match grid width {g.width}")


def world_samples(depths: Sequence[HorizonDepth], poses: Sequence[CameraPose], g: LongitudeGrid) -> List[np.ndarray]:
    """Valid boundary points of every view in world coordinates."""
    out = []
    for d, p in zip(depths, poses):
        s = d2l(d, p, g)
        out.append(transform_points(s.points[s.valid], p, "to_world"))
    return out


def consensus_round(depths, poses, g, cfg: ColumnAggregation, include_reference: bool = True,
                    visibility_gate: float | None = None):
    """One pass of registration, binning and aggregation for every view.

    ``visibility_gate`` enables a free-space test: a candidate from another
    view is dropped when it lies more than ``gate`` (relative) behind the
    reference view's own prediction in that column, since such points sit
    on walls the reference camera cannot see.
    """
    world = world_samples(depths, poses, g)
    result = []
    for v, pose in enumerate(poses):
        cols, rng = [], []
        for u, w in enumerate(world):
            if u == v and not include_reference:
                continue
            c, r = polar_bins(transform_points(w, pose, "to_view"), pose.h, g.width)
            if visibility_gate is not None and u != v:
                own = depths[v].depths[c]
                keep = ~depths[v].valid[c] | (r <= own * (1.0 + visibility_gate))
                c, r = c[keep], r[keep]
            cols.append(c)
            rng.append(r)
        value, sigma, support = aggregate_groups(np.concatenate(cols), np.concatenate(rng), g.width, cfg)
        supported = support >= cfg.min_support
        if not supported.any():
            raise InvalidArgument(f"view {v} has no column with support >= {cfg.min_support}")
        raw = HorizonDepth(np.where(supported, value, np.nan), supported)
        missing = g.width - int(supported.sum())
        if missing:
            log.debug("view %d: filling %d unsupported columns", v, missing)
        result.append((fill_invalid(raw, g), sigma, support, supported))
    return result


def generate_pseudo_labels(
    depths: Sequence[HorizonDepth],
    poses: Sequence[CameraPose],
    g: LongitudeGrid,
    cfg=ColumnAggregation(),
    iterations: int = 1,
    include_reference: bool = True,
    visibility_gate: float | None = None,
) -> PseudoLabelSet:
    """Consensus pseudo-labels and per-column sigma for every view.

    With ``iterations > 1`` each round's pseudo-labels become the next
    round's inputs; sigma and support describe the last round.
    """
    cfg = as_aggregation(cfg)
    _check_inputs(depths, poses, g)
    if iterations < 1:
        raise InvalidArgument("iterations must be >= 1")
    current = list(depths)
    rounds = None
    for _ in range(iterations):
        rounds = consensus_round(current, poses, g, cfg, include_reference, visibility_gate)
        current = [r[0] for r in rounds]
    return PseudoLabelSet(
        depths=[r[0] for r in rounds],
        sigma=[r[1] for r in rounds],
        support=[r[2] for r in rounds],
        supported=[r[3] for r in rounds],
        strategy=cfg.strategy,
        iterations=iterations,
    )


def consensus_ratio(ratios: Sequence[float], poses: Sequence[CameraPose]) -> List[float]:
    """Per-view ratios that agree on one room height.

    Each view's ratio implies a room height ``h * (1 + r)``; the median of
    those heights is converted back to a ratio for every camera.
    """
    if len(ratios) != len(poses):
        raise InvalidArgument("need one pose per ratio")
    heights = np.array([p.h * (1.0 + r) for r, p in zip(ratios, poses)])
    room = float(np.median(heights))
    return [room / p.h - 1.0 for p in poses]

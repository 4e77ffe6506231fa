"""Robust per-column aggregation of depth candidates.

Two entry points share one contract: :func:`aggregate_column` handles a
single list of candidates, :func:`aggregate_groups` handles many columns at
once from flat ``(column, value)`` arrays. The grouped version sorts values
inside each column first, so the result never depends on candidate order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .errors import InvalidArgument

STRATEGIES = ("median", "mean_after_mad", "nearest")


@dataclass(frozen=True)
class ColumnAggregation:
    """How candidates that fall into one column are reduced to one depth.

    ``median`` takes the median, ``mean_after_mad`` averages the candidates
    within ``mad_k`` raw MADs of the median, and ``nearest`` keeps the
    smallest depth (the visible surface). Columns with fewer than
    ``min_support`` candidates are flagged by the consensus layer.
    """

    strategy: str = "median"
    mad_k: float = 2.5
    min_support: int = 2

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise InvalidArgument(f"unknown aggregation strategy {self.strategy!r}")
        if not self.mad_k > 0:
            raise InvalidArgument("mad_k must be > 0")
        if int(self.min_support) != self.min_support or self.min_support < 1:
            raise InvalidArgument("min_support must be an integer >= 1")


def as_aggregation(agg) -> ColumnAggregation:
    if isinstance(agg, ColumnAggregation):
        return agg
    if isinstance(agg, str):
        return ColumnAggregation(strategy=agg)
    raise InvalidArgument(f"cannot interpret {agg!r} as a column aggregation")


def aggregate_column(candidates: Sequence[float], cfg=ColumnAggregation()) -> Tuple[float, float, int]:
    """Reduce one column's candidates to ``(value, sigma, support)``.

    ``sigma`` is the population standard deviation of the candidates that
    were used. An empty list gives ``(nan, 0.0, 0)``.
    """
    cfg = as_aggregation(cfg)
    c = np.sort(np.asarray(candidates, dtype=float))
    if c.size == 0:
        return float("nan"), 0.0, 0
    if cfg.strategy == "median":
        return float(np.median(c)), float(np.std(c)), int(c.size)
    if cfg.strategy == "nearest":
        return float(c[0]), float(np.std(c)), int(c.size)
    med = np.median(c)
    mad = np.median(np.abs(c - med))
    kept = c[np.abs(c - med) <= cfg.mad_k * mad]
    return float(np.mean(kept)), float(np.std(kept)), int(kept.size)


def _sorted_groups(columns: np.ndarray, values: np.ndarray, width: int):
    order = np.lexsort((values, columns))
    col = columns[order]
    val = values[order]
    counts = np.bincount(col, minlength=width)
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    return col, val, counts, starts


def _group_median(val: np.ndarray, counts: np.ndarray, starts: np.ndarray, has: np.ndarray) -> np.ndarray:
    out = np.full(counts.shape, np.nan)
    n = counts[has]
    s = starts[has]
    lo = val[s + (n - 1) // 2]
    hi = val[s + n // 2]
    out[has] = (lo + hi) / 2.0
    return out


def _group_mean_std(col: np.ndarray, val: np.ndarray, counts: np.ndarray, has: np.ndarray):
    # Sequential per-group sums keep results independent of group layout.
    mean = np.full(counts.shape, np.nan)
    std = np.zeros(counts.shape)
    sums = np.zeros(counts.shape)
    np.add.at(sums, col, val)
    mean[has] = sums[has] / counts[has]
    sq = np.zeros(counts.shape)
    np.add.at(sq, col, (val - mean[col]) ** 2)
    std[has] = np.sqrt(sq[has] / counts[has])
    return mean, std


def aggregate_groups(columns: np.ndarray, values: np.ndarray, width: int, cfg=ColumnAggregation()):
    """Vectorised :func:`aggregate_column` over ``width`` columns.

    Returns ``(value, sigma, support)`` arrays of length ``width``; empty
    columns have ``value = nan``, ``sigma = 0`` and ``support = 0``.
    """
    cfg = as_aggregation(cfg)
    columns = np.asarray(columns, dtype=np.int64)
    values = np.asarray(values, dtype=float)
    if columns.shape != values.shape:
        raise InvalidArgument("columns and values must have the same shape")
    if columns.size and (columns.min() < 0 or columns.max() >= width):
        raise InvalidArgument("column index out of range")

    col, val, counts, starts = _sorted_groups(columns, values, width)
    has = counts > 0
    if cfg.strategy in ("median", "nearest"):
        _, std = _group_mean_std(col, val, counts, has)
        if cfg.strategy == "median":
            value = _group_median(val, counts, starts, has)
        else:
            value = np.full(width, np.nan)
            value[has] = val[starts[has]]
        return value, std, counts.astype(np.int64)

    med = _group_median(val, counts, starts, has)
    dev = np.abs(val - med[col])
    _, dval, _, _ = _sorted_groups(col, dev, width)
    mad = _group_median(dval, counts, starts, has)
    keep = dev <= cfg.mad_k * mad[col]
    kcol, kval = col[keep], val[keep]
    kcounts = np.bincount(kcol, minlength=width)
    khas = kcounts > 0
    mean, std = _group_mean_std(kcol, kval, kcounts, khas)
    return mean, std, kcounts.astype(np.int64)

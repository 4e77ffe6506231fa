"""Coordinate conventions and conversions for horizon-depth layouts.

Conventions
-----------
* Column ``i`` of a ``W``-wide panorama looks along longitude
  ``theta_i = ((i + 0.5) / W - 0.5) * 2 * pi``.
* Camera-centred 3D points use ``y`` pointing at the floor, so the floor
  plane sits at ``y = 1`` once everything is divided by the camera height.
  The ray of column ``i`` hits the floor at ``(d sin theta, 1, d cos theta)``.
* Floor-plane points are ``(x, z)`` pairs. A pose rotates view points into
  the world with ``Rot(yaw) = [[cos, sin], [-sin, cos]]`` and then adds the
  camera translation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from .aggregation import ColumnAggregation, aggregate_groups
from .errors import InvalidArgument, NumericDomainError

VIEW = "view"
WORLD = "world"


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def normalize_angle(a: float) -> float:
    """Wrap an angle to ``(-pi, pi]``."""
    a = math.fmod(a, 2 * math.pi)
    if a <= -math.pi:
        a += 2 * math.pi
    elif a > math.pi:
        a -= 2 * math.pi
    return a


@dataclass(frozen=True, eq=False)
class LongitudeGrid:
    width: int
    angles: np.ndarray = field(repr=False)

    def __len__(self):
        return self.width


def longitude_grid(width: int) -> LongitudeGrid:
    """Column-centre longitudes of a ``width``-column panorama."""
    if int(width) != width or width < 4:
        raise InvalidArgument(f"grid width must be an integer >= 4, got {width!r}")
    width = int(width)
    i = np.arange(width, dtype=float)
    theta = ((i + 0.5) / width - 0.5) * 2 * np.pi
    return LongitudeGrid(width, _frozen(theta))


def column_of_angle(theta: np.ndarray, width: int) -> np.ndarray:
    """Index of the half-open column bin containing each longitude."""
    j = np.floor((np.asarray(theta) / (2 * np.pi) + 0.5) * width).astype(np.int64)
    return np.mod(j, width)


@dataclass(frozen=True, eq=False)
class HorizonDepth:
    """Per-column wall distance divided by camera height.

    Invalid columns hold ``nan``; anything reading ``depths`` must respect
    ``valid``.
    """

    depths: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        d = np.array(self.depths, dtype=float)
        v = np.array(self.valid, dtype=bool)
        if d.ndim != 1 or d.shape != v.shape:
            raise InvalidArgument("depths and valid must be 1-D arrays of equal length")
        if not np.all(np.isfinite(d[v]) & (d[v] > 0)):
            raise InvalidArgument("valid depths must be finite and > 0")
        d[~v] = np.nan
        object.__setattr__(self, "depths", _frozen(d))
        object.__setattr__(self, "valid", _frozen(v))

    @classmethod
    def full(cls, depths) -> "HorizonDepth":
        d = np.asarray(depths, dtype=float)
        return cls(d, np.ones(d.shape, dtype=bool))

    @property
    def width(self) -> int:
        return int(self.depths.shape[0])

    def roll(self, k: int) -> "HorizonDepth":
        return HorizonDepth(np.roll(self.depths, k), np.roll(self.valid, k))

    def to_dict(self, frame: str = VIEW) -> dict:
        return {
            "width": self.width,
            "depths": [float(x) if ok else None for x, ok in zip(self.depths, self.valid)],
            "valid": [bool(x) for x in self.valid],
            "frame": frame,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "HorizonDepth":
        try:
            width = int(obj["width"])
            valid = np.asarray(obj["valid"], dtype=bool)
            depths = np.array([np.nan if x is None else x for x in obj["depths"]], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidArgument(f"malformed horizon-depth record: {exc}") from exc
        if depths.shape != (width,) or valid.shape != (width,):
            raise InvalidArgument("horizon-depth record length does not match its width")
        return cls(depths, valid)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True, eq=False)
class Points3D:
    """``(W, 3)`` camera-height-normalised points with a validity mask."""

    xyz: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        p = np.array(self.xyz, dtype=float)
        v = np.array(self.valid, dtype=bool)
        if p.ndim != 2 or p.shape[1] != 3 or v.shape != (p.shape[0],):
            raise InvalidArgument("points must be (W, 3) with a (W,) mask")
        object.__setattr__(self, "xyz", _frozen(p))
        object.__setattr__(self, "valid", _frozen(v))


@dataclass(frozen=True, eq=False)
class BoundarySamples:
    """Floor-plane boundary points in metres, one per column."""

    points: np.ndarray
    valid: np.ndarray
    frame: str = VIEW

    def __post_init__(self):
        p = np.array(self.points, dtype=float)
        v = np.array(self.valid, dtype=bool)
        if p.ndim != 2 or p.shape[1] != 2 or v.shape != (p.shape[0],):
            raise InvalidArgument("points must be (W, 2) with a (W,) mask")
        if self.frame not in (VIEW, WORLD):
            raise InvalidArgument(f"unknown frame {self.frame!r}")
        if not np.all(np.isfinite(p[v])):
            raise InvalidArgument("valid boundary points must be finite")
        p[~v] = np.nan
        object.__setattr__(self, "points", _frozen(p))
        object.__setattr__(self, "valid", _frozen(v))

    @property
    def width(self) -> int:
        return int(self.points.shape[0])

    def to_dict(self) -> dict:
        return {
            "width": self.width,
            "points": [[float(x), float(z)] if ok else None for (x, z), ok in zip(self.points, self.valid)],
            "valid": [bool(x) for x in self.valid],
            "frame": self.frame,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "BoundarySamples":
        pts = np.array([[np.nan, np.nan] if p is None else p for p in obj["points"]], dtype=float)
        return cls(pts.reshape(-1, 2), np.asarray(obj["valid"], dtype=bool), obj["frame"])


@dataclass(frozen=True)
class CameraPose:
    """Gravity-aligned camera: yaw about the vertical, floor-plane position, height."""

    yaw: float = 0.0
    tx: float = 0.0
    tz: float = 0.0
    h: float = 1.6

    def __post_init__(self):
        if not (np.isfinite(self.h) and self.h > 0):
            raise InvalidArgument(f"camera height must be > 0, got {self.h!r}")
        object.__setattr__(self, "yaw", normalize_angle(float(self.yaw)))

    @property
    def t(self) -> np.ndarray:
        return np.array([self.tx, self.tz])

    def rotation(self) -> np.ndarray:
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        return np.array([[c, s], [-s, c]])

    def compose(self, other: "CameraPose") -> "CameraPose":
        """Pose equal to applying ``other`` first, then ``self`` (planar part)."""
        t = self.rotation() @ other.t + self.t
        return CameraPose(self.yaw + other.yaw, t[0], t[1], self.h)

    def inverse(self) -> "CameraPose":
        t = -(self.rotation().T @ self.t)
        return CameraPose(-self.yaw, t[0], t[1], self.h)

    def to_dict(self) -> dict:
        return {"yaw": self.yaw, "t": [self.tx, self.tz], "h": self.h}

    @classmethod
    def from_dict(cls, obj: dict) -> "CameraPose":
        return cls(float(obj["yaw"]), float(obj["t"][0]), float(obj["t"][1]), float(obj["h"]))


def _check_width(d: HorizonDepth, g: LongitudeGrid):
    if d.width != g.width:
        raise InvalidArgument(f"depth width {d.width} does not match grid width {g.width}")


def depth_to_points(d: HorizonDepth, g: LongitudeGrid) -> Points3D:
    """Polar warp of horizon depth onto the normalised floor plane."""
    _check_width(d, g)
    xyz = np.stack([d.depths * np.sin(g.angles), np.ones(g.width), d.depths * np.cos(g.angles)], axis=1)
    return Points3D(xyz, d.valid)


def ceiling_points(p: Points3D, r: float) -> Points3D:
    """Lift floor points to the ceiling: ``y`` becomes ``-r``, ``x`` and ``z`` are kept."""
    if not (np.isfinite(r) and r > 0):
        raise InvalidArgument(f"ratio must be > 0, got {r!r}")
    if np.any(p.xyz[p.valid, 1] != 1.0):
        raise InvalidArgument("ceiling_points expects floor points with y = 1")
    xyz = p.xyz.copy()
    xyz[:, 1] = -r
    return Points3D(xyz, p.valid)


def d2l(d: HorizonDepth, pose: CameraPose, g: LongitudeGrid) -> BoundarySamples:
    """Horizon depth to metric floor-plane boundary points in the view frame."""
    _check_width(d, g)
    if not pose.h > 0:
        raise InvalidArgument("camera height must be > 0")
    pts = pose.h * np.stack([d.depths * np.sin(g.angles), d.depths * np.cos(g.angles)], axis=1)
    return BoundarySamples(pts, d.valid, VIEW)


def transform_points(points: np.ndarray, pose: CameraPose, direction: str) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    rot = pose.rotation()
    if direction == "to_world":
        return pts @ rot.T + pose.t
    if direction == "to_view":
        return (pts - pose.t) @ rot
    raise InvalidArgument(f"unknown direction {direction!r}")


def transform_samples(s: BoundarySamples, pose: CameraPose, direction: str) -> BoundarySamples:
    """Move boundary samples between the view frame and the world frame."""
    expected = {"to_world": VIEW, "to_view": WORLD}.get(direction)
    if expected is None:
        raise InvalidArgument(f"unknown direction {direction!r}")
    if s.frame != expected:
        raise InvalidArgument(f"{direction} needs samples in the {expected} frame, got {s.frame}")
    pts = transform_points(np.where(s.valid[:, None], s.points, 0.0), pose, direction)
    return BoundarySamples(pts, s.valid, WORLD if direction == "to_world" else VIEW)


def polar_bins(points: np.ndarray, h: float, width: int):
    """Column index and normalised range of each finite, non-central point."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    pts = pts[np.all(np.isfinite(pts), axis=1)]
    rng = np.hypot(pts[:, 0], pts[:, 1])
    pts, rng = pts[rng > 0], rng[rng > 0]
    cols = column_of_angle(np.arctan2(pts[:, 0], pts[:, 1]), width)
    return cols, rng / h


def bin_points(points: np.ndarray, h: float, width: int, agg=ColumnAggregation()):
    """Bin view-frame points by longitude and aggregate their normalised ranges.

    Returns ``(depth, sigma, support)`` arrays; see :func:`aggregate_groups`.
    Points at the camera centre are ignored.
    """
    cols, rng = polar_bins(points, h, width)
    return aggregate_groups(cols, rng, width, agg)


def l2d(s: BoundarySamples, pose: CameraPose, g: LongitudeGrid, agg=ColumnAggregation()) -> HorizonDepth:
    """Boundary points (view frame, metres) back to horizon depth.

    Empty columns come back invalid; no interpolation happens here.
    """
    if s.frame != VIEW:
        raise InvalidArgument("l2d needs view-frame samples")
    depth, _, support = bin_points(s.points[s.valid], pose.h, g.width, agg)
    return HorizonDepth(depth, support > 0)


def latitude_rows(d: np.ndarray, r: float, image_h: int) -> Tuple[np.ndarray, np.ndarray]:
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise NumericDomainError("depth must be > 0 to project a boundary")
    phi_floor = -np.arctan(1.0 / d)
    phi_ceil = np.arctan(r / d) if np.isfinite(r) else np.full(d.shape, np.pi / 2)
    floor_row = (0.5 - phi_floor / np.pi) * image_h
    ceil_row = (0.5 - phi_ceil / np.pi) * image_h
    return floor_row, ceil_row


def project_to_image(d: HorizonDepth, r: float, image_h: int) -> Tuple[np.ndarray, np.ndarray]:
    """Image rows of the floor and ceiling boundary for each column.

    Invalid columns yield ``nan`` rows. ``r`` may be ``inf``, which puts the
    ceiling boundary on row 0.
    """
    if not r > 0:
        raise InvalidArgument("ratio must be > 0")
    floor_row = np.full(d.width, np.nan)
    ceil_row = np.full(d.width, np.nan)
    fr, cr = latitude_rows(d.depths[d.valid], r, image_h)
    floor_row[d.valid] = fr
    ceil_row[d.valid] = cr
    return floor_row, ceil_row

"""Synthetic rooms, cameras, exact horizon depth and prediction-like corruption.

The simulator stands in for a trained layout network: it renders exact
horizon depth by ray casting a ground-truth floor polygon and then degrades
it with multiplicative noise and occlusion arcs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from . import polygon as pg
from .errors import GenerationFailure, InvalidArgument
from .geometry import CameraPose, HorizonDepth, LongitudeGrid

DEFAULT_CAMERA_HEIGHT = 1.6
MAX_TRIES = 500


def rng_for(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for ``(seed, *keys)``; key order matters, call order does not."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys)))


@dataclass(frozen=True)
class RoomSpec:
    corners: Tuple[int, int] = (4, 8)
    extent: Tuple[float, float] = (3.0, 8.0)
    manhattan: bool = True
    height: Tuple[float, float] = (2.6, 3.2)
    min_edge: float = 0.5

    def __post_init__(self):
        lo, hi = self.corners
        if lo < 4 or hi < lo:
            raise InvalidArgument(f"corner range must satisfy 4 <= min <= max, got {self.corners}")
        if not 0 < self.extent[0] <= self.extent[1]:
            raise InvalidArgument(f"bad extent range {self.extent}")
        if not 0 < self.height[0] <= self.height[1]:
            raise InvalidArgument(f"bad height range {self.height}")


@dataclass(frozen=True, eq=False)
class RoomScene:
    polygon: np.ndarray
    room_height: float
    poses: Tuple[CameraPose, ...] = ()
    seed: int = 0

    def __post_init__(self):
        poly = np.array(self.polygon, dtype=float)
        if len(poly) < 4 or pg.signed_area(poly) <= 0:
            raise InvalidArgument("floor polygon needs >= 4 counter-clockwise vertices")
        poly.setflags(write=False)
        object.__setattr__(self, "polygon", poly)
        object.__setattr__(self, "poses", tuple(self.poses))
        for p in self.poses:
            if not 0 < p.h < self.room_height:
                raise InvalidArgument("camera height must lie between floor and ceiling")

    def with_poses(self, poses: Sequence[CameraPose]) -> "RoomScene":
        return RoomScene(self.polygon, self.room_height, tuple(poses), self.seed)

    def ratio(self, pose: CameraPose) -> float:
        """Ceiling-to-camera over camera-to-floor height for ``pose``."""
        return (self.room_height - pose.h) / pose.h

    def max_extent(self) -> float:
        span = self.polygon.max(axis=0) - self.polygon.min(axis=0)
        return float(span.max())

    def to_dict(self) -> dict:
        return {
            "polygon": [[float(x), float(z)] for x, z in self.polygon],
            "roomHeight": float(self.room_height),
            "poses": [p.to_dict() for p in self.poses],
            "seed": int(self.seed),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "RoomScene":
        try:
            return cls(
                np.asarray(obj["polygon"], dtype=float),
                float(obj["roomHeight"]),
                tuple(CameraPose.from_dict(p) for p in obj.get("poses", [])),
                int(obj.get("seed", 0)),
            )
        except (KeyError, TypeError, IndexError) as exc:
            raise InvalidArgument(f"malformed scene record: {exc}") from exc


def _rectangle(w: float, d: float) -> np.ndarray:
    return np.array([[-w / 2, -d / 2], [w / 2, -d / 2], [w / 2, d / 2], [-w / 2, d / 2]])


def _min_edge(poly: np.ndarray) -> float:
    return float(np.min(np.linalg.norm(np.roll(poly, -1, axis=0) - poly, axis=1)))


def _convex_vertices(poly: np.ndarray) -> List[int]:
    prev = np.roll(poly, 1, axis=0)
    nxt = np.roll(poly, -1, axis=0)
    e1, e2 = poly - prev, nxt - poly
    cross = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    return [int(i) for i in np.flatnonzero(cross > 0)]


def _notch(poly: np.ndarray, i: int, rng: np.random.Generator) -> np.ndarray:
    """Cut an axis-aligned rectangle out of convex corner ``i``."""
    v = poly[i]
    prev, nxt = poly[i - 1], poly[(i + 1) % len(poly)]
    a = v + rng.uniform(0.2, 0.5) * (prev - v)
    c = v + rng.uniform(0.2, 0.5) * (nxt - v)
    b = a + c - v
    return np.concatenate([poly[:i], [a, b, c], poly[i + 1:]])


def _manhattan(n: int, spec: RoomSpec, rng: np.random.Generator) -> np.ndarray:
    w, d = rng.uniform(*spec.extent, size=2)
    for _ in range(MAX_TRIES):
        poly = _rectangle(w, d)
        for _ in range((n - 4) // 2):
            poly = _notch(poly, int(rng.choice(_convex_vertices(poly))), rng)
        if _min_edge(poly) >= min(spec.min_edge, 0.25 * min(w, d)) and pg.is_simple(poly):
            return poly
    raise GenerationFailure(f"could not build a simple {n}-corner Manhattan room")


def _star(n: int, spec: RoomSpec, rng: np.random.Generator) -> np.ndarray:
    for _ in range(MAX_TRIES):
        gaps = rng.uniform(0.5, 1.5, size=n)
        ang = np.cumsum(gaps / gaps.sum() * 2 * np.pi) + rng.uniform(0, 2 * np.pi)
        rad = rng.uniform(spec.extent[0] / 2, spec.extent[1] / 2, size=n)
        poly = np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=1)
        if _min_edge(poly) >= spec.min_edge and pg.is_simple(poly) and pg.signed_area(poly) > 0:
            return poly
    raise GenerationFailure(f"could not build a simple {n}-corner room")


def generate_room(spec: RoomSpec = RoomSpec(), seed: int = 0) -> RoomScene:
    """Random floor polygon and ceiling height; no cameras yet.

    Manhattan rooms start as a rectangle and have rectangular notches cut
    from convex corners, two vertices per notch, so the corner count is
    even and every angle is 90 or 270 degrees. Other rooms are star-shaped
    around the origin.
    """
    rng = rng_for(seed, 0)
    lo, hi = spec.corners
    choices = list(range(lo, hi + 1))
    if spec.manhattan:
        choices = [n for n in choices if n % 2 == 0]
        if not choices:
            raise GenerationFailure(f"no even corner count in {spec.corners}")
    n = int(rng.choice(choices))
    poly = _manhattan(n, spec, rng) if spec.manhattan else _star(n, spec, rng)
    height = float(rng.uniform(*spec.height))
    return RoomScene(poly, height, (), int(seed))


def centroid(poly: np.ndarray) -> np.ndarray:
    p = pg.as_polygon(poly)
    q = np.roll(p, -1, axis=0)
    cross = p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1]
    a = cross.sum() / 2
    return np.array([((p[:, 0] + q[:, 0]) * cross).sum(), ((p[:, 1] + q[:, 1]) * cross).sum()]) / (6 * a)


def _clear(poly: np.ndarray, pt: np.ndarray, clearance: float) -> bool:
    return bool(pg.contains(poly, pt)[0]) and float(pg.distance_to_boundary(poly, pt)[0]) >= clearance


def place_cameras(
    scene: RoomScene,
    n: int,
    seed: int = 0,
    min_clearance: float = 0.5,
    height_range: Tuple[float, float] = (DEFAULT_CAMERA_HEIGHT, DEFAULT_CAMERA_HEIGHT),
    min_separation: float = 0.1,
) -> List[CameraPose]:
    """Sample ``n`` camera poses inside the room.

    The first camera goes to the polygon centroid when that spot has enough
    clearance; the rest are rejection-sampled. Yaws are uniform.
    """
    if n < 1:
        raise InvalidArgument("need at least one camera")
    if not 0 < height_range[0] <= height_range[1] < scene.room_height:
        raise GenerationFailure(f"camera heights {height_range} do not fit under the ceiling")
    rng = rng_for(scene.seed if seed is None else seed, 1)
    poly = scene.polygon
    lo, hi = poly.min(axis=0), poly.max(axis=0)
    spots: List[np.ndarray] = []
    c = centroid(poly)
    if _clear(poly, c, min_clearance):
        spots.append(c)
    tries = 0
    while len(spots) < n:
        tries += 1
        if tries > 100 * MAX_TRIES:
            raise GenerationFailure(f"placed only {len(spots)} of {n} cameras")
        pt = rng.uniform(lo, hi)
        if not _clear(poly, pt, min_clearance):
            continue
        if any(np.hypot(*(pt - s)) < min_separation for s in spots):
            continue
        spots.append(pt)
    yaws = rng.uniform(-np.pi, np.pi, size=n)
    heights = rng.uniform(height_range[0], height_range[1], size=n) if height_range[1] > height_range[0] \
        else np.full(n, float(height_range[0]))
    return [CameraPose(float(y), float(p[0]), float(p[1]), float(h)) for y, p, h in zip(yaws, spots, heights)]


def view_directions(pose: CameraPose, g: LongitudeGrid) -> np.ndarray:
    """World-frame unit ray directions of every column."""
    local = np.stack([np.sin(g.angles), np.cos(g.angles)], axis=1)
    return local @ pose.rotation().T


def render_depth(scene: RoomScene, pose: CameraPose, g: LongitudeGrid) -> HorizonDepth:
    """Exact horizon depth by casting each column's ray against the room walls."""
    if not pg.contains(scene.polygon, pose.t)[0] or pg.distance_to_boundary(scene.polygon, pose.t)[0] <= 0:
        raise InvalidArgument("camera is not strictly inside the room")
    t = pg.ray_hits(pose.t, view_directions(pose, g), scene.polygon)
    if not np.all(np.isfinite(t)):
        raise InvalidArgument("ray escaped the room polygon")
    return HorizonDepth.full(t / pose.h)


def rect_depth_analytic(a: float, b: float, offset, theta: float) -> float:
    """Wall distance along ``(sin theta, cos theta)`` inside an ``a`` x ``b`` box.

    The box is centred at the origin with ``a`` along x and ``b`` along z.
    """
    ox, oz = float(offset[0]), float(offset[1])
    if not (abs(ox) < a / 2 and abs(oz) < b / 2):
        raise InvalidArgument("camera must be strictly inside the rectangle")
    ux, uz = math.sin(theta), math.cos(theta)
    best = math.inf
    for u, o, half in ((ux, ox, a / 2), (uz, oz, b / 2)):
        if u > 0:
            best = min(best, (half - o) / u)
        elif u < 0:
            best = min(best, (-half - o) / u)
    return best


@dataclass(frozen=True)
class OcclusionArc:
    start: float
    length: float
    mode: str = "drop"

    def __post_init__(self):
        if not (0 <= self.start < 1 and 0 <= self.length < 0.5):
            raise InvalidArgument("occlusion arc needs start in [0, 1) and length in [0, 0.5)")
        if self.mode not in ("drop", "inflate"):
            raise InvalidArgument(f"unknown occlusion mode {self.mode!r}")

    def columns(self, width: int) -> np.ndarray:
        first = int(math.floor(self.start * width))
        count = int(round(self.length * width))
        return (first + np.arange(count)) % width


@dataclass(frozen=True)
class NoiseSpec:
    multiplicative_sigma: float = 0.0
    smoothing_half_width: int = 0
    occlusion_arcs: Tuple[OcclusionArc, ...] = field(default_factory=tuple)
    global_scale_sigma: float = 0.0

    def __post_init__(self):
        if self.multiplicative_sigma < 0 or self.global_scale_sigma < 0:
            raise InvalidArgument("noise sigmas must be >= 0")
        if int(self.smoothing_half_width) != self.smoothing_half_width or self.smoothing_half_width < 0:
            raise InvalidArgument("smoothing half-width must be an integer >= 0")
        object.__setattr__(self, "occlusion_arcs", tuple(self.occlusion_arcs))


def circular_moving_average(x: np.ndarray, half_width: int) -> np.ndarray:
    if half_width == 0:
        return x.copy()
    acc = np.zeros_like(x)
    for k in range(-half_width, half_width + 1):
        acc += np.roll(x, k)
    return acc / (2 * half_width + 1)


def corrupt(d: HorizonDepth, spec: NoiseSpec, seed) -> HorizonDepth:
    """Prediction-like degradation of an all-valid horizon depth.

    ``seed`` is an int or a ``numpy.random.Generator``. Noise factors are
    floored at 1e-3 so depths stay positive.
    """
    if not np.all(d.valid):
        raise InvalidArgument("corrupt expects an all-valid depth")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    scale = math.exp(spec.global_scale_sigma * rng.standard_normal())
    eps = spec.multiplicative_sigma * rng.standard_normal(d.width)
    eps = circular_moving_average(eps, int(spec.smoothing_half_width))
    out = d.depths * scale * np.maximum(1.0 + eps, 1e-3)
    valid = np.ones(d.width, dtype=bool)
    for arc in spec.occlusion_arcs:
        cols = arc.columns(d.width)
        if arc.mode == "drop":
            valid[cols] = False
        else:
            out[cols] *= 1.5
    return HorizonDepth(out, valid)

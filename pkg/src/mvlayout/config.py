"""Strict JSON scenario configuration.

Every section is a plain mapping with camelCase keys. Unknown keys, wrong
types and out-of-range values raise :class:`ConfigError` carrying the dotted
path of the offending entry.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, List, Optional, Sequence, Tuple, Union

from .aggregation import STRATEGIES, ColumnAggregation
from .costvolume import PLANE_MODES
from .errors import ConfigError, InvalidArgument
from .simulator import NoiseSpec, OcclusionArc, RoomSpec


def _num(v, path, lo=None, hi=None, integer=False, lo_open=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(path, f"expected a number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(path, f"expected an integer, got {v!r}")
    if lo is not None and (v < lo or (lo_open and v == lo)):
        raise ConfigError(path, f"must be {'>' if lo_open else '>='} {lo}, got {v!r}")
    if hi is not None and v > hi:
        raise ConfigError(path, f"must be <= {hi}, got {v!r}")
    return int(v) if integer else float(v)


def _pair(v, path, **kw) -> Tuple:
    if not isinstance(v, (list, tuple)) or len(v) != 2:
        raise ConfigError(path, f"expected a [min, max] pair, got {v!r}")
    a, b = _num(v[0], f"{path}[0]", **kw), _num(v[1], f"{path}[1]", **kw)
    if a > b:
        raise ConfigError(path, "min exceeds max")
    return a, b


def _section(obj, path: str, allowed: Sequence[str]) -> dict:
    if obj is None:
        return {}
    if not isinstance(obj, dict):
        raise ConfigError(path, "expected an object")
    for k in obj:
        if k not in allowed:
            raise ConfigError(f"{path}.{k}" if path else k, "unknown key")
    return obj


@dataclass(frozen=True)
class NoiseConfig:
    spec: NoiseSpec = NoiseSpec()
    occluded_views: Union[str, Tuple[int, ...]] = "all"
    ratio_sigma: float = 0.0

    def for_view(self, v: int, n_views: int) -> NoiseSpec:
        if self.occluded_views == "all":
            hit = True
        elif self.occluded_views == "half":
            hit = v < n_views // 2
        else:
            hit = v in self.occluded_views
        if hit:
            return self.spec
        return NoiseSpec(self.spec.multiplicative_sigma, self.spec.smoothing_half_width, (),
                         self.spec.global_scale_sigma)

    def to_dict(self) -> dict:
        s = self.spec
        return {
            "multiplicativeSigma": s.multiplicative_sigma,
            "smoothingHalfWidth": s.smoothing_half_width,
            "globalScaleSigma": s.global_scale_sigma,
            "occlusionArcs": [{"start": a.start, "length": a.length, "mode": a.mode} for a in s.occlusion_arcs],
            "occludedViews": self.occluded_views if isinstance(self.occluded_views, str) else list(self.occluded_views),
            "ratioSigma": self.ratio_sigma,
        }


@dataclass(frozen=True)
class ConsensusConfig:
    aggregation: ColumnAggregation = ColumnAggregation()
    iterations: int = 1
    include_reference: bool = True
    visibility_gate: Optional[float] = 0.2

    def to_dict(self) -> dict:
        a = self.aggregation
        return {
            "strategy": a.strategy,
            "madK": a.mad_k,
            "minSupport": a.min_support,
            "iterations": self.iterations,
            "includeReference": self.include_reference,
            "visibilityGate": self.visibility_gate,
        }


@dataclass(frozen=True)
class CostVolumeConfig:
    planes: int = 64
    d_max: Union[str, float] = "auto"
    alpha: Union[str, float] = 0.5
    plane_mode: str = "radial"
    channels: int = 8
    feature_mode: str = "geometric"
    feature_noise: float = 0.0
    min_views: int = 2
    visibility_gate: Optional[float] = 0.2

    def to_dict(self) -> dict:
        return {
            "planes": self.planes,
            "dMax": self.d_max,
            "alpha": self.alpha,
            "planeMode": self.plane_mode,
            "channels": self.channels,
            "featureMode": self.feature_mode,
            "featureNoise": self.feature_noise,
            "minViews": self.min_views,
            "visibilityGate": self.visibility_gate,
        }


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int = 0
    rooms: int = 1
    room: RoomSpec = RoomSpec()
    views: int = 8
    width: int = 1024
    camera_height: Tuple[float, float] = (1.6, 1.6)
    min_clearance: float = 0.5
    image_height: int = 512
    noise: NoiseConfig = NoiseConfig()
    consensus: ConsensusConfig = ConsensusConfig()
    cost_volume: CostVolumeConfig = CostVolumeConfig()
    outputs: str = "out"

    def to_dict(self) -> dict:
        r = self.room
        return {
            "seed": self.seed,
            "rooms": self.rooms,
            "room": {"corners": list(r.corners), "extent": list(r.extent), "manhattan": r.manhattan,
                     "height": list(r.height)},
            "views": self.views,
            "width": self.width,
            "cameraHeight": list(self.camera_height),
            "minClearance": self.min_clearance,
            "imageHeight": self.image_height,
            "noise": self.noise.to_dict(),
            "consensus": self.consensus.to_dict(),
            "costVolume": self.cost_volume.to_dict(),
            "outputs": self.outputs,
        }


def _parse_room(obj) -> RoomSpec:
    o = _section(obj, "room", ["corners", "extent", "manhattan", "height"])
    d = RoomSpec()
    corners = _pair(o.get("corners", list(d.corners)), "room.corners", lo=4, integer=True)
    extent = _pair(o.get("extent", list(d.extent)), "room.extent", lo=0, lo_open=True)
    height = _pair(o.get("height", list(d.height)), "room.height", lo=0, lo_open=True)
    manhattan = o.get("manhattan", d.manhattan)
    if not isinstance(manhattan, bool):
        raise ConfigError("room.manhattan", "expected true or false")
    return RoomSpec(corners, extent, manhattan, height)


def _parse_noise(obj) -> NoiseConfig:
    keys = ["multiplicativeSigma", "smoothingHalfWidth", "globalScaleSigma", "occlusionArcs", "occludedViews",
            "ratioSigma"]
    o = _section(obj, "noise", keys)
    arcs = []
    raw_arcs = o.get("occlusionArcs", [])
    if not isinstance(raw_arcs, list):
        raise ConfigError("noise.occlusionArcs", "expected a list")
    for i, a in enumerate(raw_arcs):
        p = f"noise.occlusionArcs[{i}]"
        a = _section(a, p, ["start", "length", "mode"])
        mode = a.get("mode", "drop")
        if mode not in ("drop", "inflate"):
            raise ConfigError(f"{p}.mode", f"expected 'drop' or 'inflate', got {mode!r}")
        try:
            arcs.append(OcclusionArc(_num(a.get("start", 0.0), f"{p}.start", lo=0),
                                     _num(a.get("length", 0.0), f"{p}.length", lo=0), mode))
        except InvalidArgument as exc:
            raise ConfigError(p, str(exc)) from exc
    views = o.get("occludedViews", "all")
    if isinstance(views, list):
        views = tuple(_num(v, f"noise.occludedViews[{i}]", lo=0, integer=True) for i, v in enumerate(views))
    elif views not in ("all", "half"):
        raise ConfigError("noise.occludedViews", "expected 'all', 'half' or a list of view indices")
    spec = NoiseSpec(
        _num(o.get("multiplicativeSigma", 0.0), "noise.multiplicativeSigma", lo=0),
        _num(o.get("smoothingHalfWidth", 0), "noise.smoothingHalfWidth", lo=0, integer=True),
        tuple(arcs),
        _num(o.get("globalScaleSigma", 0.0), "noise.globalScaleSigma", lo=0),
    )
    return NoiseConfig(spec, views, _num(o.get("ratioSigma", 0.0), "noise.ratioSigma", lo=0))


def _optional_gate(v, path):
    return None if v is None else _num(v, path, lo=0)


def _parse_consensus(obj) -> ConsensusConfig:
    keys = ["strategy", "madK", "minSupport", "iterations", "includeReference", "visibilityGate"]
    o = _section(obj, "consensus", keys)
    d = ConsensusConfig()
    strategy = o.get("strategy", d.aggregation.strategy)
    if strategy not in STRATEGIES:
        raise ConfigError("consensus.strategy", f"expected one of {STRATEGIES}, got {strategy!r}")
    agg = ColumnAggregation(
        strategy,
        _num(o.get("madK", d.aggregation.mad_k), "consensus.madK", lo=0, lo_open=True),
        _num(o.get("minSupport", d.aggregation.min_support), "consensus.minSupport", lo=1, integer=True),
    )
    include = o.get("includeReference", d.include_reference)
    if not isinstance(include, bool):
        raise ConfigError("consensus.includeReference", "expected true or false")
    return ConsensusConfig(
        agg,
        _num(o.get("iterations", d.iterations), "consensus.iterations", lo=1, integer=True),
        include,
        _optional_gate(o.get("visibilityGate", d.visibility_gate), "consensus.visibilityGate"),
    )


def _parse_cost_volume(obj) -> CostVolumeConfig:
    keys = ["planes", "dMax", "alpha", "planeMode", "channels", "featureMode", "featureNoise", "minViews",
            "visibilityGate"]
    o = _section(obj, "costVolume", keys)
    d = CostVolumeConfig()
    d_max = o.get("dMax", d.d_max)
    if d_max != "auto":
        d_max = _num(d_max, "costVolume.dMax", lo=0, lo_open=True)
    alpha = o.get("alpha", d.alpha)
    if alpha != "confidence":
        alpha = _num(alpha, "costVolume.alpha", lo=0, hi=1)
    mode = o.get("planeMode", d.plane_mode)
    if mode not in PLANE_MODES:
        raise ConfigError("costVolume.planeMode", f"expected one of {PLANE_MODES}, got {mode!r}")
    fmode = o.get("featureMode", d.feature_mode)
    if fmode not in ("geometric", "random"):
        raise ConfigError("costVolume.featureMode", f"expected 'geometric' or 'random', got {fmode!r}")
    return CostVolumeConfig(
        _num(o.get("planes", d.planes), "costVolume.planes", lo=2, integer=True),
        d_max,
        alpha,
        mode,
        _num(o.get("channels", d.channels), "costVolume.channels", lo=1, integer=True),
        fmode,
        _num(o.get("featureNoise", d.feature_noise), "costVolume.featureNoise", lo=0),
        _num(o.get("minViews", d.min_views), "costVolume.minViews", lo=1, integer=True),
        _optional_gate(o.get("visibilityGate", d.visibility_gate), "costVolume.visibilityGate"),
    )


TOP_KEYS = ["seed", "rooms", "room", "views", "width", "cameraHeight", "minClearance", "imageHeight", "noise",
            "consensus", "costVolume", "outputs"]


def parse_config(obj: Any) -> ScenarioConfig:
    o = _section(obj, "", TOP_KEYS)
    d = ScenarioConfig()
    outputs = o.get("outputs", d.outputs)
    if not isinstance(outputs, str):
        raise ConfigError("outputs", "expected a directory path")
    try:
        room = _parse_room(o.get("room"))
    except InvalidArgument as exc:
        raise ConfigError("room", str(exc)) from exc
    heights = _pair(o.get("cameraHeight", list(d.camera_height)), "cameraHeight", lo=0, lo_open=True)
    if heights[1] >= room.height[0]:
        raise ConfigError("cameraHeight", "cameras must sit below the lowest possible ceiling")
    return ScenarioConfig(
        seed=_num(o.get("seed", d.seed), "seed", lo=0, integer=True),
        rooms=_num(o.get("rooms", d.rooms), "rooms", lo=1, integer=True),
        room=room,
        views=_num(o.get("views", d.views), "views", lo=2, integer=True),
        width=_num(o.get("width", d.width), "width", lo=4, integer=True),
        camera_height=heights,
        min_clearance=_num(o.get("minClearance", d.min_clearance), "minClearance", lo=0),
        image_height=_num(o.get("imageHeight", d.image_height), "imageHeight", lo=2, integer=True),
        noise=_parse_noise(o.get("noise")),
        consensus=_parse_consensus(o.get("consensus")),
        cost_volume=_parse_cost_volume(o.get("costVolume")),
        outputs=outputs,
    )


def load_config(path: Union[str, Path]) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("", f"cannot read config {path}: {exc}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON in {path}: {exc}") from exc
    return parse_config(obj)


def with_overrides(cfg: ScenarioConfig, seed: Optional[int] = None, outputs: Optional[str] = None) -> ScenarioConfig:
    if seed is not None:
        cfg = replace(cfg, seed=_num(seed, "seed", lo=0, integer=True))
    if outputs is not None:
        cfg = replace(cfg, outputs=outputs)
    return cfg


__all__: List[str] = ["ScenarioConfig", "NoiseConfig", "ConsensusConfig", "CostVolumeConfig", "parse_config",
                      "load_config", "with_overrides"]

"""End-to-end scenario runner and directory evaluator.

``run_pipeline`` simulates every room, builds pseudo-labels and cost-volume
refinements, scores noisy, pseudo-label and fused depths against the
rendered ground truth, and writes everything under the output directory.
Numeric outputs depend only on the configuration: rooms are processed
independently and gathered in index order, so the thread count never
changes a byte.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import costvolume as cvm
from .config import ScenarioConfig
from .consensus import consensus_ratio, generate_pseudo_labels
from .errors import InvalidArgument
from .geometry import BoundarySamples, CameraPose, HorizonDepth, d2l, longitude_grid, transform_samples
from .metrics import (
    MetricReport,
    boundary_polygon,
    corner_error,
    delta_acc,
    extract_corners,
    iou2d,
    iou3d,
    mean_report,
    pixel_error,
    rmse,
)
from .objectives import loss_parts
from .simulator import RoomScene, corrupt, generate_room, place_cameras, render_depth, rng_for
from .svg import room_floor_plan

log = logging.getLogger(__name__)

KINDS = ("noisy", "pseudo", "fused")
METRIC_HEADER = ["scenario", "view", "iou2d", "iou3d", "rmse", "delta1", "ce", "pe"]
LOSS_HEADER = ["scenario", "ln", "lg", "ld", "lr", "total"]


def write_atomic(path: Path, text: str) -> None:
    """Write ``text`` to a temporary sibling and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(obj) -> str:
    return json.dumps(obj, indent=1) + "\n"


def room_seed(seed: int, room: int) -> int:
    return int(rng_for(seed, 100, room).integers(0, 2**63 - 1))


@dataclass
class RoomResult:
    name: str
    metrics: List[Tuple[str, MetricReport]]
    losses: List[Tuple[str, Dict[str, float]]]
    rmse_by_kind: Dict[str, float]


def depth_record(d: HorizonDepth, ratio: float, h: float) -> dict:
    rec = d.to_dict()
    rec["ratio"] = float(ratio)
    rec["cameraHeight"] = float(h)
    return rec


def score_view(d: HorizonDepth, r: float, gt: HorizonDepth, r_gt: float, pose: CameraPose, room_height: float,
               image_w: int, image_h: int) -> MetricReport:
    """All six metrics for one predicted view against its ground-truth depth."""
    g = longitude_grid(gt.width)
    sp, sg = d2l(d, pose, g), d2l(gt, pose, g)
    poly_p, poly_g = boundary_polygon(sp), boundary_polygon(sg)
    ce = corner_error(extract_corners(sp), extract_corners(sg), image_w, image_h, r, r_gt, h=pose.h)
    return MetricReport(
        iou2d=iou2d(poly_p, poly_g),
        iou3d=iou3d(poly_p, pose.h * (1.0 + r), poly_g, room_height),
        rmse=rmse(d, gt),
        delta1=delta_acc(d, gt),
        ce=ce,
        pe=pixel_error(d, r, gt, r_gt, image_h),
    )


def _world_polyline(d: HorizonDepth, pose: CameraPose, g) -> np.ndarray:
    s = transform_samples(d2l(d, pose, g), pose, "to_world")
    return s.points[s.valid]


def run_room(cfg: ScenarioConfig, index: int, out: Path) -> RoomResult:
    name = f"room_{index:03d}"
    seed = room_seed(cfg.seed, index)
    g = longitude_grid(cfg.width)
    scene = generate_room(cfg.room, seed)
    poses = place_cameras(scene, cfg.views, seed, cfg.min_clearance, cfg.camera_height)
    scene = scene.with_poses(poses)

    gt = [render_depth(scene, p, g) for p in poses]
    noisy = [corrupt(d, cfg.noise.for_view(v, cfg.views), rng_for(seed, 2, v)) for v, d in enumerate(gt)]
    r_gt = [scene.ratio(p) for p in poses]
    r_pred = [r * math.exp(cfg.noise.ratio_sigma * rng_for(seed, 4, v).standard_normal())
              for v, r in enumerate(r_gt)]

    cc = cfg.consensus
    labels = generate_pseudo_labels(noisy, poses, g, cc.aggregation, cc.iterations, cc.include_reference,
                                    cc.visibility_gate)
    r_pseudo = consensus_ratio(r_pred, poses)

    cv = cfg.cost_volume
    planes = cvm.DepthPlanes(cv.planes, cvm.default_d_max(scene) if cv.d_max == "auto" else float(cv.d_max))
    feats = cvm.synth_features(scene, g, cv.channels, cv.feature_mode, seed, cv.feature_noise)
    fused, summaries = [], []
    for ref, pose in enumerate(poses):
        aligned = cvm.align_points(labels.depths, poses, ref, g, cv.visibility_gate)
        volume = cvm.build_cost_volume(feats, aligned, planes, pose.h, cv.plane_mode)
        d_cost = cvm.extract_depth(volume, planes, cv.min_views)
        alpha = cvm.confidence_alpha(labels.support[ref]) if cv.alpha == "confidence" else cv.alpha
        fused.append(cvm.fuse_depth(d_cost, labels.depths[ref], alpha))
        summaries.append(cvm.summary_csv(volume, cv.min_views))

    room_dir = out / name
    write_atomic(room_dir / "scene.json", dump_json(scene.to_dict()))
    ratios = {"gt": r_gt, "noisy": r_pred, "pseudo": r_pseudo, "fused": r_pseudo}
    series = {"gt": gt, "noisy": noisy, "pseudo": labels.depths, "fused": fused}
    for v, pose in enumerate(poses):
        for kind, ds in series.items():
            write_atomic(room_dir / "depths" / f"view_{v:02d}_{kind}.json",
                         dump_json(depth_record(ds[v], ratios[kind][v], pose.h)))
        write_atomic(room_dir / "pseudo" / f"view_{v:02d}.json", dump_json(labels.view_dict(v)))
        write_atomic(room_dir / "costvolume" / f"view_{v:02d}.csv", summaries[v])

    image_w = 2 * cfg.image_height
    metrics, losses = [], []
    for kind in KINDS:
        for v, pose in enumerate(poses):
            rep = score_view(series[kind][v], ratios[kind][v], gt[v], r_gt[v], pose, scene.room_height,
                             image_w, cfg.image_height)
            metrics.append((f"{name}/{kind}", v, rep))
    for v in range(len(poses)):
        parts = loss_parts(noisy[v], r_pred[v], labels.depths[v], r_pseudo[v], labels.sigma[v])
        losses.append((f"{name}/view_{v:02d}", parts))

    layers = [(kind, [_world_polyline(series[kind][v], poses[v], g) for v in range(len(poses))]) for kind in KINDS]
    svg = room_floor_plan(scene.polygon, layers, [p.t for p in poses], title=name)
    write_atomic(room_dir / "floorplan.svg", svg)

    by_kind = {k: float(np.mean([m.rmse for s, _, m in metrics if s.endswith(k)])) for k in KINDS}
    return RoomResult(name, metrics, losses, by_kind)


def _fmt_row(values) -> List[str]:
    return [f"{v:.6f}" if isinstance(v, float) else str(v) for v in values]


def metrics_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(METRIC_HEADER)
    for scenario, view, rep in rows:
        w.writerow([scenario, view] + rep.as_row())
    return buf.getvalue()


def run_pipeline(cfg: ScenarioConfig, out: Optional[Path] = None, threads: int = 1) -> dict:
    """Run every room of the scenario and write the artefacts; returns the summary."""
    out = Path(out if out is not None else cfg.outputs)
    out.mkdir(parents=True, exist_ok=True)
    write_atomic(out / "config.json", dump_json(cfg.to_dict()))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda i: run_room(cfg, i, out), range(cfg.rooms)))
    else:
        results = [run_room(cfg, i, out) for i in range(cfg.rooms)]

    rows = [row for r in results for row in r.metrics]
    write_atomic(out / "metrics.csv", metrics_csv(rows))

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LOSS_HEADER)
    for r in results:
        for scenario, parts in r.losses:
            w.writerow([scenario] + _fmt_row([parts[k] for k in ("ln", "lg", "ld", "lr", "total")]))
    write_atomic(out / "losses.csv", buf.getvalue())

    summary = {"rooms": cfg.rooms, "views": cfg.views, "mean": {}}
    for kind in KINDS:
        rep = mean_report([m for s, _, m in rows if s.endswith("/" + kind)])
        summary["mean"][kind] = {k: round(v, 6) for k, v in rep.__dict__.items()}
    summary["perRoomRmse"] = {r.name: {k: round(v, 6) for k, v in r.rmse_by_kind.items()} for r in results}
    write_atomic(out / "summary.json", dump_json(summary))
    return summary


def _load_depth(path: Path):
    obj = json.loads(path.read_text())
    return HorizonDepth.from_dict(obj), obj.get("ratio"), obj.get("cameraHeight")


def eval_command(pred_dir: Path, gt_dir: Path) -> Tuple[str, int, List[str]]:
    """Score every prediction JSON against the same-named ground-truth JSON.

    Returns ``(csv_text, matched_count, warnings)``. Files present on only
    one side are reported and skipped.
    """
    pred_dir, gt_dir = Path(pred_dir), Path(gt_dir)
    preds = {p.name for p in pred_dir.glob("*.json")}
    gts = {p.name for p in gt_dir.glob("*.json")}
    warnings = [f"unmatched file {name}" for name in sorted(preds ^ gts)]
    rows = []
    for name in sorted(preds & gts):
        try:
            d, r, h = _load_depth(pred_dir / name)
            dg, rg, hg = _load_depth(gt_dir / name)
        except (InvalidArgument, json.JSONDecodeError, OSError) as exc:
            warnings.append(f"skipping {name}: {exc}")
            continue
        h = float(hg or h or 1.6)
        rg = float(rg if rg is not None else (r if r is not None else 1.0))
        r = float(r if r is not None else rg)
        rep = score_view(d, r, dg, rg, CameraPose(0.0, 0.0, 0.0, h), h * (1.0 + rg), 1024, 512)
        rows.append((Path(name).stem, "", rep))
    if rows:
        rows.append(("mean", "", mean_report([m for _, _, m in rows])))
    return metrics_csv(rows), len(rows) - 1 if rows else 0, warnings


def load_views(directory: Path) -> List[HorizonDepth]:
    files = sorted(Path(directory).glob("view_*.json"))
    return [HorizonDepth.from_dict(json.loads(f.read_text())) for f in files]


def samples_from_json(text: str) -> BoundarySamples:
    return BoundarySamples.from_dict(json.loads(text))


def scene_from_file(path: Path) -> RoomScene:
    return RoomScene.from_dict(json.loads(Path(path).read_text()))

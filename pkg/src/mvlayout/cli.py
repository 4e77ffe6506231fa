"""Command-line entry point.

Exit codes: 0 success, 1 I/O failure, 2 empty or unusable input, 3 bad
configuration.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from . import costvolume as cvm
from .config import ScenarioConfig, load_config, with_overrides
from .consensus import generate_pseudo_labels
from .errors import ConfigError, GenerationFailure, InvalidArgument
from .geometry import longitude_grid
from .pipeline import depth_record, dump_json, eval_command, load_views, run_pipeline, scene_from_file, write_atomic
from .simulator import corrupt, generate_room, place_cameras, render_depth, rng_for

EXIT_OK, EXIT_IO, EXIT_EMPTY, EXIT_CONFIG = 0, 1, 2, 3

log = logging.getLogger("mvlayout")


class EmptyInput(Exception):
    pass


def _config(args) -> ScenarioConfig:
    cfg = load_config(args.config) if args.config else ScenarioConfig()
    return with_overrides(cfg, seed=args.seed, outputs=args.out)


def _views(directory: str):
    views = load_views(Path(directory))
    if not views:
        raise EmptyInput(f"no view_*.json files in {directory}")
    return views


def _write_views(out: Path, depths, scene=None, ratios=None) -> None:
    for v, d in enumerate(depths):
        h = scene.poses[v].h if scene is not None else 1.0
        r = ratios[v] if ratios is not None else (scene.ratio(scene.poses[v]) if scene is not None else 1.0)
        write_atomic(out / f"view_{v:02d}.json", dump_json(depth_record(d, r, h)))


def cmd_gen_scene(args) -> int:
    cfg = _config(args)
    scene = generate_room(cfg.room, cfg.seed)
    scene = scene.with_poses(place_cameras(scene, cfg.views, cfg.seed, cfg.min_clearance, cfg.camera_height))
    write_atomic(Path(cfg.outputs) / "scene.json", dump_json(scene.to_dict()))
    return EXIT_OK


def cmd_render(args) -> int:
    cfg = _config(args)
    scene = scene_from_file(Path(args.scene))
    if not scene.poses:
        raise EmptyInput("scene has no camera poses")
    g = longitude_grid(cfg.width)
    _write_views(Path(cfg.outputs), [render_depth(scene, p, g) for p in scene.poses], scene)
    return EXIT_OK


def cmd_corrupt(args) -> int:
    cfg = _config(args)
    views = _views(args.input)
    out = [corrupt(d, cfg.noise.for_view(v, len(views)), rng_for(cfg.seed, 2, v)) for v, d in enumerate(views)]
    scene = scene_from_file(Path(args.scene)) if args.scene else None
    _write_views(Path(cfg.outputs), out, scene)
    return EXIT_OK


def cmd_consensus(args) -> int:
    cfg = _config(args)
    views = _views(args.input)
    scene = scene_from_file(Path(args.scene))
    cc = cfg.consensus
    labels = generate_pseudo_labels(views, scene.poses, longitude_grid(views[0].width), cc.aggregation,
                                    cc.iterations, cc.include_reference, cc.visibility_gate)
    out = Path(cfg.outputs)
    for v in range(len(views)):
        write_atomic(out / f"view_{v:02d}.json", dump_json(labels.view_dict(v)))
    return EXIT_OK


def cmd_costvolume(args) -> int:
    cfg = _config(args)
    views = _views(args.input)
    scene = scene_from_file(Path(args.scene))
    cv = cfg.cost_volume
    g = longitude_grid(views[0].width)
    planes = cvm.DepthPlanes(cv.planes, cvm.default_d_max(scene) if cv.d_max == "auto" else float(cv.d_max))
    feats = cvm.synth_features(scene, g, cv.channels, cv.feature_mode, cfg.seed, cv.feature_noise)
    out = Path(cfg.outputs)
    alpha = 0.5 if cv.alpha == "confidence" else cv.alpha
    for ref, pose in enumerate(scene.poses):
        aligned = cvm.align_points(views, scene.poses, ref, g, cv.visibility_gate)
        volume = cvm.build_cost_volume(feats, aligned, planes, pose.h, cv.plane_mode)
        d_cost = cvm.extract_depth(volume, planes, cv.min_views)
        fused = cvm.fuse_depth(d_cost, views[ref], alpha)
        write_atomic(out / f"view_{ref:02d}.csv", cvm.summary_csv(volume, cv.min_views))
        write_atomic(out / f"view_{ref:02d}.json", dump_json(depth_record(fused, scene.ratio(pose), pose.h)))
    return EXIT_OK


def cmd_eval(args) -> int:
    text, matched, warnings = eval_command(Path(args.pred), Path(args.gt))
    for w in warnings:
        log.warning(w)
    if matched == 0:
        raise EmptyInput("no matching prediction/ground-truth files")
    if args.out:
        write_atomic(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_pipeline(args) -> int:
    cfg = _config(args)
    if args.threads < 1:
        raise ConfigError("threads", "must be >= 1")
    summary = run_pipeline(cfg, Path(cfg.outputs), threads=args.threads)
    print(json.dumps(summary["mean"], sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mvlayout", description="Multi-view layout pseudo-label simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp, out_required=False):
        sp.add_argument("--config", help="scenario JSON file")
        sp.add_argument("--out", required=out_required, help="output directory")
        sp.add_argument("--seed", type=int, help="override the configured seed")
        return sp

    common(sub.add_parser("gen-scene", help="generate a room and camera poses")).set_defaults(func=cmd_gen_scene)
    sp = common(sub.add_parser("render", help="render ground-truth horizon depths"))
    sp.add_argument("--scene", required=True)
    sp.set_defaults(func=cmd_render)
    sp = common(sub.add_parser("corrupt", help="apply the configured noise to a directory of views"))
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--scene")
    sp.set_defaults(func=cmd_corrupt)
    sp = common(sub.add_parser("consensus", help="build multi-view pseudo-labels"))
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--scene", required=True)
    sp.set_defaults(func=cmd_consensus)
    sp = common(sub.add_parser("costvolume", help="cost-volume refinement of a directory of views"))
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--scene", required=True)
    sp.set_defaults(func=cmd_costvolume)
    sp = sub.add_parser("eval", help="score predicted depth JSON files against ground truth")
    sp.add_argument("pred")
    sp.add_argument("gt")
    sp.add_argument("--out", help="metrics CSV path (default: stdout)")
    sp.set_defaults(func=cmd_eval)
    sp = common(sub.add_parser("pipeline", help="run the full simulation and evaluation"))
    sp.add_argument("--threads", type=int, default=1)
    sp.set_defaults(func=cmd_pipeline)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except EmptyInput as exc:
        log.error("%s", exc)
        return EXIT_EMPTY
    except (InvalidArgument, GenerationFailure, KeyError, json.JSONDecodeError) as exc:
        log.error("invalid input: %s", exc)
        return EXIT_EMPTY
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

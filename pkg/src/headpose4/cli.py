"""Command-line interface: ``headpose4 {estimate,synth,eval}``.

Exit codes: 0 success, 1 bad input (unreadable or malformed files,
mismatched ids), 2 when some images failed to estimate.
"""
from __future__ import annotations

import argparse
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .errors import HeadPoseError, InvalidInputError
from .estimator import DEFAULT_ETA, DEFAULT_MODEL, EstimationConfig, estimate_pose
from .formats import (Prediction, read_landmarks, read_model, read_poses, read_predictions, write_landmarks,
                      write_poses, write_predictions)
from .geometry import PinholeCamera, WeakPerspectiveCamera
from .normalization import FeaturePointSet2D
from .optimizer import LMConfig
from .synthetic import SceneSpec, angle_errors, generate_scene, instance_rng, mae_std, random_symmetric_morph

ANGLES = ("pitch", "yaw", "roll")


def _err(msg):
    print(f"headpose4: {msg}", file=sys.stderr)


def _load_model(path):
    return DEFAULT_MODEL if path is None else read_model(path)


def _model_tag(path):
    return "default" if path is None else os.path.basename(path)


def _estimate_one(item):
    image_id, points, model, cfg = item
    start = time.perf_counter()
    try:
        landmarks = FeaturePointSet2D.from_mapping(points)
        res = estimate_pose(landmarks, model, cfg)
    except HeadPoseError as exc:
        return Prediction(image_id, None, error=str(exc))
    wall = 1000.0 * (time.perf_counter() - start)
    return Prediction(image_id, res.angles, res.iterations, res.objective, res.converged, wall_time_ms=wall)


def run_estimates(items, jobs=1):
    if jobs <= 1 or len(items) <= 1:
        return [_estimate_one(item) for item in items]
    chunk = max(1, len(items) // (4 * jobs))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_estimate_one, items, chunksize=chunk))


def cmd_estimate(args) -> int:
    try:
        model = _load_model(args.model)
        images = read_landmarks(args.landmarks)
        cfg = EstimationConfig(eta=args.eta, lm=LMConfig(max_iter=args.max_iter, tol=args.tol),
                               mode=args.constraints, morph=not args.no_morph)
    except (OSError, InvalidInputError) as exc:
        _err(exc)
        return 1
    items = [(image_id, points, model, cfg) for image_id, points in sorted(images.items())]
    preds = run_estimates(items, args.jobs)
    header = (f"headpose4 {__version__} estimate eta={cfg.eta!r} tol={cfg.lm.tol!r} "
              f"max_iter={cfg.lm.max_iter} constraints={cfg.mode} morph={'on' if cfg.morph else 'off'} "
              f"model={_model_tag(args.model)}")
    write_predictions(args.out, preds, comment=header, timing=args.timing)
    failed = [p for p in preds if not p.ok]
    for p in failed:
        _err(f"{p.image_id}: {p.error}")
    return 2 if failed else 0


def _parse_pair(text):
    try:
        a, b = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected two comma-separated numbers, got {text!r}") from None
    return a, b


def cmd_synth(args) -> int:
    try:
        model = _load_model(args.model)
        poses = read_poses(args.poses)
    except (OSError, InvalidInputError) as exc:
        _err(exc)
        return 1
    cu, cv = args.center
    if args.projection == "weak":
        camera = WeakPerspectiveCamera(args.scale, (cu / args.scale, cv / args.scale))
    else:
        camera = PinholeCamera(args.focal, args.focal, u0=cu, v0=cv, t=(0.0, 0.0, args.distance))
    landmarks = {}
    try:
        for index, image_id in enumerate(sorted(poses)):
            morph = None
            if args.morph_rad > 0:
                morph = random_symmetric_morph(instance_rng(args.seed, 10**6 + index), args.morph_rad)
            spec = SceneSpec(poses[image_id], camera, model, args.noise_px, morph, args.seed, index)
            lm, _ = generate_scene(spec)
            landmarks[image_id] = (lm.labels, lm.points)
    except HeadPoseError as exc:
        _err(f"{image_id}: {exc}")
        return 1
    camera_desc = (f"scale={args.scale!r}" if args.projection == "weak"
                   else f"focal={args.focal!r} distance={args.distance!r}")
    header = (f"headpose4 {__version__} synth projection={args.projection} {camera_desc} center={cu!r},{cv!r} "
              f"noise_px={args.noise_px!r} seed={args.seed} morph_rad={args.morph_rad!r} "
              f"model={_model_tag(args.model)}")
    write_landmarks(args.out, landmarks, comment=header)
    write_poses(args.truth, poses, comment=header)
    return 0


def format_report(mae, std, n, failed, wall_ms=None) -> str:
    lines = [f"# headpose4 eval n={n} failed={failed}", "angle,mae,std"]
    for name, m, s in zip(ANGLES, mae, std):
        lines.append(f"{name},{m:.2f},{s:.2f}")
    if wall_ms is not None and len(wall_ms):
        lines.append(f"# wall time per image (ms): median={np.median(wall_ms):.3f} "
                     f"mean={np.mean(wall_ms):.3f} max={np.max(wall_ms):.3f}")
    return "\n".join(lines) + "\n"


def cmd_eval(args) -> int:
    try:
        preds = read_predictions(args.pred)
        truth = read_poses(args.truth)
    except (OSError, InvalidInputError) as exc:
        _err(exc)
        return 1
    missing_pred = sorted(set(truth) - set(preds))
    missing_truth = sorted(set(preds) - set(truth))
    if missing_pred or missing_truth:
        if missing_pred:
            _err(f"no prediction for: {', '.join(missing_pred)}")
        if missing_truth:
            _err(f"no ground truth for: {', '.join(missing_truth)}")
        return 1
    ok = [preds[i] for i in sorted(preds) if preds[i].ok]
    if not ok:
        _err("every prediction is a failure row; nothing to score")
        return 1
    errors = np.array([angle_errors(p.angles.as_array(), truth[p.image_id].as_array()) for p in ok])
    mae, std = mae_std(errors)
    walls = [p.wall_time_ms for p in ok if p.wall_time_ms is not None]
    report = format_report(mae, std, len(ok), len(preds) - len(ok), walls or None)
    sys.stdout.write(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(report)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="headpose4", description="Head pose from four facial landmarks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate poses from a landmarks CSV")
    p.add_argument("--landmarks", required=True, help="CSV with image_id,label,u,v")
    p.add_argument("--out", required=True, help="predictions CSV to write")
    p.add_argument("--model", help="model CSV with label,x,y,z (default: bundled model)")
    p.add_argument("--eta", type=float, default=DEFAULT_ETA, help="penalty on model deformation (default %(default)s)")
    p.add_argument("--tol", type=float, default=1e-6, help="stop when an accepted step improves less (default %(default)s)")
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--constraints", choices=("symmetric", "free"), default="symmetric")
    p.add_argument("--no-morph", action="store_true", help="skip model morphing; rotation from the reference model")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--timing", action="store_true", help="add a wall_time_ms column")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("synth", help="render synthetic landmarks for a list of poses")
    p.add_argument("--poses", required=True, help="CSV with image_id,pitch,yaw,roll (degrees)")
    p.add_argument("--out", required=True, help="landmarks CSV to write")
    p.add_argument("--truth", required=True, help="ground-truth poses CSV to write")
    p.add_argument("--model", help="model CSV (default: bundled model)")
    p.add_argument("--projection", choices=("weak", "full"), default="weak")
    p.add_argument("--scale", type=float, default=4.0, help="weak projection: pixels per model unit")
    p.add_argument("--focal", type=float, default=800.0, help="full projection: focal length in pixels")
    p.add_argument("--distance", type=float, default=600.0, help="full projection: camera distance in model units")
    p.add_argument("--center", type=_parse_pair, default=(320.0, 240.0), help="image position of the model origin, 'u,v'")
    p.add_argument("--noise-px", type=float, default=0.0, help="Gaussian landmark noise sigma in pixels")
    p.add_argument("--morph-rad", type=float, default=0.0,
                   help="perturb the model by a random symmetric on-sphere morph up to this many radians")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="score predictions against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out", help="also write the report here")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

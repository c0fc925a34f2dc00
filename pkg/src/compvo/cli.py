"""Command-line frontend.

Subcommands: ``align`` (two frames), ``run`` (a sequence), ``eval``
(trajectory metrics), ``synth-gen`` (synthetic sequences), ``plot``.
Configuration precedence is flags over a JSON config file over built-in
defaults, and every command that writes an output directory echoes its
effective configuration there. Exit codes: 0 success, 1 estimation failure,
2 input or usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import kitti_io, synth
from .estimator import (
    EstimationError,
    EstimatorConfig,
    chain_windows,
    compositional_estimate,
    estimate_windows,
    evaluate_losses,
)
from .losses import LossReport, LossWeights
from .metrics import ate_full, ate_snippet
from .se3 import Twist, to_twist
from .synth import make_scene, make_sequence, scene_from_config

DATA_ROOT_ENV = "COMPVO_DATA_ROOT"

_CONFIG_KEYS = {
    "steps": 2,
    "pyramid_levels": 4,
    "inner_iterations": 20,
    "damping": 1e-3,
    "tol": 1e-10,
    "max_step_rotation": 0.3,
    "max_step_translation": 0.5,
    "lambda_ph": 0.15,
    "lambda_d": 0.85,
    "lambda_s": 0.1,
    "lambda_e": 0.1,
    "snippet": 3,
    "jobs": 1,
    "depth_scale": 256.0,
}


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def _estimator_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="JSON config file")
    parser.add_argument("--steps", type=int, help="re-estimation steps r")
    parser.add_argument("--pyramid-levels", type=int, dest="pyramid_levels")
    parser.add_argument("--inner-iterations", type=int, dest="inner_iterations")
    parser.add_argument("--damping", type=float)
    parser.add_argument("--tol", type=float)
    parser.add_argument("--max-step-rotation", type=float, dest="max_step_rotation")
    parser.add_argument("--max-step-translation", type=float, dest="max_step_translation")
    parser.add_argument("--lambda-ph", type=float, dest="lambda_ph")
    parser.add_argument("--lambda-d", type=float, dest="lambda_d")
    parser.add_argument("--lambda-s", type=float, dest="lambda_s")
    parser.add_argument("--lambda-e", type=float, dest="lambda_e")


def _effective_config(args: argparse.Namespace) -> dict:
    merged = dict(_CONFIG_KEYS)
    config_path = getattr(args, "config", None)
    if config_path is not None:
        with open(config_path, "r", encoding="utf-8") as fh:
            file_cfg = json.load(fh)
        unknown = set(file_cfg) - set(merged)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        merged.update(file_cfg)
    for key in merged:
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag
    return merged


def _estimator_config(cfg: dict) -> EstimatorConfig:
    return EstimatorConfig(
        steps=int(cfg["steps"]),
        pyramid_levels=int(cfg["pyramid_levels"]),
        max_inner_iterations=int(cfg["inner_iterations"]),
        damping_init=float(cfg["damping"]),
        convergence_tol=float(cfg["tol"]),
        max_step_rotation=float(cfg["max_step_rotation"]),
        max_step_translation=float(cfg["max_step_translation"]),
        weights=LossWeights(
            lambda_ph=float(cfg["lambda_ph"]),
            lambda_d=float(cfg["lambda_d"]),
            lambda_s=float(cfg["lambda_s"]),
            lambda_e=float(cfg["lambda_e"]),
        ),
    )


def _echo_config(cfg: dict, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "config.json", "w", encoding="utf-8") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _twist_dict(tw: Twist) -> dict:
    return {
        "rx": tw.rx, "ry": tw.ry, "rz": tw.rz,
        "tx": tw.tx, "ty": tw.ty, "tz": tw.tz,
    }


def _report_dict(report: LossReport) -> dict:
    return {
        "photometric": report.photometric,
        "dssim": report.dssim,
        "smoothness": report.smoothness,
        "mask_reg": report.mask_reg,
        "total": report.total,
        "per_scale": list(report.per_scale),
    }


def cmd_align(args: argparse.Namespace) -> int:
    cfg_dict = _effective_config(args)
    cfg = _estimator_config(cfg_dict)
    target = kitti_io.load_image(args.target)
    source = kitti_io.load_image(args.source)
    depth = kitti_io.load_depth(args.depth, float(cfg_dict["depth_scale"]))
    intrinsics = kitti_io.load_intrinsics(
        args.calib, width=target.width, height=target.height, key=args.calib_key
    )
    out_dir = Path(args.out_dir)
    _echo_config(cfg_dict, out_dir)

    poses, masks, trace = compositional_estimate(
        target, [source], depth, intrinsics, cfg
    )
    final_warped = [steps[-1].warped for steps in trace.records]
    report = evaluate_losses(target, final_warped, masks, depth, cfg)

    kitti_io.save_image(final_warped[0], out_dir / "warped.png")
    trace.dump_jsonl(out_dir / "trace.jsonl")
    result = {
        "twist": _twist_dict(to_twist(poses[0])),
        "pose": [float(v) for v in poses[0].matrix()[:3].reshape(-1)],
        "mask_coverage": masks[0].coverage(),
        "loss": _report_dict(report),
        "steps": [
            {
                "step": i + 1,
                "increment": _twist_dict(rec.increment),
                "photometric": rec.photometric,
            }
            for i, rec in enumerate(trace.records[0])
        ],
    }
    with open(out_dir / "result.json", "w", encoding="utf-8") as fh:
        json.dump(result, fh, indent=2)
        fh.write("\n")
    print(json.dumps(result, indent=2))
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    cfg_dict = _effective_config(args)
    cfg = _estimator_config(cfg_dict)
    root = args.root if args.root is not None else os.environ.get(DATA_ROOT_ENV)
    if root is None:
        raise ValueError(f"no sequence root given and {DATA_ROOT_ENV} is unset")
    manifest = kitti_io.discover_sequence(root, args.sequence)
    if manifest.depth_dir is None:
        raise ValueError(f"sequence {manifest.sequence_id} has no depth directory")
    if manifest.calib_path is None:
        raise ValueError(f"sequence {manifest.sequence_id} has no calib.txt")
    frames = kitti_io.load_frames(manifest)
    depths = kitti_io.load_depths(manifest)
    intrinsics = kitti_io.load_intrinsics(
        manifest.calib_path, width=frames[0].width, height=frames[0].height
    )
    out_dir = Path(args.out_dir)
    _echo_config(cfg_dict, out_dir)

    snippet = int(cfg_dict["snippet"])
    windows = estimate_windows(
        frames, depths, intrinsics, cfg,
        snippet_len=snippet, jobs=int(cfg_dict["jobs"]),
    )
    trajectory = chain_windows(windows, len(frames))
    kitti_io.save_trajectory(trajectory, out_dir / "trajectory.txt")

    loss_lines = ["center," + LossReport.csv_header().split(",", 1)[1]]
    for window in windows:
        if window.report is not None:
            loss_lines.append(window.report.csv_row(window.center))
    with open(out_dir / "losses.csv", "w", encoding="ascii") as fh:
        fh.write("\n".join(loss_lines) + "\n")

    labeled = [("estimate", trajectory)]
    if manifest.pose_path is not None:
        labeled.append(("ground-truth", kitti_io.load_poses(manifest.pose_path)))
    if args.plot:
        kitti_io.emit_plot(labeled, out_dir / "trajectory.svg")

    n_failed = len(trajectory.failed)
    print(
        f"frames={len(frames)} windows={len(windows)} failed={n_failed} "
        f"out={out_dir}"
    )
    return 1 if n_failed else 0


def cmd_eval(args: argparse.Namespace) -> int:
    pred = kitti_io.load_poses(args.pred)
    gt = kitti_io.load_poses(args.gt)
    lengths = [args.snippet] if args.snippet else [3, 5]
    rows = []
    for length in lengths:
        if len(pred) < length:
            continue
        result = ate_snippet(pred, gt, length)
        rows.append((f"snippet_ate_{length}", result))
        print(f"snippet_ate_{length}: {result.format()}")
    full = ate_full(pred, gt)
    print(f"full_ate: {_fmt(full)}")
    if args.csv:
        lines = ["metric,mean,std,count"]
        for name, result in rows:
            lines.append(f"{name},{result.csv_row()}")
        lines.append(f"full_ate,{full!r},,{len(pred)}")
        with open(args.csv, "w", encoding="ascii") as fh:
            fh.write("\n".join(lines) + "\n")
    return 0


def cmd_synth_gen(args: argparse.Namespace) -> int:
    if args.scene_config is not None:
        with open(args.scene_config, "r", encoding="utf-8") as fh:
            scene = scene_from_config(json.load(fh))
    else:
        scene = make_scene(
            seed=args.seed,
            width=args.width,
            height=args.height,
            d0=args.plane_depth,
        )
    k = scene.intrinsics
    # Per-frame motion: a pure x translation worth --shift-px pixels of
    # disparity at the plane depth, unless an explicit twist is given.
    if args.motion is not None:
        values = [float(tok) for tok in args.motion.split(",")]
        if len(values) != 6:
            raise ValueError("--motion needs rx,ry,rz,tx,ty,tz")
        step = Twist(*values)
    else:
        step = Twist(tx=args.shift_px * scene.d0 / k.fx)

    frames, depths, gt = make_sequence(scene, step, args.frames)

    out = Path(args.out_dir)
    seq_dir = out / "sequences" / args.sequence
    image_dir = seq_dir / "image_0"
    depth_dir = seq_dir / "depth_0"
    pose_dir = out / "poses"
    for directory in (image_dir, depth_dir, pose_dir):
        directory.mkdir(parents=True, exist_ok=True)
    for i, (frame, depth) in enumerate(zip(frames, depths)):
        kitti_io.save_image(frame, image_dir / f"{i:06d}.png")
        kitti_io.save_depth(depth, depth_dir / f"{i:06d}.png")
    kitti_io.save_intrinsics(k, seq_dir / "calib.txt")
    kitti_io.save_trajectory(gt, pose_dir / f"{args.sequence}.txt")
    with open(out / "scene.json", "w", encoding="utf-8") as fh:
        json.dump(scene.to_config(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {len(frames)} frames to {out}")
    return 0


def cmd_plot(args: argparse.Namespace) -> int:
    labels = args.labels.split(",") if args.labels else []
    trajectories = []
    for i, path in enumerate(args.trajectories):
        label = labels[i] if i < len(labels) else Path(path).stem
        trajectories.append((label, kitti_io.load_poses(path)))
    kitti_io.emit_plot(trajectories, args.out)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="compvo",
        description="Direct visual odometry by compositional re-estimation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_align = sub.add_parser("align", help="align a source frame to a target frame")
    p_align.add_argument("target", type=Path)
    p_align.add_argument("source", type=Path)
    p_align.add_argument("--depth", type=Path, required=True)
    p_align.add_argument("--calib", type=Path, required=True)
    p_align.add_argument("--calib-key", default="P0", dest="calib_key")
    p_align.add_argument("--depth-scale", type=float, dest="depth_scale")
    p_align.add_argument("--out-dir", type=Path, default=Path("align_out"), dest="out_dir")
    _estimator_flags(p_align)
    p_align.set_defaults(func=cmd_align)

    p_run = sub.add_parser("run", help="estimate a trajectory for a sequence")
    p_run.add_argument("root", nargs="?", default=None,
                       help=f"KITTI-layout root (default ${DATA_ROOT_ENV})")
    p_run.add_argument("--sequence", default="00")
    p_run.add_argument("--snippet", type=int)
    p_run.add_argument("--jobs", type=int)
    p_run.add_argument("--depth-scale", type=float, dest="depth_scale")
    p_run.add_argument("--plot", action="store_true")
    p_run.add_argument("--out-dir", type=Path, default=Path("run_out"), dest="out_dir")
    _estimator_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    p_eval = sub.add_parser("eval", help="evaluate a trajectory against ground truth")
    p_eval.add_argument("pred", type=Path)
    p_eval.add_argument("gt", type=Path)
    p_eval.add_argument("--snippet", type=int, default=None,
                        help="restrict to one snippet length (default: 3 and 5)")
    p_eval.add_argument("--csv", type=Path, default=None)
    p_eval.set_defaults(func=cmd_eval)

    p_synth = sub.add_parser("synth-gen", help="render a synthetic sequence")
    p_synth.add_argument("--out-dir", type=Path, required=True, dest="out_dir")
    p_synth.add_argument("--scene-config", type=Path, default=None, dest="scene_config")
    p_synth.add_argument("--sequence", default="00")
    p_synth.add_argument("--frames", type=int, default=10)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--width", type=int, default=synth.DEFAULT_WIDTH)
    p_synth.add_argument("--height", type=int, default=synth.DEFAULT_HEIGHT)
    p_synth.add_argument("--plane-depth", type=float, default=synth.DEFAULT_DEPTH,
                         dest="plane_depth")
    p_synth.add_argument("--shift-px", type=float, default=2.0, dest="shift_px",
                         help="per-frame disparity of the plane in pixels")
    p_synth.add_argument("--motion", default=None,
                         help="explicit per-frame twist rx,ry,rz,tx,ty,tz")
    p_synth.set_defaults(func=cmd_synth_gen)

    p_plot = sub.add_parser("plot", help="plot trajectories top-down")
    p_plot.add_argument("trajectories", nargs="+", type=Path)
    p_plot.add_argument("--labels", default=None)
    p_plot.add_argument("--out", type=Path, required=True)
    p_plot.set_defaults(func=cmd_plot)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except EstimationError as err:
        print(f"error: estimation failed: {err}", file=sys.stderr)
        return 1
    except (ValueError, OSError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()

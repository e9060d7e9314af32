"""
Command line entry point: `twinnav <subcommand> [options]`.

Every subcommand writes its results to files and prints a one-line JSON summary
on stdout. Exit codes: 0 success, 1 usage error, 2 computation error.
"""

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from twinnav import config
from twinnav.exceptions import NameMismatch, TwinNavError
from twinnav.image import read_ppm, write_ppm
from twinnav.io import (
    load_correspondences,
    load_fiducials,
    load_intrinsics,
    load_transform,
    read_json,
    transform_to_list,
    write_json,
)
from twinnav.mesh import edge_statistics, export_ply, mesh_from_checkpoint
from twinnav.metrics import evaluate
from twinnav.pnp import head_pose_angles, head_position_px, solve_pnp
from twinnav.radiance import (
    RenderConfig,
    TrainConfig,
    load_checkpoint,
    load_dataset,
    render_image,
    save_checkpoint,
    train,
)
from twinnav.registration import normalize_scale, rigid_register
from twinnav.simulate import SimulationConfig, simulate, write_dataset

LOGGER = logging.getLogger("twinnav")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILURE = 2


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    subcommand: str
    paths: dict = field(default_factory=dict)
    overrides: dict = field(default_factory=dict)
    deterministic: bool = False
    seed: Optional[int] = None
    threads: Optional[int] = None

    @classmethod
    def from_args(cls, args):
        values = {k: v for k, v in vars(args).items() if k not in ("func", "verbose")}
        paths = {k: v for k, v in values.items() if isinstance(v, Path)}
        shared = ("subcommand", "deterministic", "seed", "threads")
        overrides = {
            k: v for k, v in values.items() if k not in paths and k not in shared and v is not None
        }
        return cls(args.subcommand, paths, overrides, args.deterministic, args.seed, args.threads)


def _render_config(args, stratified=False):
    return RenderConfig(
        near=args.near,
        far=args.far,
        samples=args.samples,
        stratified=stratified,
        background_color=config.WHITE_BACKGROUND if args.white_background else config.BACKGROUND,
        seed=args.seed or 0,
    )


def cmd_train(run, args):
    dataset = load_dataset(args.data)
    cfg = TrainConfig(
        steps=args.steps,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        seed=run.seed or 0,
        render=_render_config(args, stratified=True),
        log_every=args.log_every,
        threads=run.threads,
        deterministic=run.deterministic,
    )
    result = train(dataset, cfg)
    save_checkpoint(result.params, args.out)
    losses_path = args.losses or args.out.with_suffix(".losses.json")
    write_json(losses_path, {"losses": result.losses})
    return {
        "checkpoint": str(args.out),
        "losses": str(losses_path),
        "steps": len(result.losses),
        "final_loss": result.losses[-1] if result.losses else None,
    }


def cmd_render(run, args):
    params = load_checkpoint(args.checkpoint)
    K = load_intrinsics(args.intrinsics)
    pose = load_transform(args.pose)
    image = render_image(params, K, pose, _render_config(args), run.threads)
    write_ppm(image, args.out)
    return {"image": str(args.out), "width": image.width, "height": image.height}


def cmd_mesh(run, args):
    params = load_checkpoint(args.checkpoint)
    mesh, _ = mesh_from_checkpoint(params, args.res, args.iso, run.threads)
    export_ply(mesh, args.out)
    stats = edge_statistics(mesh)
    return {
        "mesh": str(args.out),
        "vertices": stats.vertices,
        "faces": stats.faces,
        "watertight": stats.watertight,
        "iso_in_range": mesh.iso_in_range,
    }


def cmd_pose(run, args):
    K = load_intrinsics(args.intrinsics)
    corr = load_correspondences(args.correspondences)
    solution = solve_pnp(K, corr, max_iterations=args.max_iterations)
    angles = head_pose_angles(solution)
    position = head_position_px(K, solution)
    result = {
        "matrix": transform_to_list(solution.pose),
        "yaw": angles.yaw,
        "pitch": angles.pitch,
        "roll": angles.roll,
        "rms_px": solution.rms_reprojection_px,
        "iterations": solution.iterations,
        "converged": solution.converged,
        "head_position_px": [position.u, position.v],
    }
    write_json(args.out, result)
    return {"solution": str(args.out), "rms_px": result["rms_px"], "converged": solution.converged}


def cmd_register(run, args):
    moving = load_fiducials(args.moving, "tracking")
    fixed = load_fiducials(args.fixed, "model")
    missing = sorted(set(moving.names) - set(fixed.names))
    if missing:
        raise NameMismatch(f"fiducials missing from {args.fixed}: {', '.join(missing)}")
    factor = 1.0
    if args.normalize_scale:
        fixed, factor = normalize_scale(fixed, moving)
    fixed = fixed.select(moving.names)
    result = rigid_register(moving, fixed)
    payload = result.to_dict()
    if args.normalize_scale:
        payload["scale_factor"] = factor
    write_json(args.out, payload)
    return {"result": str(args.out), "fre_mm": result.fre_mm}


def cmd_simulate(run, args):
    cfg = SimulationConfig.from_dict(read_json(args.config))
    if run.seed is not None:
        cfg = replace(cfg, noise=replace(cfg.noise, seed=run.seed))
    params = load_checkpoint(args.checkpoint) if args.checkpoint else None
    dataset, report = simulate(cfg, params, run.threads)
    if args.dataset_dir:
        write_dataset(dataset, args.dataset_dir)
    payload = report.to_dict(cfg.to_dict())
    write_json(args.out, payload)
    return {
        "report": str(args.out),
        "frames": payload["frame_count"],
        "angle_rmse_deg": payload["angle_rmse_deg"],
        "paper_fre_mm": payload["paper_fre_mm"],
    }


def cmd_metrics(run, args):
    report = evaluate(read_ppm(args.ref), read_ppm(args.test))
    write_json(args.out, report.to_dict())
    return {"metrics": str(args.out), **report.to_dict()}


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _render_flags(parser):
    parser.add_argument("--near", type=float, default=config.NEAR_MM)
    parser.add_argument("--far", type=float, default=config.FAR_MM)
    parser.add_argument("--samples", type=int, default=config.RENDER_SAMPLES)
    parser.add_argument("--white-background", action="store_true")


def build_parser():
    shared = ArgumentParser(add_help=False)
    shared.add_argument("--seed", type=int, default=None)
    shared.add_argument("--deterministic", action="store_true")
    shared.add_argument("--threads", type=_positive_int, default=None)
    shared.add_argument("--verbose", action="store_true")

    parser = ArgumentParser(prog="twinnav", description="Head digital-twin navigation toolkit")
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="subcommand")

    p = sub.add_parser("train", parents=[shared], help="fit a radiance field")
    p.add_argument("--data", type=Path, required=True, help="dataset manifest JSON")
    p.add_argument("--out", type=Path, required=True, help="checkpoint path")
    p.add_argument("--losses", type=Path, default=None, help="loss log JSON")
    p.add_argument("--steps", type=int, default=config.TRAIN_STEPS)
    p.add_argument("--batch-size", type=int, default=config.BATCH_SIZE)
    p.add_argument("--lr", type=float, default=config.LEARNING_RATE)
    p.add_argument("--log-every", type=int, default=config.LOG_EVERY)
    _render_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("render", parents=[shared], help="render a view of a checkpoint")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--intrinsics", type=Path, required=True)
    p.add_argument("--pose", type=Path, required=True, help="camera-to-world transform JSON")
    p.add_argument("--out", type=Path, required=True, help="PPM image path")
    _render_flags(p)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("mesh", parents=[shared], help="extract a PLY mesh from a checkpoint")
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--res", type=int, default=config.MC_RESOLUTION)
    p.add_argument("--iso", type=float, default=config.MC_ISO)
    p.set_defaults(func=cmd_mesh)

    p = sub.add_parser("pose", parents=[shared], help="solve head pose from correspondences")
    p.add_argument("--intrinsics", type=Path, required=True)
    p.add_argument("--correspondences", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--max-iterations", type=int, default=config.LM_MAX_ITERATIONS)
    p.set_defaults(func=cmd_pose)

    p = sub.add_parser("register", parents=[shared], help="rigidly register fiducial sets")
    p.add_argument("--moving", type=Path, required=True, help="tracking-frame fiducials")
    p.add_argument("--fixed", type=Path, required=True, help="model-frame fiducials")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--normalize-scale", action="store_true", help="match eye-corner distance")
    p.set_defaults(func=cmd_register)

    p = sub.add_parser("simulate", parents=[shared], help="run the synthetic end-to-end harness")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="report JSON")
    p.add_argument("--dataset-dir", type=Path, default=None)
    p.add_argument("--checkpoint", type=Path, default=None, help="field for held-out metrics")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("metrics", parents=[shared], help="PSNR and SSIM of two PPM images")
    p.add_argument("--ref", type=Path, required=True)
    p.add_argument("--test", type=Path, required=True)
    p.add_argument("--out", type=Path, default=Path("metrics.json"))
    p.set_defaults(func=cmd_metrics)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
        stream=sys.stderr,
    )
    run = RunConfig.from_args(args)
    LOGGER.debug("run config %s", run)
    try:
        summary = args.func(run, args)
    except (TwinNavError, OSError, ValueError) as exc:
        print(f"twinnav {run.subcommand}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK

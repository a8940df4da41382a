"""Command line front end: ``physloc <command> ...``.

Exit codes: 0 success, 2 invalid input, 3 I/O failure, 4 numerical
divergence. Errors are reported on stderr as one line
``physloc: error: <CODE>: <message>``.
"""

import argparse
import os
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .exceptions import (
    DivergedRecovery,
    EmptyEvaluationSet,
    InvalidInput,
    IOFailure,
    MissingGroundTruth,
    PhyslocError,
    StepLimitExceeded,
)
from .geometry import CameraRig, IntrinsicParams, calibrate_extrinsics, reprojection_rms
from .integrator import BallState, SolverConfig, sample_trajectory
from .io import (
    dumps,
    load_clip,
    load_correspondences,
    load_scene,
    read_csv,
    read_json,
    write_csv,
    write_json,
)
from .metrics import BinSpec, dtg, dtg_binned
from .plotting import line_chart
from .recovery import RecoveryConfig, recover
from .simulator import DatasetSpec, generate_dataset

EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_DIVERGED = 0, 2, 3, 4
SEED_ENV = "PHYSLOC_SEED"


def exit_code(exc):
    if isinstance(exc, IOFailure):
        return EXIT_IO
    if isinstance(exc, (DivergedRecovery, StepLimitExceeded)):
        return EXIT_DIVERGED
    return EXIT_INVALID


def resolve_seed(flag_value, default=0):
    """``PHYSLOC_SEED`` beats ``--seed`` beats the configured default."""
    env = os.environ.get(SEED_ENV)
    if env is not None and env.strip():
        try:
            return int(env)
        except ValueError:
            raise InvalidInput(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return default if flag_value is None else int(flag_value)


def write_manifest(out_dir, command, config, seed, inputs, outputs, started):
    manifest = {
        "command": command,
        "argv": sys.argv[1:],
        "config": config,
        "seed": seed,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "wall_clock_s": round(time.perf_counter() - started, 6),
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
    }
    return write_json(Path(out_dir) / "manifest.json", manifest)


def _print_config(config):
    sys.stdout.write(dumps(config))
    return EXIT_OK


def _load_config_file(path):
    if path is None:
        return {}
    data = read_json(path)
    if not isinstance(data, dict):
        raise InvalidInput(f"{path}: config must be a JSON object")
    return data


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args):
    started = time.perf_counter()
    if args.spec is None:
        raw = {}
    else:
        raw = read_json(args.spec)
        if not isinstance(raw, dict):
            raise InvalidInput(f"{args.spec}: dataset spec must be a JSON object")
    spec = DatasetSpec.from_dict(raw)
    seed = resolve_seed(args.seed, spec.seed)
    spec = replace(spec, seed=seed)
    if args.print_config:
        return _print_config(spec.to_dict())
    if args.out is None:
        raise InvalidInput("simulate needs an output directory")
    bundle = generate_dataset(spec, jobs=args.jobs)
    outputs = bundle.write(args.out)
    write_manifest(args.out, "simulate", spec.to_dict(), seed, [args.spec] if args.spec else [], outputs, started)
    print(f"wrote {len(bundle)} clips to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# calibrate


def _load_intrinsics(path):
    data = read_json(path)
    if isinstance(data, dict) and "intrinsics" in data:
        data = data["intrinsics"]
    return IntrinsicParams.from_dict(data)


def cmd_calibrate(args):
    started = time.perf_counter()
    config = {"max_iter": args.max_iter, "gtol": args.gtol, "refine": not args.no_refine}
    if args.print_config:
        return _print_config(config)
    world, pixels = load_correspondences(args.correspondences)
    intrinsics = _load_intrinsics(args.intrinsics)
    kwargs = {"max_iter": args.max_iter, "gtol": args.gtol} if config["refine"] else {}
    result = calibrate_extrinsics(world, pixels, intrinsics, refine=config["refine"], **kwargs)
    rig = CameraRig(intrinsics, result.extrinsics)
    rms = reprojection_rms(result.extrinsics, world, pixels, intrinsics)
    out = Path(args.out)
    payload = rig.to_dict()
    payload["calibration"] = {"reprojection_rms_px": rms, "converged": result.converged, "n_iter": result.n_iter,
                              "n_correspondences": len(world)}
    write_json(out, payload)
    write_manifest(out.parent, "calibrate", config, None, [args.correspondences, args.intrinsics], [out], started)
    print(f"reprojection_rms_px={rms:.6g} converged={str(result.converged).lower()}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# recover


def _recovery_config(args):
    """Built-in defaults, overlaid by the config file, overlaid by flags."""
    base = RecoveryConfig().to_dict()
    file_cfg = _load_config_file(args.config)
    unknown = set(file_cfg) - set(base)
    if unknown:
        raise InvalidInput(f"unknown recovery config keys: {sorted(unknown)}")
    base.update(file_cfg)
    flags = {
        "delta_n": args.delta_n,
        "loss_mode": args.loss_mode,
        "lr": args.lr,
        "steps": args.steps,
        "warmup_steps": args.warmup,
        "init_depth": args.init_depth,
    }
    base.update({k: v for k, v in flags.items() if v is not None})
    if args.no_warm_start:
        base["warm_start"] = False
    if args.detach_velocity:
        base["detach_velocity"] = True
    solver = base.pop("solver")
    if not isinstance(solver, dict):
        raise InvalidInput("solver config must be an object")
    try:
        cfg = RecoveryConfig(solver=SolverConfig(**solver), **base)
    except TypeError as exc:
        raise InvalidInput(f"malformed recovery config: {exc}") from None
    return cfg


def _rig_for(rig_path, clip):
    path = Path(rig_path)
    if path.is_dir():
        path = path / f"rig{clip.rig_id}.json"
    return CameraRig.from_dict(read_json(path)), path


def _recover_job(job):
    """Run one recovery; returns ``(report, csv_rows, error)`` without touching the disk."""
    clip_path, clip, scene, rig, cfg = job
    try:
        result = recover(clip, scene, rig, cfg)
    except DivergedRecovery as exc:
        return None, None, ("diverged", str(exc), exc.trace)
    except PhyslocError as exc:
        return None, None, (exc.code, str(exc), None)
    frames = []
    rows = []
    has_gt = clip.gt_world is not None
    for i in range(len(clip)):
        f = {
            "t": float(clip.times[i]),
            "label": clip.labels[i].tolist(),
            "z_recovered": float(result.depths[i]),
            "world_xyz": result.world[i].tolist(),
            "optimized": bool(result.optimized[i]),
        }
        row = [i, clip.times[i], clip.labels[i, 0], clip.labels[i, 1], result.depths[i], *result.world[i]]
        if has_gt:
            f["gt_world"] = clip.gt_world[i].tolist()
            row += list(clip.gt_world[i])
        if clip.gt_depth is not None:
            f["gt_depth"] = float(clip.gt_depth[i])
            row.append(clip.gt_depth[i])
        frames.append(f)
        rows.append(row)
    report = {
        "clip": str(clip_path),
        "rig_id": clip.rig_id,
        "fps": clip.fps,
        "rig": rig.to_dict(),
        "config": cfg.to_dict(),
        "frames": frames,
        "loss_trace": result.loss_trace.tolist(),
        "final_loss": result.final_loss,
    }
    if has_gt:
        mean, std = dtg(result.world, clip.gt_world)
        report["metrics"] = {"dtg_mean_m": mean, "dtg_std_m": std}
        if clip.gt_depth is not None:
            report["metrics"]["depth_rmse_m"] = float(np.sqrt(np.mean((result.depths - clip.gt_depth) ** 2)))
    return report, rows, None


def _csv_header(clip):
    header = ["frame", "t", "u", "v", "z_recovered", "x", "y", "z"]
    if clip.gt_world is not None:
        header += ["gt_x", "gt_y", "gt_z"]
    if clip.gt_depth is not None:
        header.append("gt_depth")
    return header


def cmd_recover(args):
    started = time.perf_counter()
    cfg = _recovery_config(args)
    seed = resolve_seed(args.seed, 0)
    if args.print_config:
        return _print_config(cfg.to_dict())
    if not args.clips:
        raise InvalidInput("recover needs at least one clip file")
    if args.scene is None or args.rig is None or args.out is None:
        raise InvalidInput("recover needs --scene, --rig and --out")
    scene = load_scene(args.scene)
    jobs, inputs = [], [args.scene]
    for path in args.clips:
        clip = load_clip(path)
        if cfg.loss_mode == "3d-gt" and clip.gt_world is None:
            raise MissingGroundTruth(f"{path}: 3d-gt loss needs gt_world for every frame")
        rig, rig_path = _rig_for(args.rig, clip)
        jobs.append((path, clip, scene, rig, cfg))
        inputs += [path, rig_path]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_recover_job, jobs))
    else:
        results = [_recover_job(j) for j in jobs]

    out = Path(args.out)
    outputs, failures, dists = [], [], []
    for (path, clip, *_), (report, rows, err) in zip(jobs, results):
        stem = Path(path).stem
        if err is not None:
            failures.append((stem, err))
            if err[2] is not None:
                outputs.append(write_json(out / f"{stem}.trace.json", {"clip": str(path), "loss_trace": err[2]}))
            continue
        report["seed"] = seed
        outputs.append(write_json(out / f"{stem}.report.json", report))
        outputs.append(write_csv(out / f"{stem}.csv", _csv_header(clip), rows))
        if "metrics" in report:
            dists.append(np.linalg.norm(np.array([f["world_xyz"] for f in report["frames"]])
                                        - np.array([f["gt_world"] for f in report["frames"]]), axis=1))
            m = report["metrics"]
            print(f"{stem}: dtg_mean_m={m['dtg_mean_m']:.6g} dtg_std_m={m['dtg_std_m']:.6g}")
        else:
            print(f"{stem}: final_loss={report['final_loss']:.6g}")
    write_manifest(out, "recover", cfg.to_dict(), seed, inputs, outputs, started)
    if dists:
        d = np.concatenate(dists)
        print(f"DtG: mean_m={d.mean():.6g} std_m={d.std():.6g} frames={d.size}")
    if failures:
        stem, (code, msg, _) = failures[0]
        raise DivergedRecovery(f"{len(failures)} clip(s) failed, first {stem}: {msg}", [])
    return EXIT_OK


# ---------------------------------------------------------------------------
# evaluate


def _report_pairs(path):
    report = read_json(path)
    try:
        frames = report["frames"]
        rig = CameraRig.from_dict(report["rig"])
        pred = np.array([f["world_xyz"] for f in frames], dtype=float).reshape(-1, 3)
        truth = np.array([f["gt_world"] for f in frames], dtype=float).reshape(-1, 3)
    except (KeyError, TypeError) as exc:
        raise MissingGroundTruth(f"{path}: report lacks {exc} needed for evaluation") from None
    return rig.world_to_camera(pred), rig.world_to_camera(truth)


def cmd_evaluate(args):
    started = time.perf_counter()
    spec = BinSpec(args.bins, args.zmin, args.zmax)
    config = {"bins": spec.b, "zmin": spec.z_min, "zmax": spec.z_max}
    if args.print_config:
        return _print_config(config)
    if not args.reports:
        raise EmptyEvaluationSet("no report files given")
    preds, truths = zip(*(_report_pairs(p) for p in args.reports))
    pred, truth = np.concatenate(preds), np.concatenate(truths)
    mean, std = dtg(pred, truth)
    bins, n_out = dtg_binned(pred, truth, spec)
    rows = [[b.index, b.z_lo, b.z_hi, b.count, b.mean, b.std] for b in bins]
    rows.append(["all", float(truth[:, 2].min()), float(truth[:, 2].max()), len(pred), mean, std])
    out = Path(args.out)
    write_csv(out, ["bin_index", "z_lo", "z_hi", "count", "mean_m", "std_m"], rows)
    write_manifest(out.parent, "evaluate", config, None, args.reports, [out], started)
    print(f"DtG: mean_m={mean:.6g} std_m={std:.6g} pairs={len(pred)} out_of_range={n_out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# forecast


def cmd_forecast(args):
    started = time.perf_counter()
    config = {"r0": args.r, "v0": args.v, "t0": args.t0, "t1": args.t1, "fps": args.fps,
              "rtol": args.rtol, "atol": args.atol}
    if args.print_config:
        return _print_config(config)
    if args.t1 < args.t0:
        raise InvalidInput(f"--t1 ({args.t1}) must be >= --t0 ({args.t0})")
    if not args.fps > 0:
        raise InvalidInput("--fps must be > 0")
    scene = load_scene(args.scene)
    n = int(np.floor((args.t1 - args.t0) * args.fps + 1e-9)) + 1
    times = args.t0 + np.arange(n) / args.fps
    states = sample_trajectory(BallState(args.r, args.v), args.t0, times, scene,
                               SolverConfig(rtol=args.rtol, atol=args.atol))
    rows = [[t, *s.r, *s.v] for t, s in zip(times, states)]
    out = Path(args.out)
    write_csv(out, ["t", "x", "y", "z", "vx", "vy", "vz"], rows)
    write_manifest(out.parent, "forecast", config, None, [args.scene], [out], started)
    print(f"wrote {n} states to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# plot


def cmd_plot(args):
    started = time.perf_counter()
    header, rows = read_csv(args.input)
    x_col = args.x
    if args.y:
        y_cols = args.y
    elif "z_recovered" in header:
        y_cols = ["z_recovered"] + (["gt_depth"] if "gt_depth" in header else [])
    else:
        y_cols = [c for c in ("x", "y", "z") if c in header]
    config = {"x": x_col, "y": y_cols, "title": args.title}
    if args.print_config:
        return _print_config(config)
    for col in [x_col, *y_cols]:
        if col not in header:
            raise InvalidInput(f"{args.input}: missing column {col!r}")
    try:
        data = np.array([[float(v) for v in r] for r in rows if r], dtype=float).reshape(-1, len(header))
    except ValueError as exc:
        raise InvalidInput(f"{args.input}: non-numeric value ({exc})") from None
    col = {name: data[:, i] for i, name in enumerate(header)}
    svg = line_chart(col[x_col], {c: col[c] for c in y_cols}, x_label=x_col, y_label=", ".join(y_cols),
                     title=args.title or Path(args.input).name)
    out = Path(args.out)
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(svg)
    except OSError as exc:
        raise IOFailure(f"cannot write {out}: {exc.strerror or exc}") from None
    write_manifest(out.parent, "plot", config, None, [args.input], [out], started)
    print(f"wrote {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="physloc", description="Physics-consistent monocular ball localisation.")
    p.add_argument("--version", action="version", version=f"physloc {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--print-config", action="store_true", help="print the resolved configuration and exit")

    s = sub.add_parser("simulate", help="generate a synthetic dataset")
    s.add_argument("spec", nargs="?", help="dataset spec JSON (defaults to the single-camera analog)")
    s.add_argument("out", nargs="?", help="output directory")
    s.add_argument("--seed", type=int)
    s.add_argument("--jobs", type=int, default=1)
    common(s)
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("calibrate", help="estimate camera extrinsics from correspondences")
    c.add_argument("correspondences", help="JSON list of {world, pixel}")
    c.add_argument("intrinsics", help="JSON intrinsics {fx, fy, cx, cy} or a camera file")
    c.add_argument("out", help="camera JSON to write")
    c.add_argument("--max-iter", type=int, default=200)
    c.add_argument("--gtol", type=float, default=1e-10)
    c.add_argument("--no-refine", action="store_true", help="skip the quasi-Newton refinement")
    common(c)
    c.set_defaults(func=cmd_calibrate)

    r = sub.add_parser("recover", help="recover camera depths of labelled clips")
    r.add_argument("clips", nargs="*", help="clip JSON files")
    r.add_argument("--scene", help="scene JSON")
    r.add_argument("--rig", help="camera JSON, or a directory holding rig<id>.json files")
    r.add_argument("--out", help="output directory")
    r.add_argument("--config", help="recovery config JSON (flags take precedence)")
    r.add_argument("--delta-n", type=int, action="append", help="forecast horizon in frames (repeatable)")
    r.add_argument("--loss-mode", choices=("2d-predict", "2d-gt", "3d-gt"))
    r.add_argument("--lr", type=float)
    r.add_argument("--steps", type=int)
    r.add_argument("--warmup", type=int, help="warmup steps")
    r.add_argument("--init-depth", type=float)
    r.add_argument("--no-warm-start", action="store_true")
    r.add_argument("--detach-velocity", action="store_true")
    r.add_argument("--seed", type=int)
    r.add_argument("--jobs", type=int, default=1)
    common(r)
    r.set_defaults(func=cmd_recover)

    e = sub.add_parser("evaluate", help="DtG and binned DtG over recovery reports")
    e.add_argument("reports", nargs="*")
    e.add_argument("--out", default="metrics.csv")
    e.add_argument("--bins", type=int, default=3)
    e.add_argument("--zmin", type=float, default=0.05)
    e.add_argument("--zmax", type=float, default=2.0)
    common(e)
    e.set_defaults(func=cmd_evaluate)

    f = sub.add_parser("forecast", help="integrate a ball state and write the trajectory")
    f.add_argument("--scene", required=True)
    f.add_argument("--r", type=float, nargs=3, required=True, metavar=("X", "Y", "Z"))
    f.add_argument("--v", type=float, nargs=3, default=[0.0, 0.0, 0.0], metavar=("VX", "VY", "VZ"))
    f.add_argument("--t0", type=float, default=0.0)
    f.add_argument("--t1", type=float, required=True)
    f.add_argument("--fps", type=float, default=30.0)
    f.add_argument("--rtol", type=float, default=1e-8)
    f.add_argument("--atol", type=float, default=1e-10)
    f.add_argument("--out", default="trajectory.csv")
    common(f)
    f.set_defaults(func=cmd_forecast)

    pl = sub.add_parser("plot", help="render CSV columns as an SVG line chart")
    pl.add_argument("input", help="report or trajectory CSV")
    pl.add_argument("out", help="SVG file to write")
    pl.add_argument("--x", default="t")
    pl.add_argument("--y", action="append", help="column to plot (repeatable)")
    pl.add_argument("--title")
    common(pl)
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be >= 1")
    try:
        return args.func(args)
    except PhyslocError as exc:
        sys.stderr.write(f"physloc: error: {exc.code}: {exc}\n")
        return exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())

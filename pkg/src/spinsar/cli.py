"""Command-line interface: scenario runner and reproduction harness.

Subcommands: simulate | motion | image | pointcloud | metrics | pipeline |
sweep-motion-error | resolution. Commands compose through files (cube,
heatmap, PLY, reports); every file-producing command drops a provenance
sidecar <output>.prov.yaml that can itself be fed back as a scenario.

Unit conventions: command-line arguments take SI values with angles in
degrees; files store SI with radians.

Exit codes: 0 success, 2 usage, 3 invalid input, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .beamshape import (
    analytic_curve,
    beam_shape_numeric,
    beamwidth_3db,
    min_resolved_separation,
)
from .config import RadarConfig, theoretical_resolutions
from .errors import (
    EstimationError,
    FormatError,
    InvalidConfig,
    NumericalError,
    SceneError,
)
from .imaging import (
    beamform_compensated,
    beamform_fast,
    load_heatmap,
    peak_range_image,
    save_heatmap,
)
from .motion import (
    RansacParams,
    estimate_motion_from_cube,
    format_motion_record,
    parse_motion_record,
)
from .pointcloud import (
    cfar_extract,
    chamfer,
    load_ply,
    modified_hausdorff,
    save_ply,
    save_range_image_csv,
    save_range_image_pgm,
)
from .scenario import Scenario, load_scenario, scenario_to_dict
from .scene import load_cube, save_cube, simulate


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_sidecar(
    anchor: Path,
    command: list[str],
    scenario: Scenario | None,
    inputs: list[Path],
    outputs: list[Path],
) -> None:
    doc: dict = {}
    if scenario is not None:
        doc["scenario"] = scenario_to_dict(scenario)
    doc["provenance"] = {
        "tool": "spinsar",
        "version": __version__,
        "command": command,
        "inputs": {str(p): _sha256(p) for p in inputs if p.exists()},
        "outputs": {str(p): _sha256(p) for p in outputs if p.exists()},
    }
    with open(anchor.with_name(anchor.name + ".prov.yaml"), "w") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False)


def _positive_float(text: str) -> float:
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
    return value


def _fov_list(text: str) -> list[float]:
    fovs = []
    for part in text.split(","):
        value = float(part)
        if not 0 < value <= 360:
            raise argparse.ArgumentTypeError(f"fov must lie in (0, 360] deg, got {part}")
        fovs.append(value)
    return fovs


def _float_list(text: str) -> list[float]:
    return [float(part) for part in text.split(",")]


def _ransac_params(scenario: Scenario) -> RansacParams:
    opts = scenario.motion_estimation
    return RansacParams(
        iterations=opts.get("iterations", 500),
        inlier_threshold_hz=opts.get("inlier_threshold_hz"),
        min_inlier_ratio=opts.get("min_inlier_ratio", 0.5),
        seed=opts.get("seed", scenario.seed),
    )


def _estimate_from_cube(cube, scenario: Scenario):
    opts = scenario.motion_estimation
    return estimate_motion_from_cube(
        cube,
        num_gates=opts.get("num_gates", 8),
        min_range_m=opts.get("min_range_m", 0.5),
        window_len=opts.get("window_len"),
        hop=opts.get("hop"),
        threshold=opts.get("threshold", 0.4),
        params=_ransac_params(scenario),
    )


def _resolve_motion_arg(text: str, cube, scenario: Scenario | None):
    """Parse --motion: 'none', 'estimate', 'v,heading_deg', or '@record-file'."""
    if text == "none":
        return None
    if text == "estimate":
        if scenario is None:
            raise InvalidConfig("--motion estimate needs --scenario for its settings")
        return _estimate_from_cube(cube, scenario)
    if text.startswith("@"):
        line = Path(text[1:]).read_text().strip().splitlines()[-1]
        return parse_motion_record(line)
    try:
        speed, heading_deg = (float(p) for p in text.split(","))
    except ValueError as exc:
        raise InvalidConfig(
            f"--motion must be 'none', 'estimate', '@file', or 'speed,heading_deg'; got {text!r}"
        ) from exc
    return (speed, math.radians(heading_deg))


# -- subcommands -----------------------------------------------------------


def cmd_simulate(args) -> int:
    scenario = load_scenario(args.scenario)
    cube = simulate(
        scenario.reflectors,
        scenario.cfg,
        trajectory=scenario.trajectory,
        pattern=scenario.pattern,
        noise_std=scenario.noise_std,
        seed=scenario.seed,
    )
    out = Path(args.out)
    save_cube(cube, out)
    _write_sidecar(out, sys.argv[1:], scenario, [Path(args.scenario)], [out])
    print(f"simulate: wrote {out} ({cube.samples.shape[0]}x{cube.samples.shape[1]}x{cube.samples.shape[2]})")
    return 0


def cmd_motion(args) -> int:
    scenario = load_scenario(args.scenario) if args.scenario else None
    cube = load_cube(args.cube, scenario.cfg if scenario else None)
    if scenario is not None:
        estimate = _estimate_from_cube(cube, scenario)
    else:
        estimate = estimate_motion_from_cube(cube)
    record = format_motion_record(estimate)
    print(record)
    if args.out:
        out = Path(args.out)
        out.write_text(record + "\n")
        _write_sidecar(out, sys.argv[1:], scenario, [Path(args.cube)], [out])
    return 0


def cmd_image(args) -> int:
    scenario = load_scenario(args.scenario)
    cube = load_cube(args.cube, scenario.cfg)
    motion = _resolve_motion_arg(args.motion, cube, scenario)
    beamform = beamform_fast if args.algorithm == "fast" else beamform_compensated
    heat = beamform(cube, scenario.grid, motion, threads=args.threads, window=args.window)
    out = Path(args.out)
    save_heatmap(heat, out)
    outputs = [out]
    if args.peak_image:
        image = peak_range_image(heat)
        base = Path(args.peak_image)
        save_range_image_csv(image, base.with_suffix(".csv"))
        save_range_image_pgm(image, base.with_suffix(".pgm"))
        outputs += [base.with_suffix(".csv"), base.with_suffix(".pgm")]
    _write_sidecar(out, sys.argv[1:], scenario, [Path(args.cube)], outputs)
    print(f"image: wrote {out} (max magnitude {heat.magnitudes.max():.4g})")
    return 0


def cmd_pointcloud(args) -> int:
    heat = load_heatmap(args.heatmap)
    cloud = cfar_extract(heat, guard=args.guard, train=args.train, pfa=args.pfa)
    out = Path(args.out)
    save_ply(cloud, out)
    _write_sidecar(out, sys.argv[1:], None, [Path(args.heatmap)], [out])
    print(f"pointcloud: wrote {out} ({len(cloud)} points)")
    return 0


def cmd_metrics(args) -> int:
    pred = load_ply(args.pred)
    truth = load_ply(args.truth)
    lines = [
        f"chamfer_m={chamfer(pred, truth, args.dims):.6f}",
        f"modified_hausdorff_m={modified_hausdorff(pred, truth, args.dims):.6f}",
    ]
    text = " ".join(lines)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n")
    return 0


def _stage(name: str, fn):
    try:
        return fn()
    except (FormatError, InvalidConfig, SceneError) as exc:
        raise type(exc)(f"{name}: {exc}") from exc
    except (EstimationError, NumericalError) as exc:
        raise type(exc)(f"{name}: {exc}") from exc


def cmd_pipeline(args) -> int:
    scenario = load_scenario(args.scenario)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    cube = _stage(
        "simulate",
        lambda: simulate(
            scenario.reflectors,
            scenario.cfg,
            trajectory=scenario.trajectory,
            pattern=scenario.pattern,
            noise_std=scenario.noise_std,
            seed=scenario.seed,
        ),
    )
    save_cube(cube, outdir / "cube.bin")

    estimate = _stage("motion", lambda: _estimate_from_cube(cube, scenario))
    (outdir / "motion.txt").write_text(format_motion_record(estimate) + "\n")

    motion = None if args.no_compensation else estimate
    heat = _stage(
        "image",
        lambda: beamform_fast(cube, scenario.grid, motion, threads=args.threads),
    )
    save_heatmap(heat, outdir / "heatmap.bin")

    cfar_opts = {"guard": 2, "train": 8, "pfa": 1e-4, **scenario.cfar}
    cloud = _stage("pointcloud", lambda: cfar_extract(heat, **cfar_opts))
    save_ply(cloud, outdir / "cloud.ply")
    truth = scenario.truth_cloud()
    save_ply(truth, outdir / "truth.ply")

    report = [
        "schema_version 1",
        f"scenario seed={scenario.seed} reflectors={len(scenario.reflectors)} "
        f"noise_std={scenario.noise_std:g}",
        f"truth v_m_s={scenario.trajectory.speed_m_s:.6f} "
        f"heading_rad={scenario.trajectory.heading_rad:.6f}",
        "motion " + format_motion_record(estimate),
        f"image algorithm=fast compensation={int(not args.no_compensation)} "
        f"grid={scenario.grid.azimuth_bins}x{scenario.grid.elevation_bins}x{scenario.grid.range_bins}",
        f"pointcloud points={len(cloud)} guard={cfar_opts['guard']} "
        f"train={cfar_opts['train']} pfa={cfar_opts['pfa']:g}",
    ]
    if len(cloud) and len(truth):
        report.append(
            "metrics "
            f"chamfer_m={chamfer(cloud, truth):.6f} "
            f"modified_hausdorff_m={modified_hausdorff(cloud, truth):.6f} "
            f"chamfer2d_m={chamfer(cloud, truth, '2d'):.6f} "
            f"modified_hausdorff2d_m={modified_hausdorff(cloud, truth, '2d'):.6f}"
        )
    else:
        report.append("metrics skipped=empty_cloud")
    text = "\n".join(report) + "\n"
    (outdir / "report.txt").write_text(text)
    _write_sidecar(
        outdir / "pipeline",
        sys.argv[1:],
        scenario,
        [Path(args.scenario)],
        [outdir / n for n in ("cube.bin", "motion.txt", "heatmap.bin", "cloud.ply", "truth.ply", "report.txt")],
    )
    print(text, end="")
    return 0


def cmd_sweep_motion_error(args) -> int:
    scenario = load_scenario(args.scenario)
    cube = simulate(
        scenario.reflectors,
        scenario.cfg,
        trajectory=scenario.trajectory,
        pattern=scenario.pattern,
        noise_std=scenario.noise_std,
        seed=scenario.seed,
    )
    truth = scenario.truth_cloud()
    if len(truth) == 0:
        raise SceneError("sweep-motion-error needs a non-empty scene")
    cfar_opts = {"guard": 2, "train": 8, "pfa": 1e-4, **scenario.cfar}
    base_v = scenario.trajectory.speed_m_s
    base_heading = scenario.trajectory.heading_rad

    rows = []
    for dv_mm in args.dv:
        for dh_deg in args.dheading:
            motion = (
                max(0.0, base_v + dv_mm / 1000.0),
                base_heading + math.radians(dh_deg),
            )
            heat = beamform_fast(cube, scenario.grid, motion, threads=args.threads)
            cloud = cfar_extract(heat, **cfar_opts)
            if len(cloud) == 0:
                cd = mh = math.nan
            else:
                cd = chamfer(cloud, truth)
                mh = modified_hausdorff(cloud, truth)
            rows.append((dv_mm, dh_deg, cd, mh))

    lines = ["dv_mm_s,dheading_deg,chamfer_m,modified_hausdorff_m"]
    lines += [f"{dv:g},{dh:g},{cd:.6f},{mh:.6f}" for dv, dh, cd, mh in rows]
    text = "\n".join(lines) + "\n"
    print(text, end="")
    if args.out:
        out = Path(args.out)
        out.write_text(text)
        _write_sidecar(out, sys.argv[1:], scenario, [Path(args.scenario)], [out])
    return 0


def cmd_resolution(args) -> int:
    cfg = RadarConfig(rotation_radius_m=args.radius, wavelength_m=args.wavelength)
    lines: list[str]
    if args.mode == "analytic":
        report = theoretical_resolutions(cfg)
        curve = analytic_curve(cfg.rotation_radius_m, cfg.wavelength_m)
        width = beamwidth_3db(curve)
        lines = [
            "quantity,value",
            f"closed_form_beamwidth_deg,{math.degrees(width):.6f}",
            f"azimuth_resolution_deg,{math.degrees(report.azimuth_rad):.6f}",
            f"elevation_resolution_deg,{math.degrees(report.elevation_rad):.6f}",
            f"range_resolution_m,{report.range_m:.6f}",
        ]
    elif args.mode == "sweep":
        lines = ["fov_deg,beamwidth_deg"]
        for fov in args.fov_deg:
            curve = beam_shape_numeric(
                cfg.rotation_radius_m, cfg.wavelength_m, fov_window_rad=math.radians(fov)
            )
            lines.append(f"{fov:g},{math.degrees(beamwidth_3db(curve)):.6f}")
    else:  # two-point
        from .scene import DEFAULT_PATTERN

        sep = min_resolved_separation(cfg)
        curve = beam_shape_numeric(
            cfg.rotation_radius_m,
            cfg.wavelength_m,
            fov_window_rad=cfg.fov_window_rad,
            pattern=DEFAULT_PATTERN,
        )
        width = beamwidth_3db(curve)
        lines = [
            "quantity,value",
            f"min_resolved_separation_deg,{math.degrees(sep):.6f}",
            f"fov_window_beamwidth_deg,{math.degrees(width):.6f}",
            f"ratio,{sep / width:.6f}",
        ]
    text = "\n".join(lines) + "\n"
    print(text, end="")
    if args.out:
        Path(args.out).write_text(text)
    return 0


# -- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinsar",
        description="Rotating-radar imaging pipeline: simulate, estimate motion, "
        "beamform, extract point clouds, evaluate.",
    )
    parser.add_argument("--version", action="version", version=f"spinsar {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a scenario into a raw cube")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("motion", help="estimate platform motion from a cube")
    p.add_argument("--cube", required=True)
    p.add_argument("--scenario", help="optional scenario for config and settings")
    p.add_argument("--out")
    p.set_defaults(func=cmd_motion)

    p = sub.add_parser("image", help="beamform a cube into a heatmap")
    p.add_argument("--cube", required=True)
    p.add_argument("--scenario", required=True, help="provides the radar config and grid")
    p.add_argument("--out", required=True)
    p.add_argument(
        "--motion",
        default="none",
        help="'none', 'estimate', 'speed,heading_deg', or '@motion-record-file'",
    )
    p.add_argument("--algorithm", choices=["fast", "direct"], default="fast")
    p.add_argument("--window", choices=["hann", "rect"], default="hann")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--peak-image", help="basename for peak-range CSV/PGM export")
    p.set_defaults(func=cmd_image)

    p = sub.add_parser("pointcloud", help="CFAR-extract a point cloud from a heatmap")
    p.add_argument("--heatmap", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--guard", type=int, default=2)
    p.add_argument("--train", type=int, default=8)
    p.add_argument("--pfa", type=_positive_float, default=1e-4)
    p.set_defaults(func=cmd_pointcloud)

    p = sub.add_parser("metrics", help="compare two PLY point clouds")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--dims", choices=["2d", "3d"], default="3d")
    p.add_argument("--out")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("pipeline", help="simulate -> motion -> image -> points -> metrics")
    p.add_argument("--scenario", required=True)
    p.add_argument("--outdir", required=True)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument(
        "--no-compensation",
        action="store_true",
        help="image with zero motion instead of the estimate",
    )
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser(
        "sweep-motion-error", help="image with perturbed motion and record metric decay"
    )
    p.add_argument("--scenario", required=True)
    p.add_argument("--dv", type=_float_list, default=[0.0, 2.0, 4.0, 8.48, 12.0, 20.0],
                   help="speed offsets in mm/s, comma separated")
    p.add_argument("--dheading", type=_float_list, default=[0.0],
                   help="heading offsets in degrees, comma separated")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep_motion_error)

    p = sub.add_parser("resolution", help="beam-shape and resolution analysis")
    p.add_argument("--mode", choices=["analytic", "sweep", "two-point"], default="sweep")
    p.add_argument("--fov-deg", type=_fov_list, default=[30.0, 60.0, 90.0, 180.0, 360.0])
    p.add_argument("--radius", type=_positive_float, default=0.08)
    p.add_argument("--wavelength", type=_positive_float, default=0.0038)
    p.add_argument("--out")
    p.set_defaults(func=cmd_resolution)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FormatError, InvalidConfig, SceneError, FileNotFoundError) as exc:
        print(f"spinsar: {exc}", file=sys.stderr)
        return 3
    except (EstimationError, NumericalError) as exc:
        print(f"spinsar: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())

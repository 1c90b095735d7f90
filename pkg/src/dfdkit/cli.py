"""Command-line interface.

Subcommands: curves (measure/error tables), synth (synthetic scene triple),
dfd (depth from an image pair), eval (manifest benchmark), measure
(per-point estimate dump).  Exit codes: 0 success, 1 usage, 2 I/O (missing
or malformed files, unwritable outputs), 3 validation (values violating a
module constraint).  All outputs land in the configured run directory along
with a config.resolved copy of the effective parameters.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import experiment
from . import io as dfdio
from .experiment import DatasetEntry, format_number
from .measures import DomainError
from .pipeline import estimate_depth_map

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_VALIDATION = 3

DEFAULT_GRID_START = 0.05
DEFAULT_GRID_STOP = 10.0
DEFAULT_GRID_STEP = 0.05


class _CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits with 2; usage is 1
        raise _CliError(EXIT_USAGE, f"{self.prog}: {message}")


def _add_common(sp: argparse.ArgumentParser) -> None:
    g = sp.add_argument_group("configuration")
    g.add_argument("--config", metavar="FILE",
                   help="key=value config file; flags override it")
    g.add_argument("--out", metavar="DIR",
                   help="run directory (default: dfd_out; env DFDKIT_OUT"
                        " overrides the default, flags override both)")
    defaults = cfgmod.RunConfig()
    for f in fields(cfgmod.RunConfig):
        if f.name == "out_dir":
            continue
        flag = "--" + f.name.replace("_", "-")
        g.add_argument(flag, metavar="V", dest=f.name,
                       help=f"(default: {getattr(defaults, f.name)!r})")


def _resolve_config(args) -> cfgmod.RunConfig:
    file_values = cfgmod.parse_config_file(args.config) if args.config else None
    overrides = {}
    for f in fields(cfgmod.RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            overrides[f.name] = str(v)
    if getattr(args, "out", None):
        overrides["out_dir"] = args.out
    return cfgmod.build_config(file_values, overrides)


def _run_dir(cfg: cfgmod.RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.resolved").write_text(cfgmod.resolved_text(cfg),
                                         encoding="utf-8")
    return out


def _cmd_curves(args) -> int:
    cfg = _resolve_config(args)
    out = _run_dir(cfg)
    start, stop, step = args.grid_start, args.grid_stop, args.grid_step
    if not (0.0 < start < stop and step > 0.0):
        raise DomainError("need 0 < grid-start < grid-stop and grid-step > 0")
    n = int(round((stop - start) / step)) + 1
    grid = np.linspace(start, stop, n)
    experiment.emit_curves(grid, cfg.sigma1, out / "curves.csv")
    return EXIT_OK


def _cmd_synth(args) -> int:
    cfg = _resolve_config(args)
    out = _run_dir(cfg)
    try:
        depths = [float(tok) for tok in args.planes.split(",") if tok.strip()]
    except ValueError:
        raise DomainError(f"bad --planes value {args.planes!r}")
    if not depths:
        raise DomainError("--planes needs at least one depth")
    if args.texture:
        texture = dfdio.load_image(args.texture)
    else:
        texture = experiment.make_edge_texture(args.height, args.width,
                                               args.period)
    grid = cfgmod.grid_from(cfg, texture.shape)
    layout = experiment.plane_layout(grid.rows, grid.cols, len(depths),
                                     args.layout)
    calib = cfgmod.calibration_from(cfg)
    original, defocused, gt = experiment.make_synthetic_scene(
        texture, depths, layout, grid, calib)
    prefix = args.prefix
    dfdio.save_pgm(out / f"{prefix}_original.pgm", original)
    dfdio.save_pgm(out / f"{prefix}_defocused.pgm", defocused)
    dfdio.save_depth_text(out / f"{prefix}_gt_depth.txt", gt.values)
    return EXIT_OK


def _estimate_pair(cfg, original_path, defocused_path):
    original = dfdio.load_image(original_path)
    defocused = dfdio.load_image(defocused_path)
    grid = cfgmod.grid_from(cfg, original.shape)
    calib = cfgmod.calibration_from(cfg)
    edge_cfg = cfgmod.edge_config_from(cfg)
    depth, ests, stats = estimate_depth_map(original, defocused, grid,
                                            calib, edge_cfg)
    return depth, ests, stats, grid, calib


def _cmd_dfd(args) -> int:
    cfg = _resolve_config(args)
    out = _run_dir(cfg)
    depth, ests, stats, grid, calib = _estimate_pair(
        cfg, args.original, args.defocused)
    prefix = Path(args.original).stem
    dfdio.save_depth_text(out / f"{prefix}_depth.txt", depth.values)
    dfdio.save_depth_pgm(out / f"{prefix}_vis.pgm", depth.values,
                         calib.d_min, calib.d_max)
    report = {
        "mask_pixels": stats.mask_pixels,
        "measured_points": stats.measured_points,
        "valid_fraction": stats.valid_fraction,
        "covered_cells": stats.covered_cells,
        "total_cells": stats.total_cells,
        "cell_fraction": stats.cell_fraction,
    }
    if args.gt:
        gt = experiment.load_depth(args.gt)
        report["mare"] = experiment.mare(depth, gt)
    experiment.write_report(out / "report.txt", report)
    return EXIT_OK


def _parse_manifest(path) -> list[DatasetEntry]:
    p = Path(path)
    if p.is_dir():
        p = p / "manifest.txt"
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise dfdio.ParseError(f"{p}: unreadable ({exc})") from exc
    entries = []
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise dfdio.ParseError(
                f"{p}:{no}: expected 'id image_path depth_path'")
        entries.append(DatasetEntry(parts[0],
                                    str(p.parent / parts[1]),
                                    str(p.parent / parts[2])))
    return entries


def _cmd_eval(args) -> int:
    cfg = _resolve_config(args)
    out = _run_dir(cfg)
    entries = _parse_manifest(args.manifest)
    if not entries:
        raise dfdio.ParseError(f"{args.manifest}: empty manifest")
    if cfg.grid_preset or (cfg.grid_cols > 0 and cfg.grid_rows > 0):
        grid = cfgmod.grid_from(cfg)
    else:
        # cols/rows unset: size the grid from the first image on record
        shape = dfdio.load_image(entries[0].image_path).shape
        grid = cfgmod.grid_from(cfg, shape)
    calib = cfgmod.calibration_from(cfg)
    edge_cfg = cfgmod.edge_config_from(cfg)

    per_id: list[tuple[str, float]] = []

    def save_artifacts(res):
        per_id.append((res.entry.id, res.mare))
        dfdio.save_depth_text(out / f"{res.entry.id}_depth.txt",
                              res.depth.values)
        dfdio.save_depth_pgm(out / f"{res.entry.id}_vis.pgm",
                             res.depth.values, calib.d_min, calib.d_max)

    report = experiment.batch_eval(entries, grid, calib, edge_cfg,
                                   on_result=save_artifacts)
    lines = {
        "images_evaluated": len(report.per_image_mare),
        "images_failed": len(report.failures),
        "mean_mare": report.mean_mare,
        "valid_fraction": report.valid_fraction,
        "covered_fraction": report.covered_fraction,
        "clamped_points": report.clamped_points,
        "negative_discriminant_points": report.negative_discriminant_points,
        "gt_clamped_cells": report.gt_clamped_cells,
        "reference_mean_mare": experiment.REFERENCE_MEAN_MARE,
        "reference_valid_pixel_fraction":
            experiment.REFERENCE_VALID_PIXEL_FRACTION,
        "reference_covered_cell_fraction":
            experiment.REFERENCE_COVERED_CELL_FRACTION,
    }
    for entry_id, m in per_id:
        lines[f"mare_{entry_id}"] = m
    for i, f in enumerate(report.failures):
        lines[f"failure_{i}"] = f
    experiment.write_report(out / "report.txt", lines)
    return EXIT_OK


def _cmd_measure(args) -> int:
    cfg = _resolve_config(args)
    out = _run_dir(cfg)
    depth, ests, stats, grid, calib = _estimate_pair(
        cfg, args.original, args.defocused)
    lines = ["x,y,normal_angle,m1,m2,sigma1_hat,sigma2_hat,"
             "sigma_obj,depth_hat,flags"]
    for e in ests:
        lines.append(",".join([
            str(e.point.x), str(e.point.y),
            format_number(e.point.normal_angle),
            format_number(e.m1), format_number(e.m2),
            format_number(e.sigma1_hat), format_number(e.sigma2_hat),
            format_number(e.sigma_obj), format_number(e.depth_hat),
            "|".join(sorted(e.flags)),
        ]))
    (out / "points.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="dfdkit",
                     description="Depth-from-defocus toolkit: blur-measure "
                                 "curves, synthetic scenes, depth recovery, "
                                 "and benchmark evaluation.")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    sp = sub.add_parser("curves", help="emit the measure/error curve table")
    sp.add_argument("--grid-start", type=float, default=DEFAULT_GRID_START,
                    help=f"first blur value (default: {DEFAULT_GRID_START})")
    sp.add_argument("--grid-stop", type=float, default=DEFAULT_GRID_STOP,
                    help=f"last blur value (default: {DEFAULT_GRID_STOP})")
    sp.add_argument("--grid-step", type=float, default=DEFAULT_GRID_STEP,
                    help=f"grid spacing (default: {DEFAULT_GRID_STEP})")
    _add_common(sp)
    sp.set_defaults(func=_cmd_curves)

    sp = sub.add_parser("synth", help="generate a synthetic scene triple")
    sp.add_argument("--planes", required=True, metavar="D1,D2,...",
                    help="comma-separated plane depths in scene units")
    sp.add_argument("--layout", choices=("vertical", "horizontal"),
                    default="horizontal",
                    help="plane banding direction; horizontal bands cross "
                         "the generated vertical stripes cleanly "
                         "(default: horizontal)")
    sp.add_argument("--texture", metavar="FILE",
                    help="texture image; omitted: generated stripes")
    sp.add_argument("--width", type=int, default=512,
                    help="generated texture width (default: 512)")
    sp.add_argument("--height", type=int, default=512,
                    help="generated texture height (default: 512)")
    sp.add_argument("--period", type=int, default=64,
                    help="generated stripe period in pixels (default: 64)")
    sp.add_argument("--prefix", default="scene",
                    help="output filename prefix (default: scene)")
    _add_common(sp)
    sp.set_defaults(func=_cmd_synth)

    sp = sub.add_parser("dfd", help="recover a depth map from an image pair")
    sp.add_argument("original", help="sharp image (PGM or PNG)")
    sp.add_argument("defocused", help="defocused partner image")
    sp.add_argument("--gt", metavar="FILE",
                    help="ground-truth depth text file; adds mare= to report")
    _add_common(sp)
    sp.set_defaults(func=_cmd_dfd)

    sp = sub.add_parser("eval", help="evaluate a dataset manifest")
    sp.add_argument("manifest",
                    help="manifest file or directory containing manifest.txt;"
                         " lines: id image_path depth_path")
    _add_common(sp)
    sp.set_defaults(func=_cmd_eval)

    sp = sub.add_parser("measure", help="dump per-point estimates as CSV")
    sp.add_argument("original", help="sharp image (PGM or PNG)")
    sp.add_argument("defocused", help="defocused partner image")
    _add_common(sp)
    sp.set_defaults(func=_cmd_measure)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _CliError as exc:
        print(str(exc), file=sys.stderr)
        return exc.code
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except _CliError as exc:
        print(str(exc), file=sys.stderr)
        return exc.code
    except dfdio.ParseError as exc:
        print(f"dfdkit: input error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"dfdkit: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DomainError as exc:
        print(f"dfdkit: invalid value: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())

"""Run configuration: defaults, key=value config files, grid presets.

Precedence, lowest to highest: built-in defaults, config file, the
DFDKIT_OUT environment variable (output directory only), command-line
flags.  Every run directory receives a `config.resolved` copy of the
final values so a run can be reproduced from its artifacts alone.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, fields
from pathlib import Path

from .edges import CannyParams
from .io import ParseError
from .measures import DomainError
from .pipeline import Calibration, EdgeConfig, SuperpixelGrid, fit_calibration

OUT_DIR_ENV = "DFDKIT_OUT"

# full-scale outdoor benchmark geometry: 2272x1704 images carry a 305x55
# raster of 41x5-pixel cells, centered
MAKE3D_IMAGE_WIDTH = 2272
MAKE3D_IMAGE_HEIGHT = 1704
MAKE3D_DEPTH_ROWS = 305
MAKE3D_DEPTH_COLS = 55
MAKE3D_CELL_WIDTH = 41
MAKE3D_CELL_HEIGHT = 5


def make3d_grid() -> SuperpixelGrid:
    region_w = MAKE3D_DEPTH_COLS * MAKE3D_CELL_WIDTH
    region_h = MAKE3D_DEPTH_ROWS * MAKE3D_CELL_HEIGHT
    return SuperpixelGrid(
        cell_width=MAKE3D_CELL_WIDTH,
        cell_height=MAKE3D_CELL_HEIGHT,
        origin_x=(MAKE3D_IMAGE_WIDTH - region_w) // 2,
        origin_y=(MAKE3D_IMAGE_HEIGHT - region_h) // 2,
        cols=MAKE3D_DEPTH_COLS,
        rows=MAKE3D_DEPTH_ROWS,
    )


@dataclass(frozen=True)
class RunConfig:
    sigma1: float = 1.0
    sigma_min: float = 0.5
    sigma_max: float = 10.0
    canny_smoothing: float = 1.0
    canny_low: float = 0.1
    canny_high: float = 0.2
    angle_tol_deg: float = 15.0
    min_contrast: float = 0.02
    d_min: float = 1.0
    d_max: float = 20.0
    grid_preset: str = ""
    cell_width: int = 32
    cell_height: int = 32
    grid_origin_x: int = 0
    grid_origin_y: int = 0
    grid_cols: int = 0
    grid_rows: int = 0
    seed: int = 0
    out_dir: str = "dfd_out"


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def parse_config_file(path) -> dict[str, str]:
    """key=value lines; blank lines and # comments ignored; later keys win."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"{path}: unreadable ({exc})") from exc
    out: dict[str, str] = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError(f"{path}:{no}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def _coerce(key: str, value: str):
    kind = _FIELD_TYPES.get(key)
    if kind is None:
        raise DomainError(f"unknown config key {key!r}")
    try:
        if kind == "float":
            v = float(value)
            if not math.isfinite(v):
                raise ValueError("non-finite")
            return v
        if kind == "int":
            return int(value)
        return value
    except ValueError:
        raise DomainError(f"config key {key!r}: bad value {value!r}")


def build_config(file_values: dict[str, str] | None = None,
                 overrides: dict[str, str] | None = None,
                 env: dict[str, str] | None = None) -> RunConfig:
    """Merge defaults, config file, environment, and flag overrides."""
    env = os.environ if env is None else env
    merged: dict[str, object] = {}
    for source in (file_values or {},):
        for k, v in source.items():
            merged[k] = _coerce(k, v)
    if env.get(OUT_DIR_ENV):
        merged["out_dir"] = env[OUT_DIR_ENV]
    for k, v in (overrides or {}).items():
        merged[k] = _coerce(k, v)
    return RunConfig(**merged)


def resolved_text(cfg: RunConfig) -> str:
    """Full-precision key=value dump in stable field order."""
    lines = []
    for f in fields(RunConfig):
        v = getattr(cfg, f.name)
        lines.append(f"{f.name}={repr(v) if isinstance(v, float) else v}")
    return "\n".join(lines) + "\n"


def calibration_from(cfg: RunConfig) -> Calibration:
    return fit_calibration(cfg.d_min, cfg.d_max, cfg.sigma_min, cfg.sigma_max)


def edge_config_from(cfg: RunConfig) -> EdgeConfig:
    return EdgeConfig(
        canny_params=CannyParams(cfg.canny_smoothing, cfg.canny_low,
                                 cfg.canny_high),
        angle_tol=math.radians(cfg.angle_tol_deg),
        min_contrast=cfg.min_contrast,
    )


def grid_from(cfg: RunConfig,
              image_shape: tuple[int, int] | None = None) -> SuperpixelGrid:
    """Grid from preset or explicit fields; 0 cols/rows fill the image."""
    if cfg.grid_preset:
        if cfg.grid_preset != "make3d":
            raise DomainError(f"unknown grid preset {cfg.grid_preset!r}")
        return make3d_grid()
    cols, rows = cfg.grid_cols, cfg.grid_rows
    if (cols <= 0 or rows <= 0) and image_shape is None:
        raise DomainError("grid cols/rows unset and no image to derive from")
    if cols <= 0:
        cols = (image_shape[1] - cfg.grid_origin_x) // cfg.cell_width
    if rows <= 0:
        rows = (image_shape[0] - cfg.grid_origin_y) // cfg.cell_height
    if cols <= 0 or rows <= 0:
        raise DomainError("image too small for even one superpixel cell")
    return SuperpixelGrid(cfg.cell_width, cfg.cell_height,
                          cfg.grid_origin_x, cfg.grid_origin_y, cols, rows)

"""Depth-from-defocus pipeline: calibration, synthesis, depth recovery.

Depth and blur are tied by the log-linear calibration sigma = c + d*log(D),
fitted so the depth bounds map onto the blur bounds.  A scene is rendered by
assigning each superpixel cell the blur of its ground-truth depth and
convolving space-variantly.  Recovery runs the measurement chain on the
sharp/defocused pair: the two per-point blurs combine through the quadrature
law sigma_obj = sqrt(sigma2^2 - sigma1^2) into the objective (defocus-only)
blur, which the inverse calibration turns into depth.  Per-superpixel depths
are the arithmetic mean of their contributing points; cells without any
measured point fall back to the far bound d_max.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import measures
from .edges import (
    DEFAULT_ANGLE_TOL,
    DEFAULT_MIN_CONTRAST,
    CannyParams,
    EdgePoint,
    MeasurementError,
    canny,
    measure_span_ratio_at,
    validate_point,
)
from .image import convolve_space_variant, validate_gray
from .measures import DomainError

CALIBRATION_TOL = 1e-9
FLAG_CLAMPED = "clamped"
FLAG_NEGATIVE_DISC = "negative_discriminant"


@dataclass(frozen=True)
class Calibration:
    """Log-linear depth-to-blur map sigma = c + d*log(D) with its bounds."""

    c: float
    d: float
    sigma_min: float
    sigma_max: float
    d_min: float
    d_max: float

    def __post_init__(self) -> None:
        vals = (self.c, self.d, self.sigma_min, self.sigma_max,
                self.d_min, self.d_max)
        if not all(math.isfinite(v) for v in vals):
            raise DomainError("calibration parameters must be finite")
        if self.d <= 0.0:
            raise DomainError("blur-per-log-depth slope d must be positive")
        if not (0.0 < self.d_min < self.d_max):
            raise DomainError("need 0 < d_min < d_max")
        if not (self.sigma_min < self.sigma_max):
            raise DomainError("need sigma_min < sigma_max")
        for depth, sigma in ((self.d_min, self.sigma_min),
                             (self.d_max, self.sigma_max)):
            if abs(self.c + self.d * math.log(depth) - sigma) > CALIBRATION_TOL:
                raise DomainError("calibration endpoints do not match bounds")


def fit_calibration(d_min: float, d_max: float,
                    sigma_min: float, sigma_max: float) -> Calibration:
    """Solve the two-point system tying the depth bounds to the blur bounds."""
    if not all(math.isfinite(v) for v in (d_min, d_max, sigma_min, sigma_max)):
        raise DomainError("calibration bounds must be finite")
    if not (0.0 < d_min < d_max):
        raise DomainError("need 0 < d_min < d_max")
    if not (sigma_min < sigma_max):
        raise DomainError("need sigma_min < sigma_max (slope would not be positive)")
    d = (sigma_max - sigma_min) / (math.log(d_max) - math.log(d_min))
    c = sigma_min - d * math.log(d_min)
    return Calibration(c, d, sigma_min, sigma_max, d_min, d_max)


class ClampedValue(NamedTuple):
    value: float
    clamped: bool


def depth_to_blur(depth: float, calib: Calibration) -> ClampedValue:
    """Blur at a depth; out-of-bounds depths are clamped and flagged."""
    if not math.isfinite(depth):
        raise DomainError("depth must be finite")
    clamped = not (calib.d_min <= depth <= calib.d_max)
    dd = min(max(depth, calib.d_min), calib.d_max)
    sigma = calib.c + calib.d * math.log(dd)
    return ClampedValue(min(max(sigma, calib.sigma_min), calib.sigma_max), clamped)


def blur_to_depth(sigma: float, calib: Calibration) -> ClampedValue:
    """Depth at a blur; out-of-bounds depths are clamped and flagged."""
    if not math.isfinite(sigma):
        raise DomainError("blur must be finite")
    depth = math.exp((sigma - calib.c) / calib.d)
    clamped = not (calib.d_min <= depth <= calib.d_max)
    return ClampedValue(min(max(depth, calib.d_min), calib.d_max), clamped)


@dataclass(frozen=True)
class SuperpixelGrid:
    """Non-overlapping rectangular cells tiling a region of the image."""

    cell_width: int
    cell_height: int
    origin_x: int = 0
    origin_y: int = 0
    cols: int = 1
    rows: int = 1

    def __post_init__(self) -> None:
        if self.cell_width <= 0 or self.cell_height <= 0:
            raise DomainError("cell dimensions must be positive")
        if self.cols <= 0 or self.rows <= 0:
            raise DomainError("grid must have at least one cell")
        if self.origin_x < 0 or self.origin_y < 0:
            raise DomainError("grid origin must be nonnegative")

    @property
    def width(self) -> int:
        return self.cols * self.cell_width

    @property
    def height(self) -> int:
        return self.rows * self.cell_height

    def fits(self, image_height: int, image_width: int) -> bool:
        return (self.origin_x + self.width <= image_width
                and self.origin_y + self.height <= image_height)

    def cell_of(self, x: int, y: int) -> tuple[int, int] | None:
        """(row, col) of the cell containing the pixel, None outside the grid."""
        cx = (x - self.origin_x) // self.cell_width
        cy = (y - self.origin_y) // self.cell_height
        if 0 <= cx < self.cols and 0 <= cy < self.rows:
            return int(cy), int(cx)
        return None

    def cell_slices(self, row: int, col: int) -> tuple[slice, slice]:
        y0 = self.origin_y + row * self.cell_height
        x0 = self.origin_x + col * self.cell_width
        return (slice(y0, y0 + self.cell_height),
                slice(x0, x0 + self.cell_width))


@dataclass(frozen=True, eq=False)
class DepthMap:
    """Depth raster in scene units, one value per superpixel cell."""

    rows: int
    cols: int
    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64).copy()
        if arr.shape != (self.rows, self.cols):
            raise DomainError("depth raster shape does not match rows x cols")
        if not np.all(np.isfinite(arr)) or not np.all(arr > 0.0):
            raise DomainError("depths must be finite and positive")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_array(cls, values: np.ndarray) -> "DepthMap":
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 2:
            raise DomainError("depth raster must be 2-D")
        return cls(arr.shape[0], arr.shape[1], arr)


def simulate_defocus(img: np.ndarray, gt: DepthMap, grid: SuperpixelGrid,
                     calib: Calibration) -> np.ndarray:
    """Defocused render: each cell blurred per its depth, background sharp.

    Pixels outside the grid get sigma_min (the nearest-plane blur), so the
    returned image is a genuine two-shot partner of the input under the
    calibration.
    """
    arr = validate_gray(img)
    h, w = arr.shape
    if (gt.rows, gt.cols) != (grid.rows, grid.cols):
        raise DomainError("ground-truth resolution does not match the grid")
    if not grid.fits(h, w):
        raise DomainError("superpixel grid does not fit in the image")
    field_ = np.full((h, w), calib.sigma_min, dtype=np.float64)
    for r in range(grid.rows):
        for c in range(grid.cols):
            sy, sx = grid.cell_slices(r, c)
            field_[sy, sx] = depth_to_blur(float(gt.values[r, c]), calib).value
    return convolve_space_variant(arr, field_)


class RelativeBlur(NamedTuple):
    value: float
    negative_discriminant: bool


def relative_blur(sigma1_hat: float, sigma2_hat: float) -> RelativeBlur:
    """Objective blur through the quadrature law sqrt(s2^2 - s1^2).

    A second-image blur below the first can only come from measurement
    noise around zero objective blur, so it degrades to 0 with a flag
    instead of aborting the point.
    """
    if not (math.isfinite(sigma1_hat) and math.isfinite(sigma2_hat)):
        raise DomainError("blur estimates must be finite")
    if sigma1_hat < 0.0 or sigma2_hat < 0.0:
        raise DomainError("blur estimates must be nonnegative")
    if sigma2_hat < sigma1_hat:
        return RelativeBlur(0.0, True)
    return RelativeBlur(math.sqrt(sigma2_hat * sigma2_hat
                                  - sigma1_hat * sigma1_hat), False)


@dataclass(frozen=True)
class BlurEstimate:
    """Per-point measured values, inverted blurs, and the recovered depth."""

    point: EdgePoint
    m1: float
    m2: float
    sigma1_hat: float
    sigma2_hat: float
    sigma_obj: float
    depth_hat: float
    flags: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if FLAG_NEGATIVE_DISC not in self.flags:
            expect = max(0.0, self.sigma2_hat ** 2 - self.sigma1_hat ** 2)
            if abs(self.sigma_obj ** 2 - expect) > 1e-9:
                raise DomainError("objective blur breaks the quadrature law")


@dataclass(frozen=True)
class EdgeConfig:
    """Knobs of the detection/validation/measurement chain."""

    canny_params: CannyParams = CannyParams()
    angle_tol: float = DEFAULT_ANGLE_TOL
    min_contrast: float = DEFAULT_MIN_CONTRAST
    measure_radius: int = 3


@dataclass(frozen=True)
class CoverageStats:
    mask_pixels: int
    measured_points: int
    valid_fraction: float
    covered_cells: int
    total_cells: int
    cell_fraction: float


def estimate_depth_map(
    original: np.ndarray,
    defocused: np.ndarray,
    grid: SuperpixelGrid,
    calib: Calibration,
    edge_cfg: EdgeConfig = EdgeConfig(),
) -> tuple[DepthMap, list[BlurEstimate], CoverageStats]:
    """Recover a superpixel depth map from a sharp/defocused image pair.

    Edge points are detected and validated on the original image only; the
    defocused image is measured at the same locations and normals (defocus
    does not move the inflection of a straight edge).  Both measures invert
    over [sigma_min, sigma_max]; their quadrature difference is the objective
    blur, mapped to depth and averaged per superpixel.  Cells that collect no
    point are set to d_max exactly.  A point counts into coverage only if
    both measurements complete.  The whole pass is deterministic: points are
    visited in raster order and cell means accumulate in that order.
    """
    img1 = validate_gray(original)
    img2 = validate_gray(defocused)
    if img1.shape != img2.shape:
        raise DomainError("image pair dimensions differ")
    if not grid.fits(*img1.shape):
        raise DomainError("superpixel grid does not fit in the image")

    span = measures.MeasureKind.span()
    interval = measures.MonotoneInterval.scan(span, calib.sigma_min,
                                              calib.sigma_max)
    mask = canny(img1, edge_cfg.canny_params)
    estimates: list[BlurEstimate] = []
    ys, xs = np.nonzero(mask)
    for x, y in zip(xs, ys):
        pt = validate_point(mask, img1, int(x), int(y),
                            radius=edge_cfg.measure_radius,
                            angle_tol=edge_cfg.angle_tol,
                            min_contrast=edge_cfg.min_contrast)
        if not pt.valid:
            continue
        try:
            m1 = measure_span_ratio_at(img1, pt, radius=edge_cfg.measure_radius)
            m2 = measure_span_ratio_at(img2, pt, radius=edge_cfg.measure_radius)
        except MeasurementError:
            continue
        inv1 = measures.invert_measure(span, m1, interval)
        inv2 = measures.invert_measure(span, m2, interval)
        rel = relative_blur(inv1.sigma, inv2.sigma)
        depth = blur_to_depth(rel.value, calib)
        flags = set()
        if inv1.out_of_range or inv2.out_of_range or depth.clamped:
            flags.add(FLAG_CLAMPED)
        if rel.negative_discriminant:
            flags.add(FLAG_NEGATIVE_DISC)
        estimates.append(BlurEstimate(pt, m1, m2, inv1.sigma, inv2.sigma,
                                      rel.value, depth.value,
                                      frozenset(flags)))

    sums = np.zeros((grid.rows, grid.cols), dtype=np.float64)
    counts = np.zeros((grid.rows, grid.cols), dtype=np.int64)
    for est in estimates:
        cell = grid.cell_of(est.point.x, est.point.y)
        if cell is None:
            continue
        sums[cell] += est.depth_hat
        counts[cell] += 1
    values = np.full((grid.rows, grid.cols), calib.d_max, dtype=np.float64)
    covered = counts > 0
    values[covered] = sums[covered] / counts[covered]
    depth_map = DepthMap(grid.rows, grid.cols, values)

    n_mask = int(mask.sum())
    n_cells = grid.rows * grid.cols
    n_covered = int(covered.sum())
    stats = CoverageStats(
        mask_pixels=n_mask,
        measured_points=len(estimates),
        valid_fraction=(len(estimates) / n_mask) if n_mask else 0.0,
        covered_cells=n_covered,
        total_cells=n_cells,
        cell_fraction=n_covered / n_cells,
    )
    return depth_map, estimates, stats

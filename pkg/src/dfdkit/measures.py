"""Closed-form blur measures for Gaussian step edges and their inversion.

A defocused straight edge follows the profile

    i(y) = i_min + (i_max - i_min)/2 * (1 + erf(y / (sqrt(2) * sigma)))

where y is the signed distance from the edge along its normal and sigma is
the Gaussian blur scale in pixel widths.  Ratios of profile differences are
invertible functions of sigma that cancel the unknown contrast:

* gradient_ratio: ratio of the peak gradient of the edge before and after an
  extra Gaussian re-blur by reblur_sigma, in the continuous model.  Equals
  sqrt((sigma^2 + reblur_sigma^2) / sigma^2) and decreases toward 1.
* discrete_gradient_ratio: the same ratio evaluated from one-pixel profile
  differences i(1) - i(0), which is what a sampled image actually provides.
  Equals erf(1/(sqrt(2) sigma)) / erf(1/sqrt(2 (sigma^2 + reblur_sigma^2))).
  Bounded, and monotone only above a config-dependent onset (about 0.42 px
  for reblur_sigma = 1), which is why inverting it with the continuous
  formula goes wrong for sharp edges; continuous_inversion_error quantifies
  that mistake.
* span_ratio: (i(2) - i(-2)) / (i(1) - i(-1)) on a single image.  Equals
  erf(sqrt(2)/sigma) / erf(1/(sqrt(2) sigma)), needs no re-blur, is strictly
  increasing on (0, inf), and maps onto the open interval (1, 2).

All functions are pure and operate on plain floats; no file I/O here.
Inversion is numeric bisection over an interval whose monotonicity is
verified on a dense grid at construction time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

SQRT2 = math.sqrt(2.0)

DEFAULT_REBLUR_SIGMA = 1.0
BISECT_TOL = 1e-6
BISECT_MAX_ITER = 200
MONOTONE_GRID_STEP = 1e-3
DEFAULT_RANGE_SLACK = 1e-9


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class NonMonotoneIntervalError(ValueError):
    """A measure is not strictly monotone over the requested interval."""


def erf(x: float) -> float:
    """Error function, normalized so erf(+-inf) = +-1."""
    return math.erf(x)


_ERF_VEC = np.vectorize(math.erf, otypes=[np.float64])


def erf_array(x: np.ndarray) -> np.ndarray:
    """Elementwise erf for numpy arrays."""
    return _ERF_VEC(x)


@dataclass(frozen=True)
class StepEdgeModel:
    """Ideal straight edge with Gaussian blur scale sigma (pixel widths)."""

    i_min: float
    i_max: float
    sigma: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.i_min) and math.isfinite(self.i_max)
                and math.isfinite(self.sigma)):
            raise DomainError("step edge parameters must be finite")
        if self.i_max <= self.i_min:
            raise DomainError("step edge requires i_max > i_min")
        if self.sigma <= 0.0:
            raise DomainError("step edge requires sigma > 0")


def step_edge_profile(y, model: StepEdgeModel):
    """Edge intensity at signed normal offset y (scalar or array)."""
    half = 0.5 * (model.i_max - model.i_min)
    arg = np.asarray(y, dtype=np.float64) / (SQRT2 * model.sigma)
    out = model.i_min + half * (1.0 + erf_array(arg))
    if np.isscalar(y) or np.ndim(y) == 0:
        return float(out)
    return out


def _check_sigma(sigma: float, name: str = "sigma") -> None:
    if not math.isfinite(sigma) or sigma <= 0.0:
        raise DomainError(f"{name} must be finite and > 0, got {sigma!r}")


def gradient_ratio(sigma: float, reblur_sigma: float) -> float:
    """Continuous peak-gradient ratio under re-blur; > 1, diverges as sigma -> 0."""
    _check_sigma(sigma)
    _check_sigma(reblur_sigma, "reblur_sigma")
    return math.sqrt((sigma * sigma + reblur_sigma * reblur_sigma) / (sigma * sigma))


def invert_gradient_ratio(value: float, reblur_sigma: float) -> float:
    """Exact inverse of gradient_ratio; rejects values <= 1."""
    _check_sigma(reblur_sigma, "reblur_sigma")
    if not math.isfinite(value) or value <= 1.0:
        raise DomainError(f"gradient ratio must be finite and > 1, got {value!r}")
    return reblur_sigma / math.sqrt(value * value - 1.0)


def discrete_gradient_ratio(sigma: float, reblur_sigma: float) -> float:
    """One-pixel-difference gradient ratio; finite and > 1 for all sigma > 0."""
    _check_sigma(sigma)
    _check_sigma(reblur_sigma, "reblur_sigma")
    num = erf(1.0 / (SQRT2 * sigma))
    den = erf(1.0 / math.sqrt(2.0 * (sigma * sigma + reblur_sigma * reblur_sigma)))
    return num / den


def span_ratio(sigma: float) -> float:
    """Wide-over-narrow central-difference ratio; strictly increasing, in (1, 2)."""
    _check_sigma(sigma)
    return erf(SQRT2 / sigma) / erf(1.0 / (SQRT2 * sigma))


def continuous_inversion_error(sigma: float, reblur_sigma: float) -> float:
    """Relative blur error from inverting the discrete ratio continuously.

    Returns math.inf when the discrete ratio does not exceed 1 (cannot happen
    on-model, but measured values can get there); callers exclude infinite
    entries from averages while still counting them.
    """
    r = discrete_gradient_ratio(sigma, reblur_sigma)
    if r <= 1.0:
        return math.inf
    recovered = reblur_sigma / math.sqrt(r * r - 1.0)
    return abs(recovered / sigma - 1.0)


class MeasureFamily(Enum):
    GRADIENT_RATIO = "gradient_ratio"
    DISCRETE_GRADIENT_RATIO = "discrete_gradient_ratio"
    SPAN_RATIO = "span_ratio"


@dataclass(frozen=True)
class MeasureKind:
    """A blur measure plus the re-blur scale it needs, if any."""

    family: MeasureFamily
    reblur_sigma: float | None = None

    def __post_init__(self) -> None:
        if self.family is MeasureFamily.SPAN_RATIO:
            if self.reblur_sigma is not None:
                raise DomainError("span ratio takes no re-blur scale")
        else:
            if self.reblur_sigma is None:
                raise DomainError(f"{self.family.value} requires reblur_sigma")
            _check_sigma(self.reblur_sigma, "reblur_sigma")

    @classmethod
    def span(cls) -> "MeasureKind":
        return cls(MeasureFamily.SPAN_RATIO)

    @classmethod
    def gradient(cls, reblur_sigma: float = DEFAULT_REBLUR_SIGMA) -> "MeasureKind":
        return cls(MeasureFamily.GRADIENT_RATIO, reblur_sigma)

    @classmethod
    def discrete_gradient(cls, reblur_sigma: float = DEFAULT_REBLUR_SIGMA) -> "MeasureKind":
        return cls(MeasureFamily.DISCRETE_GRADIENT_RATIO, reblur_sigma)

    def forward(self, sigma: float) -> float:
        if self.family is MeasureFamily.SPAN_RATIO:
            return span_ratio(sigma)
        if self.family is MeasureFamily.GRADIENT_RATIO:
            return gradient_ratio(sigma, self.reblur_sigma)
        return discrete_gradient_ratio(sigma, self.reblur_sigma)


@dataclass(frozen=True)
class MonotoneInterval:
    """A sigma interval over which a measure was verified strictly monotone."""

    sigma_lo: float
    sigma_hi: float
    value_lo: float
    value_hi: float
    increasing: bool

    @classmethod
    def scan(cls, kind: MeasureKind, sigma_lo: float, sigma_hi: float,
             grid_step: float = MONOTONE_GRID_STEP) -> "MonotoneInterval":
        """Construct after verifying strict monotonicity on a dense grid."""
        _check_sigma(sigma_lo, "sigma_lo")
        if not math.isfinite(sigma_hi) or sigma_hi <= sigma_lo:
            raise DomainError("need sigma_lo < sigma_hi, both finite")
        n = max(2, int(math.ceil((sigma_hi - sigma_lo) / grid_step)) + 1)
        grid = np.linspace(sigma_lo, sigma_hi, n)
        values = np.array([kind.forward(float(s)) for s in grid])
        diffs = np.diff(values)
        if np.all(diffs > 0.0):
            increasing = True
        elif np.all(diffs < 0.0):
            increasing = False
        else:
            raise NonMonotoneIntervalError(
                f"{kind.family.value} is not strictly monotone on "
                f"[{sigma_lo}, {sigma_hi}]")
        return cls(sigma_lo, sigma_hi, float(values[0]), float(values[-1]), increasing)

    def value_range(self) -> tuple[float, float]:
        lo, hi = sorted((self.value_lo, self.value_hi))
        return lo, hi


class InversionResult(NamedTuple):
    sigma: float
    out_of_range: bool


def invert_measure(kind: MeasureKind, value: float, interval: MonotoneInterval,
                   tol: float = BISECT_TOL,
                   slack: float = DEFAULT_RANGE_SLACK) -> InversionResult:
    """Invert a measure value over a verified monotone interval by bisection.

    Values outside the interval's value range clamp to the nearer endpoint;
    the out_of_range flag is set when they lie beyond the range by more than
    slack.  The returned sigma is within tol of the true preimage.
    """
    if not math.isfinite(value):
        raise DomainError(f"measure value must be finite, got {value!r}")
    vlo, vhi = interval.value_range()
    if value < vlo or value > vhi:
        nearer = interval.sigma_lo if (
            (value < vlo) == interval.increasing) else interval.sigma_hi
        flagged = (vlo - value) > slack or (value - vhi) > slack
        return InversionResult(nearer, flagged)
    lo, hi = interval.sigma_lo, interval.sigma_hi
    sign = 1.0 if interval.increasing else -1.0
    for _ in range(BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if sign * (kind.forward(mid) - value) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol:
            break
    return InversionResult(0.5 * (lo + hi), False)


def monotone_onset(kind: MeasureKind, grid_step: float = MONOTONE_GRID_STEP,
                   sigma_hi: float = 10.0) -> float:
    """Smallest grid sigma above which the measure is strictly monotone.

    The span ratio and the continuous gradient ratio are monotone on all of
    (0, inf), so the onset is the grid origin.  The discrete gradient ratio
    rises to a peak before its monotone decreasing branch; the onset is the
    first grid point past the last violation of the tail direction.
    """
    if kind.family is not MeasureFamily.DISCRETE_GRADIENT_RATIO:
        return grid_step
    n = max(3, int(math.ceil(sigma_hi / grid_step)))
    grid = grid_step * np.arange(1, n + 1)
    grid = grid[grid <= sigma_hi + 1e-12]
    values = np.array([kind.forward(float(s)) for s in grid])
    diffs = np.diff(values)
    tail_increasing = diffs[-1] > 0.0
    ok = diffs > 0.0 if tail_increasing else diffs < 0.0
    bad = np.nonzero(~ok)[0]
    if bad.size == 0:
        return float(grid[0])
    return float(grid[bad[-1] + 1])


def variation_range(kind: MeasureKind, sigma_lo: float, sigma_hi: float) -> float:
    """Net change of the measure between the interval endpoints."""
    _check_sigma(sigma_lo, "sigma_lo")
    _check_sigma(sigma_hi, "sigma_hi")
    return abs(kind.forward(sigma_hi) - kind.forward(sigma_lo))


def curve_table(sigmas: np.ndarray,
                reblur_sigma: float = DEFAULT_REBLUR_SIGMA) -> dict[str, np.ndarray]:
    """Evaluate all measures and the inversion error over a sigma grid.

    Returns a dict of equal-length float arrays keyed by column name; the
    inversion_error column may contain inf entries, which downstream text
    emitters serialize as the token 'inf'.
    """
    sig = np.asarray(sigmas, dtype=np.float64)
    if sig.ndim != 1 or sig.size == 0:
        raise DomainError("sigma grid must be a non-empty 1-D array")
    if not np.all(np.isfinite(sig)) or np.any(sig <= 0.0):
        raise DomainError("sigma grid values must be finite and > 0")
    cols: dict[str, np.ndarray] = {
        "sigma": sig.copy(),
        "gradient_ratio": np.empty_like(sig),
        "discrete_gradient_ratio": np.empty_like(sig),
        "span_ratio": np.empty_like(sig),
        "inversion_error": np.empty_like(sig),
    }
    for i, s in enumerate(sig):
        s = float(s)
        cols["gradient_ratio"][i] = gradient_ratio(s, reblur_sigma)
        cols["discrete_gradient_ratio"][i] = discrete_gradient_ratio(s, reblur_sigma)
        cols["span_ratio"][i] = span_ratio(s)
        cols["inversion_error"][i] = continuous_inversion_error(s, reblur_sigma)
    return cols

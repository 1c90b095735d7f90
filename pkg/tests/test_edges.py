"""Edge detection, orientation, validation, and point measurement tests."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dfdkit import measures
from dfdkit.edges import (
    CannyParams,
    DomainError,
    EdgePoint,
    MeasurementError,
    RejectReason,
    canny,
    edge_orientation,
    measure_span_ratio_at,
    validate_point,
)

SPAN = measures.MeasureKind.span()


def edge_image(theta_deg, sigma, n=64, lo=0.2, hi=0.8, center=None):
    """Soft straight edge through a pixel center unless overridden."""
    th = math.radians(theta_deg)
    c = float(n // 2) if center is None else center
    ys, xs = np.mgrid[0:n, 0:n].astype(np.float64)
    d = (xs - c) * math.cos(th) + (ys - c) * math.sin(th)
    return measures.step_edge_profile(d, measures.StepEdgeModel(lo, hi, sigma))


def sharp_step(n, x0, lo=0.2, hi=0.8):
    row = np.where(np.arange(n) >= x0, hi, lo)
    return np.tile(row, (n, 1)).astype(np.float64)


class TestCanny:
    def test_undersized_image_rejected(self):
        with pytest.raises(DomainError):
            canny(np.full((6, 9), 0.5))

    def test_constant_image_gives_empty_mask(self):
        mask = canny(np.full((20, 20), 0.5))
        assert mask.shape == (20, 20)
        assert not mask.any()

    def test_sharp_vertical_step_is_single_thin_column(self):
        mask = canny(sharp_step(24, 12))
        interior = mask[1:-1, :]
        cols = np.nonzero(interior.any(axis=0))[0]
        assert len(cols) == 1
        assert interior[:, cols[0]].all()

    def test_blurred_edge_marks_inflection_column(self):
        img = edge_image(0.0, 2.0, n=40)
        mask = canny(img)
        ys, xs = np.nonzero(mask)
        assert len(xs) > 0
        assert np.all(xs == 20)

    def test_mask_shape_matches_input(self):
        img = edge_image(30.0, 1.0, n=31)
        assert canny(img).shape == img.shape

    def test_bad_params_rejected(self):
        with pytest.raises(DomainError):
            CannyParams(low_ratio=0.3, high_ratio=0.2)
        with pytest.raises(DomainError):
            CannyParams(smoothing_sigma=-1.0)


class TestEdgePointType:
    def test_valid_with_reason_rejected(self):
        with pytest.raises(DomainError):
            EdgePoint(3, 4, 0.0, True, RejectReason.NO_EDGE)

    def test_normal_angle_range_enforced(self):
        with pytest.raises(DomainError):
            EdgePoint(3, 4, math.pi, True, None)
        EdgePoint(3, 4, -math.pi, True, None)


class TestOrientation:
    def test_vertical_step_normal_is_plus_x(self):
        img = edge_image(0.0, 1.0)
        theta = edge_orientation(img, 32, 32)
        assert abs(theta) < math.radians(1.0)

    def test_rotated_45_degrees(self):
        img = edge_image(45.0, 1.0)
        theta = edge_orientation(img, 32, 32)
        assert abs(theta - math.pi / 4) < math.radians(1.0)

    def test_blurred_horizontal_edge_normal_is_plus_y(self):
        img = edge_image(90.0, 3.0)
        theta = edge_orientation(img, 32, 32)
        assert abs(theta - math.pi / 2) < math.radians(1.0)

    def test_decreasing_edge_flips_sign(self):
        img = edge_image(180.0, 1.0)
        theta = edge_orientation(img, 32, 32)
        assert abs(abs(theta) - math.pi) < math.radians(1.0)

    def test_flat_circle_returns_none(self):
        assert edge_orientation(np.full((20, 20), 0.3), 10, 10) is None

    def test_circle_must_fit(self):
        with pytest.raises(DomainError):
            edge_orientation(edge_image(0.0, 1.0), 1, 32)

    def test_equivariance_on_fine_angle_grid(self):
        # rotating the scene rotates the estimate with it, within 1.5 deg
        for ang in range(0, 360, 20):
            img = edge_image(float(ang), 1.5)
            theta = edge_orientation(img, 32, 32)
            err = math.degrees(math.remainder(theta - math.radians(ang), math.tau))
            assert abs(err) < 1.5, f"angle {ang}: error {err:.2f} deg"

    @settings(max_examples=25, deadline=None)
    @given(st.floats(0.0, 360.0), st.floats(0.8, 6.0))
    def test_equivariance_property(self, ang, sigma):
        img = edge_image(ang, sigma)
        theta = edge_orientation(img, 32, 32)
        err = math.degrees(math.remainder(theta - math.radians(ang), math.tau))
        assert abs(err) < 1.5


class TestValidatePoint:
    def test_straight_edge_through_center_is_valid(self):
        img = edge_image(30.0, 1.5)
        mask = canny(img)
        pt = validate_point(mask, img, 32, 32)
        assert pt.valid and pt.reject_reason is None
        err = math.degrees(math.remainder(pt.normal_angle - math.radians(30.0), math.tau))
        assert abs(err) < 1.5

    def test_out_of_bounds_near_border(self):
        img = edge_image(0.0, 1.0)
        mask = canny(img)
        pt = validate_point(mask, img, 2, 32)
        assert not pt.valid
        assert pt.reject_reason is RejectReason.OUT_OF_BOUNDS

    def test_lone_speckle_is_no_edge(self):
        img = np.full((24, 24), 0.4)
        mask = np.zeros((24, 24), dtype=bool)
        mask[12, 12] = True
        pt = validate_point(mask, img, 12, 12)
        assert pt.reject_reason is RejectReason.NO_EDGE

    def test_corner_is_multi_orientation(self):
        from dfdkit.image import convolve_uniform

        n, c = 32, 16
        ys, xs = np.mgrid[0:n, 0:n]
        img = convolve_uniform(np.where((xs > c) | (ys > c), 0.8, 0.2), 1.0)
        mask = canny(img)
        pt = validate_point(mask, img, c, c)
        assert not pt.valid
        assert pt.reject_reason is RejectReason.MULTI_ORIENTATION

    def test_faint_edge_is_low_contrast(self):
        img = edge_image(0.0, 1.0, lo=0.5, hi=0.505)
        mask = canny(img)
        assert mask.any()
        pt = validate_point(mask, img, 32, 32)
        assert not pt.valid
        assert pt.reject_reason is RejectReason.LOW_CONTRAST

    def test_checkerboards_fully_rejected(self):
        # every radius-3 circle of a short-period checkerboard holds
        # crossing orientations, so no pixel may survive validation
        for period in (2, 4):
            ys, xs = np.mgrid[0:24, 0:24]
            img = (((xs // period) + (ys // period)) % 2).astype(np.float64)
            img = 0.2 + 0.6 * img
            mask = canny(img)
            for y, x in zip(*np.nonzero(mask)):
                pt = validate_point(mask, img, int(x), int(y))
                assert not pt.valid, f"period {period}: ({x},{y}) survived"

    def test_mask_shape_mismatch_rejected(self):
        img = edge_image(0.0, 1.0)
        with pytest.raises(DomainError):
            validate_point(np.zeros((8, 8), dtype=bool), img, 32, 32)


class TestMeasure:
    def test_sigma2_exact_normal_matches_closed_form(self):
        img = edge_image(0.0, 2.0, n=40)
        pt = EdgePoint(20, 20, 0.0, True, None)
        got = measure_span_ratio_at(img, pt)
        assert abs(got - measures.span_ratio(2.0)) < 1e-3

    def test_values_stay_inside_open_interval(self):
        for sigma in (0.6, 1.0, 2.0, 4.0, 8.0):
            img = edge_image(0.0, sigma, n=64)
            pt = EdgePoint(32, 32, 0.0, True, None)
            got = measure_span_ratio_at(img, pt)
            assert 1.0 < got < 2.0

    def test_invalid_point_raises_with_reason(self):
        img = edge_image(0.0, 1.0)
        bad = EdgePoint(32, 32, 0.0, False, RejectReason.MULTI_ORIENTATION)
        with pytest.raises(MeasurementError) as exc:
            measure_span_ratio_at(img, bad)
        assert exc.value.reason is RejectReason.MULTI_ORIENTATION

    def test_denominator_floor_trips_low_contrast(self):
        img = edge_image(0.0, 10.0, n=24, lo=0.5, hi=0.5004)
        pt = EdgePoint(12, 12, 0.0, True, None)
        with pytest.raises(MeasurementError) as exc:
            measure_span_ratio_at(img, pt)
        assert exc.value.reason is RejectReason.LOW_CONTRAST

    def test_support_outside_image_raises(self):
        img = edge_image(0.0, 1.0)
        pt = EdgePoint(4, 32, 0.0, True, None)
        with pytest.raises(MeasurementError) as exc:
            measure_span_ratio_at(img, pt)
        assert exc.value.reason is RejectReason.OUT_OF_BOUNDS


class TestRecovery:
    """Full chain: detect, validate, measure, invert; blur must come back."""

    def test_fifteen_degree_grid_recovers_blur_within_5pct(self):
        interval = measures.MonotoneInterval.scan(SPAN, 0.5, 10.0)
        n = 120
        for ang in range(0, 180, 15):
            for sigma in (0.6, 1.0, 2.0, 4.0, 8.0):
                img = edge_image(float(ang), sigma, n=n)
                mask = canny(img)
                ys, xs = np.nonzero(mask)
                keep = (
                    (xs >= 8) & (xs < n - 8) & (ys >= 8) & (ys < n - 8)
                )
                checked = 0
                for x, y in zip(xs[keep][::9], ys[keep][::9]):
                    pt = validate_point(mask, img, int(x), int(y))
                    if not pt.valid:
                        continue
                    value = measure_span_ratio_at(img, pt)
                    res = measures.invert_measure(SPAN, value, interval)
                    rel = abs(res.sigma - sigma) / sigma
                    assert rel <= 0.05, (
                        f"angle {ang} sigma {sigma} at ({x},{y}): "
                        f"recovered {res.sigma:.4f} ({100 * rel:.2f}%)"
                    )
                    checked += 1
                assert checked >= 3, f"angle {ang} sigma {sigma}: too few points"

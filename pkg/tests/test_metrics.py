import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import rectangle
from mvlayout import polygon as pg
from mvlayout.errors import InvalidArgument
from mvlayout.geometry import VIEW, BoundarySamples, CameraPose, HorizonDepth, d2l, longitude_grid, project_to_image
from mvlayout.metrics import (
    MetricReport,
    _class_map,
    boundary_polygon,
    corner_error,
    delta_acc,
    extract_corners,
    intersection_area,
    iou2d,
    iou3d,
    mean_report,
    pixel_error,
    rmse,
)
from mvlayout.simulator import NoiseSpec, RoomScene, corrupt, render_depth, rng_for


def star(rng, n=7, center=(0.0, 0.0)):
    while True:
        ang = np.sort(rng.uniform(0, 2 * np.pi, n))
        r = rng.uniform(0.5, 2.0, n)
        poly = np.stack([center[0] + r * np.cos(ang), center[1] + r * np.sin(ang)], axis=1)
        if pg.is_simple(poly):
            return poly


def monte_carlo_iou(a, b, n, rng):
    lo = np.minimum(a.min(0), b.min(0))
    hi = np.maximum(a.max(0), b.max(0))
    pts = rng.uniform(lo, hi, (n, 2))
    ia, ib = pg.contains(a, pts), pg.contains(b, pts)
    union = np.count_nonzero(ia | ib)
    iou = np.count_nonzero(ia & ib) / union
    return iou, math.sqrt(max(iou * (1 - iou), 1e-12) / union)


class TestIoU:
    def test_identical(self):
        assert iou2d(rectangle(1, 1), rectangle(1, 1)) == pytest.approx(1.0, abs=1e-3)

    def test_half_overlap(self):
        assert iou2d(rectangle(1, 1), rectangle(1, 1, (0.5, 0))) == pytest.approx(1 / 3, abs=1e-3)

    def test_disjoint(self):
        assert iou2d(rectangle(1, 1), rectangle(1, 1, (5, 0))) == 0.0
        assert intersection_area(rectangle(1, 1), rectangle(1, 1, (1, 0))) == 0.0

    def test_3d_cases(self):
        sq = rectangle(1, 1)
        assert iou3d(sq, 2.0, sq, 3.0) == pytest.approx(2 / 3, abs=1e-3)
        assert iou3d(sq, 2.5, sq, 2.5) == pytest.approx(1.0, abs=1e-12)
        assert iou3d(sq, 2.0, rectangle(1, 1, (0.5, 0)), 2.0) == pytest.approx(1 / 3, abs=1e-3)
        with pytest.raises(InvalidArgument):
            iou3d(sq, 0.0, sq, 1.0)

    def test_l_shape_exact(self):
        # Oracle: L-shape of three unit cells against the 2x2 square: 3 / 4.
        l_shape = np.array([[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]], dtype=float)
        assert iou2d(l_shape, rectangle(2, 2, (1, 1))) == pytest.approx(0.75, abs=1e-3)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_symmetry(self, seed):
        rng = np.random.default_rng(seed)
        a, b = star(rng), star(rng, center=rng.uniform(-1, 1, 2))
        assert iou2d(a, b) == pytest.approx(iou2d(b, a), abs=1e-3)
        assert 0.0 <= iou2d(a, b) <= 1.0

    @pytest.mark.parametrize("seed", range(3))
    def test_monte_carlo(self, seed):
        rng = np.random.default_rng(seed)
        a, b = star(rng), star(rng, center=rng.uniform(-0.8, 0.8, 2))
        est, se = monte_carlo_iou(a, b, 200_000, rng)
        assert abs(iou2d(a, b) - est) <= 3 * se

    def test_degenerate(self):
        with pytest.raises(InvalidArgument):
            iou2d(np.array([[0, 0], [1, 1], [2, 2]], dtype=float), rectangle(1, 1))


class TestDepthMetrics:
    def test_identity(self):
        d = HorizonDepth.full(np.linspace(1, 2, 10))
        assert rmse(d, d) == 0.0 and delta_acc(d, d) == 1.0

    def test_offset(self):
        d = HorizonDepth.full(np.ones(10))
        assert rmse(d, HorizonDepth.full(np.full(10, 1.1))) == pytest.approx(0.1)

    def test_ratio_threshold(self):
        d = HorizonDepth.full(np.linspace(1, 2, 10))
        assert delta_acc(d, HorizonDepth.full(1.3 * d.depths)) == 0.0

    def test_no_shared_columns(self):
        with pytest.raises(InvalidArgument):
            rmse(HorizonDepth([1.0], [False]), HorizonDepth([1.0], [True]))


def rect_samples(w=512, a=5.0, b=4.0, offset=(0.3, -0.2)):
    scene = RoomScene(rectangle(a, b), 2.8)
    pose = CameraPose(0.0, offset[0], offset[1], 1.6)
    g = longitude_grid(w)
    d = render_depth(scene, pose, g)
    return d, pose, g, d2l(d, pose, g)


class TestCorners:
    def test_rectangle(self):
        _, pose, _, s = rect_samples()
        corners = extract_corners(s)
        assert len(corners) == 4
        verts = rectangle(5.0, 4.0) - pose.t
        dist = np.min(np.hypot(*(corners[:, None, :] - verts[None]).transpose(2, 0, 1)), axis=1)
        assert np.all(dist <= 0.05)

    def test_circle_simplifies(self):
        g = longitude_grid(256)
        s = d2l(HorizonDepth.full(np.full(256, 2.0)), CameraPose(0, 0, 0, 1.0), g)
        assert len(extract_corners(s, 0.2)) < 256
        assert len(extract_corners(s, 0.0)) == 256

    def test_too_few_samples(self):
        s = BoundarySamples(np.ones((8, 2)), np.r_[np.ones(7, bool), False], VIEW)
        with pytest.raises(InvalidArgument):
            extract_corners(s)

    def test_corner_error_zero(self):
        _, _, _, s = rect_samples()
        c = extract_corners(s)
        assert corner_error(c, c, 1024, 512, 0.75, h=1.6) == 0.0

    def test_spurious_corner(self):
        _, _, _, s = rect_samples()
        c = extract_corners(s)
        extra = np.vstack([c, [[0.0, 1.0]]])
        ce = corner_error(extra, c, 1024, 512, 0.75, h=1.6)
        # The extra floor and ceiling pixels each cost one diagonal; 2 of 2 * 5 pixels.
        assert ce == pytest.approx(1 / 5, abs=1e-12)

    def test_horizontal_wrap(self):
        # Points just either side of the seam are a few pixels apart, not a whole panorama.
        a = np.array([[-1e-3, -2.0]])
        b = np.array([[1e-3, -2.0]])
        assert corner_error(a, b, 1024, 512, 1.0) < 1e-3

    def test_empty(self):
        with pytest.raises(InvalidArgument):
            corner_error(np.zeros((0, 2)), np.ones((1, 2)), 1024, 512, 1.0)


class TestPixelError:
    def test_identity(self):
        d = HorizonDepth.full(np.linspace(1, 2, 64))
        assert pixel_error(d, 0.8, d, 0.8) == 0.0

    def test_infinite_ratio(self):
        d = HorizonDepth.full(np.linspace(1, 2, 64))
        _, ceil_row = project_to_image(d, 0.8, 512)
        frac = _class_map(np.full(64, 400.0), ceil_row, 512)
        expected = np.count_nonzero(frac == 0) / frac.size
        assert pixel_error(d, float("inf"), d, 0.8) == pytest.approx(expected, abs=1e-12)

    def test_floor_shift_one_row(self):
        w = 64
        a = _class_map(np.full(w, 380.0), np.full(w, 120.0), 512)
        b = _class_map(np.full(w, 381.0), np.full(w, 120.0), 512)
        assert np.count_nonzero(a != b) / a.size == pytest.approx(1 / 512)

    def test_only_shared_columns(self):
        a = HorizonDepth([1.0, 2.0, 3.0, 4.0], [True, True, False, False])
        b = HorizonDepth([1.0, 2.0, 1.0, 1.0], [True, True, True, True])
        assert pixel_error(a, 1.0, b, 1.0) == 0.0


class TestDegradation:
    def test_noise_monotone(self):
        g = longitude_grid(256)
        sigmas = [0.0, 0.02, 0.05, 0.1]
        ious, errs = [], []
        for sn in sigmas:
            i_list, e_list = [], []
            for seed in range(20):
                d, pose, _, s = rect_samples(256, offset=(0.1 * (seed % 5) - 0.2, 0.0))
                noisy = corrupt(d, NoiseSpec(sn), rng_for(seed, 2))
                gt_poly = boundary_polygon(s)
                i_list.append(iou2d(boundary_polygon(d2l(noisy, pose, g)), gt_poly))
                e_list.append(rmse(noisy, d))
            ious.append(np.mean(i_list))
            errs.append(np.mean(e_list))
        assert all(x >= y for x, y in zip(ious, ious[1:]))
        assert all(x <= y for x, y in zip(errs, errs[1:]))


class TestReport:
    def test_row_format(self):
        r = MetricReport(1, 0.5, 0.1234567, 1, 0, 0)
        assert r.as_row() == ["1.000000", "0.500000", "0.123457", "1.000000", "0.000000", "0.000000"]

    def test_mean(self):
        m = mean_report([MetricReport(1, 1, 0, 1, 0, 0), MetricReport(0, 0, 1, 0, 1, 1)])
        assert m == MetricReport(0.5, 0.5, 0.5, 0.5, 0.5, 0.5)

    def test_boundary_polygon_ccw(self):
        _, _, _, s = rect_samples()
        assert pg.signed_area(boundary_polygon(s)) > 0

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mvlayout.errors import InvalidArgument
from mvlayout.geometry import HorizonDepth, longitude_grid
from mvlayout.objectives import (
    LossWeights,
    bce,
    ceiling3d_loss,
    finetune_loss,
    layout_loss,
    loss_parts,
    normal_gradient_loss,
    normal_loss,
    pretrain_loss,
    sigma_weight,
    weighted_depth_loss,
)


def square_depth(w, half=2.0, h=1.6):
    g = longitude_grid(w)
    t = g.angles
    return HorizonDepth.full(half / np.maximum(np.abs(np.sin(t)), np.abs(np.cos(t))) / h)


def rng_depth(seed, w=64):
    return HorizonDepth.full(np.random.default_rng(seed).uniform(1, 3, w))


class TestBce:
    def test_perfect(self):
        assert bce([0.0, 1.0, 1.0], [0, 1, 1]) == pytest.approx(-math.log(1 - 1e-7), rel=1e-6)
        assert bce([0.0, 1.0], [0, 1]) < 1e-6

    def test_half(self):
        assert bce([0.5] * 7, [0, 1, 1, 0, 1, 0, 0]) == pytest.approx(math.log(2))

    def test_single(self):
        assert bce([0.9], [1]) == pytest.approx(-math.log(0.9))
        assert bce([0.9], [1]) == pytest.approx(0.10536, abs=1e-5)

    def test_length_mismatch(self):
        with pytest.raises(InvalidArgument):
            bce([0.5], [1, 0])


class TestCombinations:
    def test_published_weights(self):
        # Values quoted in the source text: mu = 0.75, lambdas = 0.1, 0.9, 0.08.
        w = LossWeights()
        assert (w.mu, w.lambda1, w.lambda2, w.lambda3) == (0.75, 0.1, 0.9, 0.08)
        assert finetune_loss(1, 1, 1, 1) == pytest.approx(1.18, abs=1e-15)
        assert pretrain_loss(1, 0) == 0.75

    def test_zero(self):
        assert finetune_loss(0, 0, 0, 0) == 0.0
        assert pretrain_loss(0, 2.5) == 2.5

    @given(st.floats(0, 10), st.floats(0, 10))
    def test_linearity(self, a, b):
        assert pretrain_loss(a + b, 0) == pytest.approx(pretrain_loss(a, 0) + pretrain_loss(b, 0))
        for i in range(4):
            x, y = [0.0] * 4, [0.0] * 4
            x[i], y[i] = a, b
            s = [a + b if j == i else 0.0 for j in range(4)]
            assert finetune_loss(*s) == pytest.approx(finetune_loss(*x) + finetune_loss(*y))

    def test_negative_weights(self):
        with pytest.raises(InvalidArgument):
            LossWeights(mu=-1)


class TestSigmaWeight:
    def test_examples(self):
        np.testing.assert_array_equal(sigma_weight([1.0, 2.0], [1.0, 1.0]), [1.0, 2.0])
        assert sigma_weight([4.0], [2.0])[0] == 1.0
        assert sigma_weight([1.0], [0.0])[0] == pytest.approx(1e6)

    def test_errors(self):
        with pytest.raises(InvalidArgument):
            sigma_weight([1.0], [1.0, 2.0])
        with pytest.raises(InvalidArgument):
            sigma_weight([1.0], [-1.0])


class TestDepthLoss:
    def test_zero_and_offset(self):
        d = rng_depth(0)
        assert weighted_depth_loss(d, d) == 0.0
        shifted = HorizonDepth.full(d.depths + 0.3)
        assert weighted_depth_loss(d, shifted, np.ones(64)) == pytest.approx(0.3)

    def test_doubling_sigma_quarters(self):
        a, b = rng_depth(0), rng_depth(1)
        s = np.random.default_rng(2).uniform(0.1, 1, 64)
        assert weighted_depth_loss(a, b, 2 * s) == pytest.approx(weighted_depth_loss(a, b, s) / 4)

    def test_shared_columns_only(self):
        a = HorizonDepth([1.0, 2.0], [True, False])
        b = HorizonDepth([1.5, 9.0], [True, True])
        assert weighted_depth_loss(a, b) == pytest.approx(0.5)
        with pytest.raises(InvalidArgument):
            weighted_depth_loss(HorizonDepth([1.0], [False]), HorizonDepth([1.0], [True]))


class TestNormalLosses:
    def test_zero_on_identity(self):
        d = rng_depth(3)
        assert normal_loss(d, d) == pytest.approx(0.0, abs=1e-12)
        assert normal_gradient_loss(d, d) == pytest.approx(0.0, abs=1e-12)

    def test_rotation_invariance(self):
        a, b = rng_depth(4), rng_depth(5)
        for k in (1, 9, 32):
            assert normal_loss(a.roll(k), b.roll(k)) == pytest.approx(normal_loss(a, b), abs=1e-12)
            assert normal_gradient_loss(a.roll(k), b.roll(k)) == pytest.approx(normal_gradient_loss(a, b), abs=1e-12)

    def test_scaled_square(self):
        a = square_depth(128)
        b = HorizonDepth.full(2 * a.depths)
        assert normal_loss(a, b) == pytest.approx(0.0, abs=1e-12)
        assert normal_gradient_loss(a, b) == pytest.approx(0.0, abs=1e-12)
        assert weighted_depth_loss(a, b) > 0

    def test_needs_consecutive_columns(self):
        v = np.zeros(8, bool)
        v[::2] = True
        d = HorizonDepth(np.ones(8), v)
        with pytest.raises(InvalidArgument):
            normal_loss(d, d)


class TestCeilingLoss:
    def test_identity(self):
        d = rng_depth(6)
        assert ceiling3d_loss(d, 1.0, d, 1.0) == 0.0

    def test_ratio_gap(self):
        d = rng_depth(7)
        assert ceiling3d_loss(d, 1.0, d, 0.5, np.ones(64)) == pytest.approx(0.5 / 3, abs=1e-12)

    @given(st.floats(0.01, 3), st.floats(0.01, 3))
    def test_monotone_in_ratio_gap(self, a, b):
        d = rng_depth(8, 16)
        lo, hi = sorted((a, b))
        assert ceiling3d_loss(d, 1.0 + hi, d, 1.0) >= ceiling3d_loss(d, 1.0 + lo, d, 1.0)

    def test_sigma_scaling(self):
        a, b = rng_depth(9), rng_depth(10)
        s = np.full(64, 0.4)
        assert ceiling3d_loss(a, 1.2, b, 0.9, 3 * s) == pytest.approx(ceiling3d_loss(a, 1.2, b, 0.9, s) / 9)

    def test_bad_ratio(self):
        d = rng_depth(1)
        with pytest.raises(InvalidArgument):
            ceiling3d_loss(d, 0.0, d, 1.0)


class TestGradients:
    """Central differences against the analytic subgradient of the L1 terms."""

    @pytest.mark.parametrize("seed", range(5))
    def test_depth_loss(self, seed):
        rng = np.random.default_rng(seed)
        w = 32
        a, b = rng.uniform(1, 3, w), rng.uniform(1, 3, w)
        sigma = rng.uniform(0.2, 1.0, w)
        i = int(rng.integers(w))
        h = 1e-5

        def f(x):
            d = a.copy()
            d[i] = x
            return weighted_depth_loss(HorizonDepth.full(d), HorizonDepth.full(b), sigma)

        fd = (f(a[i] + h) - f(a[i] - h)) / (2 * h)
        analytic = np.sign(a[i] - b[i]) / (w * sigma[i] ** 2)
        assert fd == pytest.approx(analytic, rel=1e-4)

    @pytest.mark.parametrize("seed", range(5))
    def test_ceiling_loss(self, seed):
        rng = np.random.default_rng(seed)
        w = 32
        g = longitude_grid(w)
        a, b = rng.uniform(1, 3, w), rng.uniform(1, 3, w)
        sigma = rng.uniform(0.2, 1.0, w)
        i = int(rng.integers(w))
        h = 1e-5

        def f(x):
            d = a.copy()
            d[i] = x
            return ceiling3d_loss(HorizonDepth.full(d), 1.1, HorizonDepth.full(b), 1.1, sigma)

        fd = (f(a[i] + h) - f(a[i] - h)) / (2 * h)
        s, c = math.sin(g.angles[i]), math.cos(g.angles[i])
        diff = a[i] - b[i]
        analytic = (abs(s) + abs(c)) * np.sign(diff) / (3 * w * sigma[i] ** 2)
        assert fd == pytest.approx(analytic, rel=1e-4)


class TestAggregate:
    def test_parts_and_total(self):
        a, b = rng_depth(11), rng_depth(12)
        s = np.full(64, 0.5)
        parts = loss_parts(a, 1.0, b, 0.8, s)
        assert parts["total"] == pytest.approx(finetune_loss(parts["ln"], parts["lg"], parts["ld"], parts["lr"]))
        assert all(v >= 0 for v in parts.values())

    def test_layout_loss_zero_at_target(self):
        d = rng_depth(13)
        assert layout_loss(d, d, 1.0, 1.0) == pytest.approx(0.0, abs=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_nonnegative(self, seed):
        rng = np.random.default_rng(seed)
        a = HorizonDepth.full(rng.uniform(0.5, 4, 32))
        b = HorizonDepth.full(rng.uniform(0.5, 4, 32))
        parts = loss_parts(a, rng.uniform(0.2, 2), b, rng.uniform(0.2, 2), rng.uniform(0, 1, 32))
        assert all(np.isfinite(v) and v >= 0 for v in parts.values())

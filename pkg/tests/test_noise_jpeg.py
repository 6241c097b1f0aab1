"""Noise injectors and the baseline-JPEG round trip."""

import numpy as np
import numpy.testing as npt
import pytest

from helpers import natural_image

from promptdeg import ops
from promptdeg.estimator import estimate_blockiness
from promptdeg.image import psnr


@pytest.fixture(scope="module")
def flat():
    return np.full((512, 512, 3), 0.5)


class TestGaussianNoise:
    def test_vanishing_level(self, flat, rng):
        out = ops.add_gaussian_noise(flat, 1e-6, False, rng)
        npt.assert_allclose(out, flat, atol=1e-4)

    def test_empirical_std(self, flat, rng):
        out = ops.add_gaussian_noise(flat, 15.0, False, rng)
        measured = (out - flat).std()
        assert measured == pytest.approx(15.0 / 255.0, rel=0.05)

    def test_gray_residual_channel_identical(self, flat, rng):
        out = ops.add_gaussian_noise(flat, 25.0, True, rng)
        res = out - flat
        assert np.array_equal(res[:, :, 0], res[:, :, 1])
        assert np.array_equal(res[:, :, 0], res[:, :, 2])

    def test_color_residual_differs(self, flat, rng):
        out = ops.add_gaussian_noise(flat, 25.0, False, rng)
        res = out - flat
        assert not np.array_equal(res[:, :, 0], res[:, :, 1])

    def test_clamped(self, rng):
        img = natural_image(64, 64, 1)
        out = ops.add_gaussian_noise(img, 30.0, False, rng)
        assert out.min() >= 0.0 and out.max() <= 1.0

    def test_nonpositive_level_rejected(self, flat, rng):
        with pytest.raises(ValueError):
            ops.add_gaussian_noise(flat, 0.0, False, rng)


class TestPoissonNoise:
    def test_zero_image_stays_zero(self, rng):
        img = np.zeros((32, 32, 3))
        for level in (0.05, 1.0, 3.0):
            out = ops.add_poisson_noise(img, level, False, rng)
            assert np.array_equal(out, img)

    def test_variance_scales_with_level(self, flat, rng):
        out = ops.add_poisson_noise(flat, 3.0, False, rng)
        expected = 0.5 * 3.0 / 255.0
        assert (out - flat).var() == pytest.approx(expected, rel=0.10)

    def test_monotone_in_level(self, flat):
        v = {}
        for level in (0.05, 3.0):
            out = ops.add_poisson_noise(flat, level, False, np.random.default_rng(99))
            v[level] = (out - flat).var()
        assert v[3.0] > v[0.05]

    def test_gray_residual_channel_identical(self, rng):
        img = natural_image(64, 64, 2)
        out = ops.add_poisson_noise(img, 2.0, True, rng)
        res = out - img
        keep = (out > 0) & (out < 1)  # clamping can split channels apart
        mask = keep.all(axis=2)
        npt.assert_allclose(res[mask][:, 0], res[mask][:, 1], atol=1e-12)


class TestJpegRoundtrip:
    def test_quality_ordering_on_natural_image(self, natural_img):
        p = {q: psnr(ops.jpeg_roundtrip(natural_img, q), np.clip(natural_img, 0, 1)) for q in (95, 30)}
        assert p[95] > p[30]

    def test_flat_field_survives(self):
        img = np.full((64, 64, 3), 0.5)
        out = ops.jpeg_roundtrip(img, 30)
        assert np.abs(out - img).max() <= 2.0 / 255.0

    def test_blockiness_increases_at_low_quality(self, natural_img):
        b95 = estimate_blockiness(ops.jpeg_roundtrip(natural_img, 95))
        b30 = estimate_blockiness(ops.jpeg_roundtrip(natural_img, 30))
        assert b30 > b95

    def test_deterministic(self, natural_img):
        a = ops.jpeg_roundtrip(natural_img, 42)
        b = ops.jpeg_roundtrip(natural_img, 42)
        assert np.array_equal(a, b)

    def test_grayscale_roundtrip(self):
        img = natural_image(64, 64, 3).mean(axis=2, keepdims=True)
        out = ops.jpeg_roundtrip(img, 80)
        assert out.shape == img.shape

    def test_quality_rounding_and_bounds(self, natural_img):
        a = ops.jpeg_roundtrip(natural_img, 49.6)
        b = ops.jpeg_roundtrip(natural_img, 50)
        assert np.array_equal(a, b)
        for bad in (0.4, 0, -3, 100.6, 200):
            with pytest.raises(ValueError):
                ops.jpeg_roundtrip(natural_img, bad)

    def test_small_image_rejected(self):
        with pytest.raises(ValueError):
            ops.jpeg_roundtrip(np.zeros((7, 16, 3)), 50)

    def test_subsampling_configurable(self, natural_img):
        a = ops.jpeg_roundtrip(natural_img, 60, subsampling="4:2:0")
        b = ops.jpeg_roundtrip(natural_img, 60, subsampling="4:4:4")
        assert not np.array_equal(a, b)

"""Grayscale conversion, bilinear sampling, gradients, and pyramids —
the scalar primitives under the tracker and compositor."""

import numpy as np
import pytest

from adforge.errors import TooSmall
from adforge.imagecore import (
    MIN_PYRAMID_SIDE,
    bilinear_sample,
    build_pyramid,
    gradient,
    to_grayscale,
    validate_frame,
    validate_gray,
)


class TestToGrayscale:
    def test_white_frame(self):
        frame = np.ones((4, 6, 3))
        gray = to_grayscale(frame)
        # BT.601 weights sum to 1 within one ulp
        assert np.abs(gray - 1.0).max() <= 2**-52

    def test_pure_red(self):
        frame = np.zeros((3, 3, 3))
        frame[:, :, 0] = 1.0
        assert np.allclose(to_grayscale(frame), 0.299, atol=0)

    def test_scalar_formula_oracle(self):
        rng = np.random.default_rng(0)
        frame = rng.random((5, 7, 3))
        gray = to_grayscale(frame)
        for y in range(5):
            for x in range(7):
                r, g, b = frame[y, x]
                assert gray[y, x] == 0.299 * r + 0.587 * g + 0.114 * b

    def test_range_preserved(self):
        rng = np.random.default_rng(1)
        gray = to_grayscale(rng.random((8, 8, 3)))
        assert gray.min() >= 0.0 and gray.max() <= 1.0


class TestValidation:
    def test_frame_shape_enforced(self):
        with pytest.raises(Exception):
            validate_frame(np.zeros((4, 4)))

    def test_gray_shape_enforced(self):
        with pytest.raises(Exception):
            validate_gray(np.zeros((4, 4, 3)))


class TestBilinearSample:
    def test_exact_at_lattice(self):
        rng = np.random.default_rng(2)
        img = rng.random((6, 9))
        for y in range(6):
            for x in range(9):
                assert bilinear_sample(img, float(x), float(y)) == img[y, x]

    def test_midpoint(self):
        img = np.array([[0.0, 1.0]])
        assert bilinear_sample(img, 0.5, 0.0) == pytest.approx(0.5)

    def test_out_of_range_clamped(self):
        img = np.arange(12, dtype=np.float64).reshape(3, 4)
        assert bilinear_sample(img, -4.2, 2.0) == img[2, 0]
        assert bilinear_sample(img, 10.0, -1.0) == img[0, 3]

    def test_continuity(self):
        rng = np.random.default_rng(3)
        img = rng.random((16, 16))
        eps = 1e-6
        for _ in range(100):
            x = rng.uniform(0, 15)
            y = rng.uniform(0, 15)
            d = abs(bilinear_sample(img, x + eps, y) - bilinear_sample(img, x, y))
            assert d <= eps * 2.0  # local gradient of [0,1] data is < 2/px


class TestGradient:
    def test_linear_ramp(self):
        w, h = 9, 5
        img = np.tile(np.arange(w) / (w - 1.0), (h, 1))
        ix, iy = gradient(img)
        assert np.allclose(ix[:, 1:-1], 1.0 / (w - 1))
        assert np.allclose(iy, 0.0)

    def test_constant(self):
        ix, iy = gradient(np.full((5, 5), 0.7))
        assert np.all(ix == 0.0) and np.all(iy == 0.0)

    def test_quadratic_exact_interior(self):
        xs = np.arange(10, dtype=np.float64)
        img = np.tile(xs**2, (4, 1))
        ix, _ = gradient(img)
        assert np.allclose(ix[:, 1:-1], 2.0 * xs[1:-1])

    def test_affine_exact(self):
        ys, xs = np.mgrid[0:6, 0:7].astype(np.float64)
        img = 0.3 * xs - 0.2 * ys + 0.5
        ix, iy = gradient(img)
        assert np.allclose(ix[:, 1:-1], 0.3)
        assert np.allclose(iy[1:-1, :], -0.2)

    def test_too_small_rejected(self):
        with pytest.raises(TooSmall):
            gradient(np.zeros((2, 5)))
        with pytest.raises(TooSmall):
            gradient(np.zeros((5, 2)))


class TestBuildPyramid:
    def test_constant_preserved(self):
        pyr = build_pyramid(np.full((32, 32), 0.5), 3)
        assert len(pyr) == 3
        for level in pyr:
            assert np.allclose(level, 0.5)

    def test_dimension_halving(self):
        pyr = build_pyramid(np.zeros((48, 64)), 3)
        assert [lvl.shape for lvl in pyr] == [(48, 64), (24, 32), (12, 16)]

    def test_level_cap(self):
        pyr = build_pyramid(np.zeros((20, 20)), 6)
        assert [lvl.shape for lvl in pyr] == [(20, 20), (10, 10)]
        assert min(pyr[-1].shape) >= MIN_PYRAMID_SIDE

    def test_single_level(self):
        img = np.random.default_rng(4).random((10, 10))
        pyr = build_pyramid(img, 1)
        assert len(pyr) == 1
        assert np.array_equal(pyr[0], img)

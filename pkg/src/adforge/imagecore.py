"""Raster basics: frames, grayscale, sampling, gradients, pyramids.

Conventions used across the package:

* ``Frame``     — ``(h, w, 3)`` float64 RGB, intensities in [0, 1]
* ``GrayImage`` — ``(h, w)`` float64 luma in [0, 1]
* ``Pyramid``   — list of GrayImage, level 0 full resolution, each level
  floor-halved, no level smaller than 8x8
* pixel ``(x, y)`` stores the sample at continuous coordinate ``(x, y)``;
  the valid sampling domain is ``[0, w-1] x [0, h-1]``
"""

import numpy as np

from . import kernels
from .errors import TooSmall

MIN_PYRAMID_SIDE = 8

# BT.601 luma weights
_WR, _WG, _WB = 0.299, 0.587, 0.114


def validate_frame(frame: np.ndarray) -> np.ndarray:
    """Check Frame shape/range and return it as float64."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim != 3 or frame.shape[2] != 3 or frame.shape[0] < 1 or frame.shape[1] < 1:
        raise ValueError(f"expected (h, w, 3) frame, got shape {frame.shape}")
    if not np.isfinite(frame).all():
        raise ValueError("frame contains non-finite values")
    if frame.min() < 0.0 or frame.max() > 1.0:
        raise ValueError("frame intensities must lie in [0, 1]")
    return frame


def validate_gray(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2 or image.shape[0] < 1 or image.shape[1] < 1:
        raise ValueError(f"expected (h, w) gray image, got shape {image.shape}")
    return image


def to_grayscale(frame: np.ndarray) -> np.ndarray:
    """BT.601 luma: 0.299 R + 0.587 G + 0.114 B."""
    frame = np.asarray(frame, dtype=np.float64)
    return frame[:, :, 0] * _WR + frame[:, :, 1] * _WG + frame[:, :, 2] * _WB


def bilinear_sample(image: np.ndarray, x: float, y: float) -> float:
    """Bilinear interpolation at (x, y); out-of-range coordinates are
    clamped to [0, w-1] x [0, h-1]."""
    image = np.asarray(image, dtype=np.float64)
    return float(
        kernels.bilinear_many(
            image, np.array([x], dtype=np.float64), np.array([y], dtype=np.float64)
        )[0]
    )


def gradient(image: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Central-difference gradients (Ix, Iy) with replicate borders, so
    boundary gradients fall back to one-sided differences over a
    duplicated neighbor."""
    image = np.asarray(image, dtype=np.float64)
    h, w = image.shape
    if h < 3 or w < 3:
        raise TooSmall(f"gradient needs at least 3x3, got {w}x{h}")
    p = np.pad(image, 1, mode="edge")
    ix = (p[1:-1, 2:] - p[1:-1, :-2]) * 0.5
    iy = (p[2:, 1:-1] - p[:-2, 1:-1]) * 0.5
    return ix, iy


def _binomial_smooth(image: np.ndarray) -> np.ndarray:
    """Separable [1,4,6,4,1]/16 smoothing with replicate borders.

    Integer weights are summed before the single division by 16 so that
    constants with headroom in the mantissa pass through exactly.
    """
    p = np.pad(image, ((0, 0), (2, 2)), mode="edge")
    tmp = (p[:, :-4] + 4.0 * p[:, 1:-3] + 6.0 * p[:, 2:-2] + 4.0 * p[:, 3:-1] + p[:, 4:]) * 0.0625
    p = np.pad(tmp, ((2, 2), (0, 0)), mode="edge")
    return (p[:-4, :] + 4.0 * p[1:-3, :] + 6.0 * p[2:-2, :] + 4.0 * p[3:-1, :] + p[4:, :]) * 0.0625


def build_pyramid(image: np.ndarray, levels: int) -> list[np.ndarray]:
    """Smooth-and-halve pyramid.  The requested level count is capped so
    that no level drops below 8x8; the returned list reports the actual
    count."""
    if levels < 1:
        raise ValueError("levels must be >= 1")
    image = np.asarray(image, dtype=np.float64)
    pyramid = [image]
    while len(pyramid) < levels:
        cur = pyramid[-1]
        h, w = cur.shape
        nh, nw = h // 2, w // 2
        if nh < MIN_PYRAMID_SIDE or nw < MIN_PYRAMID_SIDE:
            break
        sm = _binomial_smooth(cur)
        pyramid.append(np.ascontiguousarray(sm[0 : 2 * nh : 2, 0 : 2 * nw : 2]))
    return pyramid

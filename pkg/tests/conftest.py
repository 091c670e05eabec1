"""Shared fixtures: random geometry helpers and a small synthetic scene
reused across pipeline, CLI, and service tests (scene generation is the
slow part, so it is session-scoped)."""

from __future__ import annotations

import numpy as np
import pytest

from adforge.geometry import Quad
from adforge.pipeline import SceneSpec, drift_motions, generate_synthetic_scene


def random_convex_quad(
    rng: np.random.Generator,
    center_box: tuple[float, float] = (100.0, 100.0),
    half_size: tuple[float, float] = (10.0, 40.0),
) -> Quad:
    """A random strictly convex quad: a rotated, sheared rectangle with
    corner jitter, resampled until convexity validation passes."""
    while True:
        cx = rng.uniform(-center_box[0], center_box[0])
        cy = rng.uniform(-center_box[1], center_box[1])
        w = rng.uniform(*half_size)
        h = rng.uniform(*half_size)
        theta = rng.uniform(0, 2 * np.pi)
        rect = np.array([[-w, -h], [w, -h], [w, h], [-w, h]], dtype=np.float64)
        rot = np.array(
            [[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]]
        )
        pts = rect @ rot.T + [cx, cy] + rng.normal(0.0, 0.08 * min(w, h), (4, 2))
        try:
            from adforge.geometry import order_corners

            return order_corners(pts)
        except Exception:
            continue


def _no_collinear_triple(pts: np.ndarray, frac: float = 0.02) -> bool:
    span = pts.max(axis=0) - pts.min(axis=0)
    scale = span[0] * span[1] + span[0] ** 2 + span[1] ** 2
    for i in range(4):
        t = np.delete(pts, i, axis=0)
        area = 0.5 * abs(
            (t[1, 0] - t[0, 0]) * (t[2, 1] - t[0, 1])
            - (t[1, 1] - t[0, 1]) * (t[2, 0] - t[0, 0])
        )
        if area < frac * scale:
            return False
    return True


def well_posed_correspondences(rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """A random non-degenerate 4-point correspondence set in [0,1000]^2.

    Sampling both quads independently routinely produces configurations
    whose unique interpolating homography is nearly singular (a defining
    point lands almost on the preimage of the line at infinity), which no
    float64 estimator can reproject accurately.  Pushing a spread-out
    source quad through a random well-conditioned homography — rejecting
    destinations that leave the square or turn nearly collinear — keeps
    every instance solvable to machine precision.
    """
    from adforge.geometry import project_points

    while True:
        src = rng.uniform(0.0, 1000.0, (4, 2))
        if not _no_collinear_triple(src):
            continue
        theta = rng.uniform(0.0, 2.0 * np.pi)
        s = rng.uniform(0.3, 2.0)
        c, sn = np.cos(theta), np.sin(theta)
        h = np.array(
            [
                [s * c, -s * sn, rng.uniform(0.0, 400.0)],
                [s * sn, s * c, rng.uniform(0.0, 400.0)],
                [rng.uniform(-2e-4, 2e-4), rng.uniform(-2e-4, 2e-4), 1.0],
            ]
        )
        try:
            dst = project_points(h, src)
        except Exception:
            continue
        if dst.min() < 0.0 or dst.max() > 1000.0 or not _no_collinear_triple(dst):
            continue
        return src, dst


@pytest.fixture(scope="session")
def small_scene():
    """20 frames of 160x120 video with a drifting billboard; ground truth
    quads and heatmaps included."""
    spec = SceneSpec(
        width=160,
        height=120,
        frame_count=20,
        seed=5,
        motions=drift_motions(20, dx=0.8, dy=0.4, px=1e-7, py=1e-7),
    )
    return spec, generate_synthetic_scene(spec)

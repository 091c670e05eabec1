"""Heatmap thresholding, connected components vs a recursive flood-fill
oracle, boundary tracing, quad localization and rasterization."""

import sys

import numpy as np
import pytest

from adforge.errors import NoRegion, RegionTooSmall
from adforge.geometry import Quad, project_points
from adforge.maskops import (
    DEFAULT_MIN_AREA_FRACTION,
    connected_components,
    largest_region,
    localize_quad,
    rasterize_quad,
    threshold,
    trace_boundary,
)

from conftest import random_convex_quad


def flood_fill_labels(mask: np.ndarray) -> np.ndarray:
    """Independent 8-connected labeling by explicit-stack flood fill."""
    h, w = mask.shape
    labels = np.zeros((h, w), dtype=np.int64)
    nxt = 0
    for sy in range(h):
        for sx in range(w):
            if not mask[sy, sx] or labels[sy, sx]:
                continue
            nxt += 1
            stack = [(sy, sx)]
            labels[sy, sx] = nxt
            while stack:
                y, x = stack.pop()
                for dy in (-1, 0, 1):
                    for dx in (-1, 0, 1):
                        ny, nx_ = y + dy, x + dx
                        if 0 <= ny < h and 0 <= nx_ < w and mask[ny, nx_] and not labels[ny, nx_]:
                            labels[ny, nx_] = nxt
                            stack.append((ny, nx_))
    return labels


def partitions_equal(a: np.ndarray, b: np.ndarray) -> bool:
    """Same grouping of pixels regardless of label numbering."""
    fg = (a > 0) | (b > 0)
    if not np.array_equal(a > 0, b > 0):
        return False
    pair = a[fg] * (b.max() + 1) + b[fg]
    # bijective iff each a-label pairs with exactly one b-label and vice versa
    uniq = np.unique(pair)
    return len(uniq) == len(np.unique(a[fg])) == len(np.unique(b[fg]))


class TestThreshold:
    def test_uniform_above(self):
        assert threshold(np.full((4, 4), 0.9), 0.5).all()

    def test_uniform_below(self):
        assert not threshold(np.full((4, 4), 0.1), 0.5).any()

    def test_exact_value_included(self):
        assert threshold(np.full((2, 2), 0.5), 0.5).all()

    def test_monotone(self):
        rng = np.random.default_rng(0)
        h = rng.random((16, 16))
        m1, m2 = threshold(h, 0.3), threshold(h, 0.7)
        assert np.all(m1[m2])  # mask(t2) subset of mask(t1)


class TestConnectedComponents:
    def test_filled_rectangle(self):
        mask = np.zeros((20, 20), dtype=bool)
        mask[5:11, 4:14] = True  # 10 wide, 6 tall
        regions = connected_components(mask)
        assert len(regions) == 1
        assert regions[0].area == 60
        assert len(regions[0].boundary) == 28  # 2*(10+6) - 4 perimeter pixels

    def test_diagonal_blobs_joined(self):
        mask = np.zeros((8, 8), dtype=bool)
        mask[2:4, 2:4] = True
        mask[4:6, 4:6] = True  # touches only at the (3,3)-(4,4) diagonal
        assert len(connected_components(mask)) == 1

    def test_empty_mask(self):
        assert connected_components(np.zeros((5, 5), dtype=bool)) == []

    def test_regions_partition_foreground(self):
        rng = np.random.default_rng(1)
        mask = rng.random((32, 32)) > 0.6
        regions = connected_components(mask)
        total = sum(r.area for r in regions)
        assert total == int(mask.sum())
        seen = set()
        for r in regions:
            pix = set(map(tuple, r.pixels))
            assert len(pix) == r.area
            assert not (pix & seen)
            seen |= pix
        assert len(seen) == total

    def test_boundary_subset_of_pixels(self):
        rng = np.random.default_rng(2)
        mask = rng.random((24, 24)) > 0.5
        for r in connected_components(mask):
            pix = set(map(tuple, r.pixels))
            assert set(map(tuple, r.boundary)) <= pix

    def test_matches_flood_fill_oracle(self):
        rng = np.random.default_rng(3)
        for density in (0.3, 0.5, 0.7):
            for _ in range(5):
                mask = rng.random((64, 64)) < density
                regions = connected_components(mask)
                labels = np.zeros(mask.shape, dtype=np.int64)
                for i, r in enumerate(regions, start=1):
                    labels[r.pixels[:, 1], r.pixels[:, 0]] = i
                assert partitions_equal(labels, flood_fill_labels(mask))


class TestTraceBoundary:
    def test_single_pixel(self):
        mask = np.zeros((5, 5), dtype=bool)
        mask[2, 3] = True
        b = trace_boundary(mask, 3, 2)
        assert b.tolist() == [[3, 2]]

    def test_domino(self):
        mask = np.zeros((4, 4), dtype=bool)
        mask[1, 1:3] = True
        b = trace_boundary(mask, 1, 1)
        assert sorted(map(tuple, b)) == [(1, 1), (2, 1)]

    def test_ring_is_closed_walk(self):
        mask = np.zeros((9, 9), dtype=bool)
        mask[2:7, 2:7] = True
        mask[3:6, 3:6] = False  # hollow square; outer boundary only
        ys, xs = np.nonzero(mask)
        b = trace_boundary(mask, int(xs[0]), int(ys[0]))
        steps = np.abs(np.diff(np.vstack([b, b[:1]]), axis=0)).max(axis=1)
        assert np.all(steps == 1)  # 8-connected closed contour


class TestLargestRegion:
    def test_picks_max_area(self):
        mask = np.zeros((30, 30), dtype=bool)
        mask[1:4, 1:5] = True  # 12
        mask[10:16, 10:20] = True  # 60
        mask[25:26, 25:28] = True  # 3
        regions = connected_components(mask)
        assert largest_region(regions).area == 60

    def test_single_region_identity(self):
        mask = np.zeros((6, 6), dtype=bool)
        mask[2:4, 2:4] = True
        regions = connected_components(mask)
        assert largest_region(regions) is regions[0]

    def test_tie_breaks_upper_left(self):
        mask = np.zeros((10, 20), dtype=bool)
        mask[6:8, 14:16] = True  # later in row-major order
        mask[1:3, 2:4] = True  # earlier
        regions = connected_components(mask)
        win = largest_region(regions)
        assert (win.pixels[:, 1].min(), win.pixels[:, 0].min()) == (1, 2)

    def test_empty_rejected(self):
        with pytest.raises(NoRegion):
            largest_region([])


class TestLocalizeQuad:
    def test_axis_aligned_rect(self):
        hm = np.full((60, 100), 0.05)
        hm[10:41, 20:81] = 0.95  # x in [20,80], y in [10,40]
        quad = localize_quad(hm, 0.5)
        expected = np.array([[20, 10], [80, 10], [80, 40], [20, 40]], dtype=float)
        assert np.abs(quad.corners - expected).max() <= 1.0

    def test_all_zero_heatmap(self):
        with pytest.raises(NoRegion):
            localize_quad(np.zeros((20, 20)), 0.5)

    def test_region_too_small(self):
        hm = np.zeros((100, 100))
        hm[50, 50] = 1.0
        with pytest.raises(RegionTooSmall):
            localize_quad(hm, 0.5)  # default min area: 0.1% of 10000 = 10 px

    def test_rotated_rect_recovered(self):
        theta = np.deg2rad(30)
        c, s = np.cos(theta), np.sin(theta)
        rot = np.array([[c, -s], [s, c]])
        base = np.array([[-30, -15], [30, -15], [30, 15], [-30, 15]], dtype=float)
        quad = Quad(base @ rot.T + [60.0, 55.0])
        hm = np.where(rasterize_quad(quad, 120, 110), 0.95, 0.05)
        found = localize_quad(hm, 0.5)
        assert np.abs(found.corners - quad.corners).max() <= 1.5

    def test_round_trip_random_rotated_rects(self):
        # localize_quad reconstructs the minimum-area rectangle around the
        # region, so rotated rectangles are the shapes it can reproduce.
        rng = np.random.default_rng(4)
        done = 0
        while done < 20:
            w = rng.uniform(6.0, 45.0)
            h = rng.uniform(6.0, 45.0)
            if w * h < 100.0:
                continue
            theta = rng.uniform(0.0, np.pi)
            c, s = np.cos(theta), np.sin(theta)
            rot = np.array([[c, -s], [s, c]])
            base = np.array([[-w, -h], [w, -h], [w, h], [-w, h]]) @ rot.T
            center = rng.uniform(50.0, 78.0, 2)
            pts = base + center
            if pts.min() < 3.0 or pts.max() > 124.0:
                continue
            from adforge.geometry import order_corners

            quad = order_corners(pts)
            hm = np.where(rasterize_quad(quad, 128, 128), 0.9, 0.1)
            found = localize_quad(hm, 0.5)
            assert np.abs(found.corners - quad.corners).max() <= 1.5
            done += 1


class TestRasterizeQuad:
    def test_full_frame(self):
        quad = Quad([[-1, -1], [30, -1], [30, 30], [-1, 30]])
        assert rasterize_quad(quad, 20, 20).all()

    def test_integer_rect_pixel_centers(self):
        quad = Quad([[10, 10], [20, 10], [20, 15], [10, 15]])
        mask = rasterize_quad(quad, 40, 30)
        # pixel (x, y) is in iff its center (x+0.5, y+0.5) is inside: 10x5
        assert int(mask.sum()) == 50
        assert mask[10:15, 10:20].all()

    def test_point_in_polygon_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            quad = random_convex_quad(rng, center_box=(10, 10), half_size=(5, 20))
            c = quad.corners + 32.0
            try:
                quad = Quad(c)
            except Exception:
                continue
            mask = rasterize_quad(quad, 64, 64)
            e = np.roll(quad.corners, -1, axis=0) - quad.corners
            ys, xs = np.mgrid[0:64, 0:64]
            cx, cy = xs + 0.5, ys + 0.5  # pixel centers carry the inclusion rule
            inside = np.ones((64, 64), dtype=bool)
            for k in range(4):
                cross = e[k, 0] * (cy - quad.corners[k, 1]) - e[k, 1] * (
                    cx - quad.corners[k, 0]
                )
                inside &= cross >= 0.0
            assert np.array_equal(mask, inside)

    def test_clipped_to_frame(self):
        quad = Quad([[-10, -10], [5, -10], [5, 5], [-10, 5]])
        mask = rasterize_quad(quad, 16, 16)
        # centers 0.5..4.5 qualify: pixels 0..4 in each axis
        assert mask[:5, :5].all()
        assert not mask[5:, :].any() and not mask[:, 5:].any()

"""Binary mask operations: thresholding, connected components, boundary
tracing, and localizing a screen region as a quadrilateral.

Masks are boolean (h, w) arrays.  Pixel (ix, iy) covers the unit square
whose center is at continuous coordinates (ix + 0.5, iy + 0.5); that
center convention is shared with rasterization so that localizing a
rasterized quad recovers the original corners.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import NoRegion, RegionTooSmall
from .geometry import Quad, convex_hull, min_area_rect

# Moore neighborhood in clockwise screen order starting west:
# W, NW, N, NE, E, SE, S, SW as (dx, dy) with y down.
_MOORE = ((-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1))
_MOORE_INDEX = {d: i for i, d in enumerate(_MOORE)}


@dataclass(frozen=True)
class Region:
    """One 8-connected component of a binary mask."""

    label: int
    area: int
    pixels: np.ndarray  # (n, 2) int64, (x, y), row-major order
    boundary: np.ndarray  # (m, 2) int64, clockwise on screen
    min_index: int  # row-major index of the first pixel, orders regions

    def centroid(self) -> np.ndarray:
        return self.pixels.mean(axis=0) + 0.5


def threshold(heatmap: np.ndarray, t: float = 0.5) -> np.ndarray:
    """Pixels with value >= t."""
    heatmap = np.asarray(heatmap, dtype=np.float64)
    if heatmap.ndim != 2:
        raise ValueError(f"heatmap must be 2-d, got shape {heatmap.shape}")
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {t}")
    return heatmap >= t


def connected_components(mask: np.ndarray) -> list[Region]:
    """8-connected components, ordered (and labeled 1..k) by the
    row-major index of each component's first pixel."""
    mask = np.asarray(mask, dtype=bool)
    labels = kernels.label_components(mask)
    k = int(labels.max())
    regions = []
    h, w = mask.shape
    flat = labels.ravel()
    order = np.argsort(flat, kind="stable")
    boundaries_start = np.searchsorted(flat[order], np.arange(1, k + 2))
    for lab in range(1, k + 1):
        idx = order[boundaries_start[lab - 1] : boundaries_start[lab]]
        idx.sort()
        ys, xs = np.divmod(idx, w)
        pixels = np.column_stack((xs, ys)).astype(np.int64)
        boundary = trace_boundary(labels == lab, int(xs[0]), int(ys[0]))
        regions.append(
            Region(
                label=lab,
                area=len(idx),
                pixels=pixels,
                boundary=boundary,
                min_index=int(idx[0]),
            )
        )
    return regions


def trace_boundary(mask: np.ndarray, sx: int, sy: int) -> np.ndarray:
    """Moore boundary trace, clockwise on screen, starting from the
    component's first row-major pixel (sx, sy).

    From each boundary pixel the 8-neighborhood is scanned clockwise
    starting just after the backtrack (the empty pixel examined
    immediately before the current one was entered); the walk stops when
    the start pixel is re-entered from its original backtrack (Jacob's
    stopping criterion).  An isolated pixel is its own boundary.
    """
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape

    def on(px: int, py: int) -> bool:
        return 0 <= px < w and 0 <= py < h and mask[py, px]

    # The first pixel in row-major order has no set neighbor at W, NW, N
    # or NE, so "entered from the west" is a valid initial backtrack.
    # The walk state (pixel, backtrack direction) evolves
    # deterministically, so the first repeated state means the full
    # cycle has been emitted; that is the termination test.  Pixels can
    # be visited more than once (one-pixel-wide necks), so the walk is
    # deduplicated afterwards keeping first-visit order.
    cx, cy = sx, sy
    b_idx = 0  # direction from current pixel to its backtrack pixel
    walk = []
    seen_states = set()
    while (cx, cy, b_idx) not in seen_states:
        seen_states.add((cx, cy, b_idx))
        walk.append((cx, cy))
        found = None
        for step in range(1, 9):
            d = (b_idx + step) % 8
            nx, ny = cx + _MOORE[d][0], cy + _MOORE[d][1]
            if on(nx, ny):
                # The neighbor examined just before (nx, ny) is empty
                # and 8-adjacent to it: consecutive Moore ring positions
                # touch.  It becomes the new backtrack.
                pd = (b_idx + step - 1) % 8
                ex, ey = cx + _MOORE[pd][0], cy + _MOORE[pd][1]
                found = (nx, ny, _MOORE_INDEX[(ex - nx, ey - ny)])
                break
        if found is None:
            break  # isolated pixel
        cx, cy, b_idx = found
    boundary = list(dict.fromkeys(walk))
    return np.array(boundary, dtype=np.int64).reshape(-1, 2)


def largest_region(regions: list[Region]) -> Region:
    """Region with the most pixels; ties resolve to the smaller
    first-pixel row-major index."""
    if not regions:
        raise NoRegion("no regions to choose from")
    return min(regions, key=lambda r: (-r.area, r.min_index))


DEFAULT_MIN_AREA_FRACTION = 0.001  # speckle rejection: 0.1% of frame pixels


def localize_quad(heatmap: np.ndarray, t: float = 0.5, min_area: float | None = None) -> Quad:
    """Threshold a heatmap and fit the minimum-area rectangle around the
    boundary of its largest connected component.

    min_area is in pixels; when omitted it defaults to 0.1% of the frame
    pixels.  Raises NoRegion when nothing survives the threshold and
    RegionTooSmall when the best component is smaller than min_area.
    Boundary pixel (ix, iy) contributes its center (ix + 0.5, iy + 0.5)
    to the rectangle fit.  A region rasterized with the pixel-center
    rule extends half a pixel beyond its outermost centers on every
    side, so the fitted rectangle is pushed out by 0.5 px along its own
    axes; a rectangle then survives a rasterize -> localize round trip
    unchanged.
    """
    heatmap = np.asarray(heatmap, dtype=np.float64)
    if min_area is None:
        min_area = DEFAULT_MIN_AREA_FRACTION * heatmap.size
    mask = threshold(heatmap, t)
    regions = connected_components(mask)
    if not regions:
        raise NoRegion(f"no pixels at or above threshold {t}")
    best = largest_region(regions)
    if best.area < min_area:
        raise RegionTooSmall(f"largest region has {best.area} pixels, need at least {min_area:g}")
    centers = best.boundary.astype(np.float64) + 0.5
    hull = convex_hull(centers)
    quad, _ = min_area_rect(hull)
    return Quad(_outset_corners(np.asarray(quad.corners), 0.5))


def _outset_corners(corners: np.ndarray, amount: float) -> np.ndarray:
    """Push each corner outward along its two adjacent edges; for a
    rectangle this moves every side out by `amount`."""
    out = corners.astype(np.float64).copy()
    for i in range(4):
        away_prev = corners[i] - corners[(i - 1) % 4]
        away_next = corners[i] - corners[(i + 1) % 4]
        for away in (away_prev, away_next):
            norm = float(np.hypot(away[0], away[1]))
            if norm > 0.0:
                out[i] += amount * away / norm
    return out


def rasterize_quad(quad: Quad, width: int, height: int) -> np.ndarray:
    """Boolean mask of pixels whose centers (ix + 0.5, iy + 0.5) lie
    inside or on the quad."""
    return kernels.rasterize_convex(quad.corners, int(width), int(height))


def mask_interior(mask: np.ndarray) -> np.ndarray:
    """Pixels of the mask whose 4 axis neighbors are all inside the mask
    and the frame."""
    mask = np.asarray(mask, dtype=bool)
    out = np.zeros_like(mask)
    out[1:-1, 1:-1] = (
        mask[1:-1, 1:-1]
        & mask[:-2, 1:-1]
        & mask[2:, 1:-1]
        & mask[1:-1, :-2]
        & mask[1:-1, 2:]
    )
    return out

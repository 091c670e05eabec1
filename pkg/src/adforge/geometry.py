"""Planar geometry: quads, convex hulls, minimum-area rectangles and
homographies.

Image coordinates are x right, y down.  The canonical corner order for a
billboard quad is TL, TR, BR, BL, which is clockwise on screen; with the
y axis pointing down that order has a uniformly positive z cross product
of consecutive edges.  Convex hulls are returned counter-clockwise in
the mathematical (y-up) sense, which renders clockwise on screen.
"""

import numpy as np

from .errors import (
    DegenerateConfiguration,
    DegenerateHull,
    NotConvex,
    PointAtInfinity,
)

_W_EPS = 1e-12  # homogeneous depth cutoff
_COLLINEAR_REL = 1e-9  # triangle area below this fraction of bbox area counts as collinear


class Quad:
    """Four ordered billboard corners (TL, TR, BR, BL)."""

    __slots__ = ("corners",)

    def __init__(self, corners):
        c = np.array(corners, dtype=np.float64)
        if c.shape != (4, 2):
            raise NotConvex(f"expected 4 corner points, got shape {c.shape}")
        if not np.isfinite(c).all():
            raise NotConvex("corner coordinates must be finite")
        _check_convex_cw(c)
        c.setflags(write=False)
        object.__setattr__(self, "corners", c)

    def __setattr__(self, name, value):
        raise AttributeError("Quad is immutable")

    def __eq__(self, other):
        return isinstance(other, Quad) and np.array_equal(self.corners, other.corners)

    def __repr__(self):
        pts = ", ".join(f"({x:g},{y:g})" for x, y in self.corners)
        return f"Quad[{pts}]"

    def as_list(self) -> list[list[float]]:
        return [[float(x), float(y)] for x, y in self.corners]

    def centroid(self) -> np.ndarray:
        return self.corners.mean(axis=0)

    def area(self) -> float:
        x, y = self.corners[:, 0], self.corners[:, 1]
        return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y)))


def _check_convex_cw(c: np.ndarray) -> None:
    """Require uniformly positive cross products (clockwise on screen)."""
    span = np.ptp(c, axis=0)
    scale = float(span[0] * span[1] + span[0] ** 2 + span[1] ** 2)
    if scale <= 0.0:
        raise NotConvex("corners are coincident")
    e = np.roll(c, -1, axis=0) - c
    cross = e[:, 0] * np.roll(e[:, 1], -1) - e[:, 1] * np.roll(e[:, 0], -1)
    if np.any(cross <= _COLLINEAR_REL * scale):
        raise NotConvex("corners are not in convex clockwise order")


def order_corners(points) -> Quad:
    """Canonicalize 4 unordered convex-position points into a Quad.

    Points are sorted by angle around their centroid (clockwise on
    screen) and the cycle is rotated so TL is the corner minimizing
    x + y (ties broken by smaller y, then x).
    """
    pts = np.array(points, dtype=np.float64)
    if pts.shape != (4, 2):
        raise NotConvex(f"expected 4 points, got shape {pts.shape}")
    centroid = pts.mean(axis=0)
    ang = np.arctan2(pts[:, 1] - centroid[1], pts[:, 0] - centroid[0])
    order = np.lexsort((pts[:, 0], pts[:, 1], ang))
    cyc = pts[order]
    key = cyc[:, 0] + cyc[:, 1]
    start = int(np.lexsort((cyc[:, 0], cyc[:, 1], key))[0])
    return Quad(np.roll(cyc, -start, axis=0))


def convex_hull(points) -> np.ndarray:
    """Monotone-chain convex hull, counter-clockwise in y-up convention,
    collinear edge points removed."""
    pts = np.unique(np.asarray(points, dtype=np.float64), axis=0)
    if pts.shape[0] < 3:
        raise DegenerateHull("need at least 3 distinct points")
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]

    def half(iterable):
        chain: list[np.ndarray] = []
        for p in iterable:
            while len(chain) >= 2:
                o, a = chain[-2], chain[-1]
                if (a[0] - o[0]) * (p[1] - o[1]) - (a[1] - o[1]) * (p[0] - o[0]) <= 0.0:
                    chain.pop()
                else:
                    break
            chain.append(p)
        return chain

    lower = half(pts)
    upper = half(pts[::-1])
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise DegenerateHull("all points are collinear")
    return np.array(hull)


def min_area_rect(points) -> tuple[Quad, float]:
    """Minimum-area rectangle circumscribing the points.

    Rotating calipers over the convex hull: one rectangle side is
    collinear with a hull edge.  Returns the rectangle as a canonical
    Quad plus that edge's angle, normalized into [0, pi/2).  Area ties
    within 1e-12 relative resolve to the smaller angle.
    """
    hull = convex_hull(points)
    edges = np.roll(hull, -1, axis=0) - hull
    best = None  # (area, norm_angle, theta, bounds)
    for ex, ey in edges:
        theta = float(np.arctan2(ey, ex))
        c, s = np.cos(theta), np.sin(theta)
        xr = hull[:, 0] * c + hull[:, 1] * s
        yr = -hull[:, 0] * s + hull[:, 1] * c
        x0, x1 = float(xr.min()), float(xr.max())
        y0, y1 = float(yr.min()), float(yr.max())
        area = (x1 - x0) * (y1 - y0)
        norm_angle = theta % (np.pi / 2.0)
        if (
            best is None
            or area < best[0] * (1.0 - 1e-12)
            or (area <= best[0] * (1.0 + 1e-12) and norm_angle < best[1])
        ):
            best = (area, norm_angle, theta, (x0, x1, y0, y1))
    area, norm_angle, theta, (x0, x1, y0, y1) = best
    c, s = np.cos(theta), np.sin(theta)
    rect_rot = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    rect = np.column_stack(
        (rect_rot[:, 0] * c - rect_rot[:, 1] * s, rect_rot[:, 0] * s + rect_rot[:, 1] * c)
    )
    return order_corners(rect), norm_angle


def _check_noncollinear(pts: np.ndarray, what: str) -> None:
    span = np.ptp(pts, axis=0)
    scale = float(span[0] * span[1] + span[0] ** 2 + span[1] ** 2)
    if scale <= 0.0:
        raise DegenerateConfiguration(f"{what} points are coincident")
    for i in range(4):
        tri = np.delete(pts, i, axis=0)
        area = 0.5 * abs(
            (tri[1, 0] - tri[0, 0]) * (tri[2, 1] - tri[0, 1])
            - (tri[1, 1] - tri[0, 1]) * (tri[2, 0] - tri[0, 0])
        )
        if area < _COLLINEAR_REL * scale:
            raise DegenerateConfiguration(f"3 of the 4 {what} points are collinear")


def _hartley_transform(pts: np.ndarray) -> np.ndarray:
    centroid = pts.mean(axis=0)
    dist = np.sqrt(((pts - centroid) ** 2).sum(axis=1)).mean()
    if dist <= 0.0:
        raise DegenerateConfiguration("points are coincident")
    s = np.sqrt(2.0) / dist
    return np.array([[s, 0.0, -s * centroid[0]], [0.0, s, -s * centroid[1]], [0.0, 0.0, 1.0]])


def _apply3(t: np.ndarray, pts: np.ndarray) -> np.ndarray:
    ph = np.column_stack((pts, np.ones(len(pts)))) @ t.T
    return ph[:, :2] / ph[:, 2:3]


def fit_homography(src, dst) -> np.ndarray:
    """Least-squares homography from n >= 4 correspondences via the
    normalized direct linear transform."""
    src = np.asarray(src, dtype=np.float64)
    dst = np.asarray(dst, dtype=np.float64)
    if src.shape != dst.shape or src.ndim != 2 or src.shape[0] < 4 or src.shape[1] != 2:
        raise ValueError("need matching (n, 2) arrays with n >= 4")
    t_src = _hartley_transform(src)
    t_dst = _hartley_transform(dst)
    sn = _apply3(t_src, src)
    dn = _apply3(t_dst, dst)
    n = len(sn)
    a = np.zeros((2 * n, 9))
    a[0::2, 3:5] = -sn
    a[0::2, 5] = -1.0
    a[0::2, 6:8] = sn * dn[:, 1:2]
    a[0::2, 8] = dn[:, 1]
    a[1::2, 0:2] = sn
    a[1::2, 2] = 1.0
    a[1::2, 6:8] = -sn * dn[:, 0:1]
    a[1::2, 8] = -dn[:, 0]
    _, _, vt = np.linalg.svd(a)
    hn = vt[-1].reshape(3, 3)
    h = np.linalg.inv(t_dst) @ hn @ t_src
    h = normalize_homography(h)
    if abs(np.linalg.det(h)) <= _W_EPS:
        raise DegenerateConfiguration("estimated homography is singular")
    return h


def _refine_exact4(h: np.ndarray, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Polish the unique 4-point homography by Gauss-Newton on the
    reprojection residuals.  The DLT solution is exact in exact
    arithmetic but loses digits on badly conditioned point sets; two
    Newton steps on the 8 free parameters (m22 pinned at 1) recover
    near machine precision."""
    if abs(h[2, 2]) <= _W_EPS:
        return h  # inhomogeneous parametrization unavailable
    h = h / h[2, 2]
    ones = np.ones(4)
    best_h, best_err = h, np.inf
    for _ in range(3):
        ph = np.column_stack((src, ones)) @ h.T
        w = ph[:, 2]
        if np.any(np.abs(w) <= _W_EPS):
            break
        proj = ph[:, :2] / w[:, None]
        r = (proj - dst).ravel()
        err = float(np.abs(r).max())
        if err < best_err:
            best_h, best_err = h, err
        if err < 1e-13:
            break
        x, y = src[:, 0], src[:, 1]
        jac = np.zeros((8, 8))
        rows_x = np.arange(0, 8, 2)
        rows_y = rows_x + 1
        jac[rows_x, 0] = x / w
        jac[rows_x, 1] = y / w
        jac[rows_x, 2] = 1.0 / w
        jac[rows_x, 6] = -x * proj[:, 0] / w
        jac[rows_x, 7] = -y * proj[:, 0] / w
        jac[rows_y, 3] = x / w
        jac[rows_y, 4] = y / w
        jac[rows_y, 5] = 1.0 / w
        jac[rows_y, 6] = -x * proj[:, 1] / w
        jac[rows_y, 7] = -y * proj[:, 1] / w
        try:
            delta = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            break
        h = h + np.append(delta, 0.0).reshape(3, 3)
    else:
        # final candidate from the last update
        ph = np.column_stack((src, ones)) @ h.T
        w = ph[:, 2]
        if not np.any(np.abs(w) <= _W_EPS):
            err = float(np.abs(ph[:, :2] / w[:, None] - dst).max())
            if err < best_err:
                best_h = h
    return best_h


def estimate_homography(src, dst) -> np.ndarray:
    """Exact-4-point homography with collinearity guards: normalized DLT
    followed by Gauss-Newton polishing of the reprojection residuals."""
    src = np.asarray(src, dtype=np.float64)
    dst = np.asarray(dst, dtype=np.float64)
    if src.shape != (4, 2) or dst.shape != (4, 2):
        raise ValueError("estimate_homography takes exactly 4 source and 4 destination points")
    _check_noncollinear(src, "source")
    _check_noncollinear(dst, "destination")
    return _refine_exact4(fit_homography(src, dst), src, dst)


def normalize_homography(h: np.ndarray) -> np.ndarray:
    h = np.asarray(h, dtype=np.float64)
    if abs(h[2, 2]) > _W_EPS:
        h = h / h[2, 2]
    return h


def invert_homography(h: np.ndarray) -> np.ndarray:
    if abs(np.linalg.det(h)) <= _W_EPS:
        raise DegenerateConfiguration("homography is not invertible")
    return normalize_homography(np.linalg.inv(h))


def project(h: np.ndarray, p) -> np.ndarray:
    """Apply a homography to one point."""
    x, y = float(p[0]), float(p[1])
    w = h[2, 0] * x + h[2, 1] * y + h[2, 2]
    if abs(w) <= _W_EPS:
        raise PointAtInfinity(f"point ({x}, {y}) maps to infinity")
    return np.array(
        [(h[0, 0] * x + h[0, 1] * y + h[0, 2]) / w, (h[1, 0] * x + h[1, 1] * y + h[1, 2]) / w]
    )


def project_points(h: np.ndarray, pts) -> np.ndarray:
    """Apply a homography to an (n, 2) point array."""
    pts = np.asarray(pts, dtype=np.float64)
    ph = np.column_stack((pts, np.ones(len(pts)))) @ np.asarray(h, dtype=np.float64).T
    w = ph[:, 2]
    if np.any(np.abs(w) <= _W_EPS):
        raise PointAtInfinity("a point maps to infinity")
    return ph[:, :2] / w[:, None]

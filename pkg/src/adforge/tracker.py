"""Feature tracking: Shi-Tomasi corner selection, pyramidal
Lucas-Kanade point tracking, and per-frame quad propagation by a
robustly refit homography.

Corner scores and the track-point texture cutoff are the minimum
eigenvalue of the structure tensor summed over the window (not the
per-pixel mean), so min_eigenvalue acts as a floor on total window
gradient energy.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .errors import DegenerateConfiguration, NoFeatures, NotConvex, TrackingLost
from .geometry import Quad, fit_homography, normalize_homography, project_points
from .imagecore import build_pyramid, gradient, to_grayscale, validate_gray
from .maskops import rasterize_quad

ALIVE = "alive"
LOST = "lost"

MIN_FIT_FEATURES = 8  # homography refit needs 8 inliers for redundancy
MAX_REFIT_ROUNDS = 5
MAX_TRACK_RESIDUAL = 0.1  # mean |prev - next| over the window after convergence


@dataclass(frozen=True)
class TrackParams:
    window: int = 7  # half-size: 7 -> 15x15 window
    pyramid_levels: int = 3
    max_iterations: int = 20
    convergence_epsilon: float = 0.01
    min_eigenvalue: float = 1e-4
    max_features: int = 100
    feature_quality: float = 0.05
    min_feature_distance: float = 8.0
    reprojection_inlier_threshold: float = 1.5

    def __post_init__(self):
        numeric = (
            self.window,
            self.pyramid_levels,
            self.max_iterations,
            self.convergence_epsilon,
            self.min_eigenvalue,
            self.max_features,
            self.feature_quality,
            self.min_feature_distance,
            self.reprojection_inlier_threshold,
        )
        if any(v <= 0 for v in numeric):
            raise ValueError("all tracking parameters must be positive")
        if self.pyramid_levels < 1:
            raise ValueError("pyramid_levels must be at least 1")
        if not 0.0 < self.feature_quality < 1.0:
            raise ValueError("feature_quality must be in (0, 1)")


@dataclass(frozen=True)
class TrackState:
    """Tracking snapshot at one frame.

    features holds current point positions (n, 2); alive marks which are
    still tracked.  cumulative_homography maps the keyframe plane to the
    current frame.  max_inlier_error is the largest reprojection error
    among the inliers of the latest refit (0 on the keyframe).
    """

    quad: Quad
    features: np.ndarray
    alive: np.ndarray
    frame_index: int
    cumulative_homography: np.ndarray
    max_inlier_error: float = 0.0

    @property
    def alive_count(self) -> int:
        return int(self.alive.sum())


def _collapse_plateaus(candidate: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One representative pixel per connected candidate component: the
    member nearest the component centroid, row-major on ties."""
    labels = kernels.label_components(candidate)
    ys, xs = np.nonzero(candidate)
    out_x: list[int] = []
    out_y: list[int] = []
    for label in np.unique(labels[ys, xs]):
        member = labels[ys, xs] == label
        mx, my = xs[member], ys[member]
        d2 = (mx - mx.mean()) ** 2 + (my - my.mean()) ** 2
        best = np.lexsort((mx + my * candidate.shape[1], d2))[0]
        out_x.append(int(mx[best]))
        out_y.append(int(my[best]))
    return np.array(out_x, dtype=np.int64), np.array(out_y, dtype=np.int64)


def good_features(gray: np.ndarray, roi: np.ndarray, params: TrackParams) -> np.ndarray:
    """Shi-Tomasi corners inside a region of interest.

    Scores are the minimum eigenvalue of the window-summed structure
    tensor.  Candidates must be 3x3 local maxima inside the roi scoring
    at least feature_quality times the roi maximum; they are then
    accepted greedily in descending score order subject to
    min_feature_distance, capped at max_features.

    Adjacent local maxima necessarily share one score (a strictly larger
    neighbour would disqualify the smaller), so each connected run of
    peaks is a flat plateau of one underlying corner event; it is
    collapsed to the plateau pixel nearest its centroid so an isolated
    bright dot yields a single feature rather than a spread of ties.
    """
    validate_gray(gray)
    roi = np.asarray(roi, dtype=bool)
    if roi.shape != gray.shape:
        raise ValueError("roi dimensions must match the image")
    if not roi.any():
        raise NoFeatures("region of interest is empty")
    ix, iy = gradient(gray)
    score = kernels.min_eig_map(ix, iy, int(params.window))
    roi_max = float(score[roi].max())
    if roi_max <= 0.0:
        raise NoFeatures("no textured pixels in the region of interest")
    cutoff = params.feature_quality * roi_max

    padded = np.pad(score, 1, mode="constant", constant_values=-np.inf)
    is_peak = np.ones_like(score, dtype=bool)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dx == 0 and dy == 0:
                continue
            h, w = score.shape
            shifted = padded[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]
            is_peak &= score >= shifted
    candidate = roi & is_peak & (score >= cutoff)
    if not candidate.any():
        raise NoFeatures("no candidate passed the quality threshold")
    xs, ys = _collapse_plateaus(candidate)
    order = np.lexsort((xs + ys * score.shape[1], -score[ys, xs]))
    accepted: list[tuple[float, float]] = []
    min_d2 = float(params.min_feature_distance) ** 2
    for i in order:
        x, y = float(xs[i]), float(ys[i])
        if all((x - ax) ** 2 + (y - ay) ** 2 >= min_d2 for ax, ay in accepted):
            accepted.append((x, y))
            if len(accepted) >= params.max_features:
                break
    if not accepted:
        raise NoFeatures("distance suppression removed every candidate")
    return np.array(accepted, dtype=np.float64)


def _pyramid_gradients(pyramid) -> list[tuple[np.ndarray, np.ndarray]]:
    return [gradient(level) for level in pyramid]


def _track_one(
    prev_pyr,
    next_pyr,
    grads,
    x0: float,
    y0: float,
    params: TrackParams,
) -> tuple[float, float, str]:
    """Coarse-to-fine LK for one point; returns (x, y, status)."""
    top = len(prev_pyr) - 1
    dx = dy = 0.0
    for level in range(top, -1, -1):
        px = x0 / (2.0**level)
        py = y0 / (2.0**level)
        gx, gy = grads[level]
        dx, dy, ok, residual = kernels.lk_level(
            prev_pyr[level],
            next_pyr[level],
            gx,
            gy,
            px,
            py,
            dx,
            dy,
            int(params.window),
            int(params.max_iterations),
            float(params.convergence_epsilon),
            float(params.min_eigenvalue),
        )
        if not ok:
            return x0 + dx * (2.0**level), y0 + dy * (2.0**level), LOST
        if level > 0:
            dx *= 2.0
            dy *= 2.0
    if residual > MAX_TRACK_RESIDUAL:
        return x0 + dx, y0 + dy, LOST
    return x0 + dx, y0 + dy, ALIVE


def track_point(prev_pyramid, next_pyramid, p0, params: TrackParams) -> tuple[np.ndarray, str]:
    """Track one point from the previous to the next pyramid.

    Returns (point, status); a lost status reports the best position
    reached before failure.
    """
    if len(prev_pyramid) != len(next_pyramid):
        raise ValueError("pyramids must have the same level count")
    grads = _pyramid_gradients(prev_pyramid)
    x, y, status = _track_one(
        prev_pyramid, next_pyramid, grads, float(p0[0]), float(p0[1]), params
    )
    return np.array([x, y]), status


def _inset_quad(quad: Quad, margin: float) -> Quad | None:
    """Shrink a convex quad by offsetting each edge inward by margin.

    Returns None when the inset collapses (margin too large for the
    quad), so callers can fall back to the full quad.
    """
    corners = quad.corners
    offset_lines = []
    for i in range(4):
        a = corners[i]
        b = corners[(i + 1) % 4]
        e = b - a
        length = float(np.hypot(e[0], e[1]))
        if length < 1e-9:
            return None
        normal = np.array([-e[1], e[0]]) / length  # interior side of a clockwise edge
        offset_lines.append((a + margin * normal, e))
    pts = []
    for i in range(4):
        p, r = offset_lines[(i - 1) % 4]
        q, s = offset_lines[i]
        denom = r[0] * s[1] - r[1] * s[0]
        if abs(denom) < 1e-12:
            return None
        t = ((q[0] - p[0]) * s[1] - (q[1] - p[1]) * s[0]) / denom
        pts.append(p + t * r)
    try:
        return Quad(np.array(pts))
    except NotConvex:
        return None


def _feature_roi(quad: Quad, width: int, height: int, params: TrackParams) -> np.ndarray:
    """Mask for feature selection: the quad inset by the tracking window
    so every feature's window samples only the tracked plane (a window
    straddling the quad edge mixes plane and background motion, which
    drags the track and biases the fit).  Falls back to the full quad
    when the inset collapses or rasterizes empty.
    """
    inset = _inset_quad(quad, float(params.window) + 1.0)
    if inset is not None:
        roi = rasterize_quad(inset, width, height)
        if roi.any():
            return roi
    return rasterize_quad(quad, width, height)


def init_state(
    gray: np.ndarray, quad: Quad, frame_index: int, params: TrackParams
) -> TrackState:
    """Start tracking at the keyframe: pick features inside the quad."""
    h, w = gray.shape
    roi = _feature_roi(quad, w, h, params)
    features = good_features(gray, roi, params)
    return TrackState(
        quad=quad,
        features=features,
        alive=np.ones(len(features), dtype=bool),
        frame_index=frame_index,
        cumulative_homography=np.eye(3),
    )


def update_quad(
    prev_frame: np.ndarray,
    next_frame: np.ndarray,
    state: TrackState,
    params: TrackParams,
) -> TrackState:
    """Advance the tracked quad by one frame.

    Tracks the alive features (re-detecting inside the current quad when
    fewer than 8 remain), fits the inter-frame homography by
    least-squares with iterative outlier rejection, and applies it to
    the quad corners.  Raises TrackingLost when fewer than 8 inliers
    survive or the propagated quad stops being convex.
    """
    gray_prev = to_grayscale(prev_frame)
    gray_next = to_grayscale(next_frame)

    features = state.features[state.alive]
    if len(features) < MIN_FIT_FEATURES:
        h, w = gray_prev.shape
        roi = _feature_roi(state.quad, w, h, params)
        try:
            features = good_features(gray_prev, roi, params)
        except NoFeatures as exc:
            raise TrackingLost(f"re-detection found no features: {exc}") from exc
        if len(features) < MIN_FIT_FEATURES:
            raise TrackingLost(
                f"re-detection found only {len(features)} features, need {MIN_FIT_FEATURES}"
            )

    prev_pyr = build_pyramid(gray_prev, params.pyramid_levels)
    next_pyr = build_pyramid(gray_next, params.pyramid_levels)
    grads = _pyramid_gradients(prev_pyr)

    tracked = np.zeros_like(features)
    ok = np.zeros(len(features), dtype=bool)
    for i, (x0, y0) in enumerate(features):
        x, y, status = _track_one(prev_pyr, next_pyr, grads, x0, y0, params)
        tracked[i] = (x, y)
        ok[i] = status == ALIVE
    if int(ok.sum()) < MIN_FIT_FEATURES:
        raise TrackingLost(f"only {int(ok.sum())} features tracked, need {MIN_FIT_FEATURES}")

    # The fitted homography is applied to quad corners, which live in
    # center-anchored coordinates (lattice point (ix, iy) sits at
    # (ix + 0.5, iy + 0.5)), so fit on center coordinates too.
    pf = features + 0.5
    pt = tracked + 0.5
    active = ok.copy()
    try:
        h_step = fit_homography(pf[active], pt[active])
        for _ in range(MAX_REFIT_ROUNDS):
            err = np.linalg.norm(project_points(h_step, pf[active]) - pt[active], axis=1)
            if float(err.max()) <= params.reprojection_inlier_threshold:
                break
            keep = err <= params.reprojection_inlier_threshold
            active[np.flatnonzero(active)[~keep]] = False
            if int(active.sum()) < MIN_FIT_FEATURES:
                raise TrackingLost(
                    f"only {int(active.sum())} inliers after outlier rejection, "
                    f"need {MIN_FIT_FEATURES}"
                )
            h_step = fit_homography(pf[active], pt[active])
    except DegenerateConfiguration as exc:
        raise TrackingLost(f"homography fit degenerated: {exc}") from exc

    err = np.linalg.norm(project_points(h_step, pf[active]) - pt[active], axis=1)
    final_alive = active.copy()
    final_alive[np.flatnonzero(active)[err > params.reprojection_inlier_threshold]] = False
    if int(final_alive.sum()) < MIN_FIT_FEATURES:
        raise TrackingLost(
            f"only {int(final_alive.sum())} inliers under the final fit, need {MIN_FIT_FEATURES}"
        )
    max_inlier_error = float(
        np.linalg.norm(project_points(h_step, pf[final_alive]) - pt[final_alive], axis=1).max()
    )

    try:
        new_quad = Quad(project_points(h_step, state.quad.corners))
    except NotConvex as exc:
        raise TrackingLost(f"propagated quad is degenerate: {exc}") from exc

    return replace(
        state,
        quad=new_quad,
        features=tracked,
        alive=final_alive,
        frame_index=state.frame_index + 1,
        cumulative_homography=normalize_homography(h_step @ state.cumulative_homography),
        max_inlier_error=max_inlier_error,
    )

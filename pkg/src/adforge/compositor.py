"""Advert warping and gradient-domain compositing.

warp_advert rasterizes the destination quad into the mask omega and
fills the warped frame on omega plus its one-pixel ring.  poisson_blend
solves, inside whatever region the caller passes (the renderer passes
the quad interior, inset so every value it reads is a real advert
sample), the discrete Poisson equation with the 5-point Laplacian:
4 f_p - sum_{q in N_p ∩ omega} f_q equals the Dirichlet boundary
contribution (target values on the 4-neighbor ring outside omega) plus
the guidance divergence sum_{q in N_p} (source_p - source_q).  The
system is symmetric positive definite and is solved matrix-free by
conjugate gradient, warm-started at the source values (which makes an
identity clone converge in zero iterations).
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import EmptyOmega, OmegaTouchesBorder
from .geometry import Quad, invert_homography, project_points
from .imagecore import validate_frame
from .maskops import rasterize_quad

BLEND_MODES = ("poisson", "direct")


@dataclass(frozen=True)
class Advert:
    """A replacement creative plus its own rectangle corners (the source
    quad every placement homography maps from).

    Image coordinates put pixel (ix, iy)'s center at (ix + 0.5,
    iy + 0.5), so a w x h advert spans the rectangle (0,0)-(w,h)."""

    image: np.ndarray

    def __post_init__(self):
        validate_frame(self.image)
        h, w = self.image.shape[:2]
        if h < 2 or w < 2:
            raise ValueError(f"advert must be at least 2x2, got {w}x{h}")

    @property
    def source_quad(self) -> Quad:
        h, w = self.image.shape[:2]
        return Quad([[0.0, 0.0], [float(w), 0.0], [float(w), float(h)], [0.0, float(h)]])


@dataclass(frozen=True)
class BlendConfig:
    mode: str = "poisson"
    solver_tolerance: float = 1e-6
    max_iterations: int = 10000

    def __post_init__(self):
        if self.mode not in BLEND_MODES:
            raise ValueError(f"mode must be one of {BLEND_MODES}, got {self.mode!r}")
        if self.solver_tolerance <= 0:
            raise ValueError("solver_tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


@dataclass(frozen=True)
class BlendResult:
    """Blend output plus solver diagnostics.

    residual is the final relative residual (max across channels);
    converged means every channel reached solver_tolerance;
    no_convergence flags a channel stopping at the iteration cap with
    residual above 10x tolerance (the frame is still usable).
    """

    frame: np.ndarray
    residual: float
    iterations: int
    converged: bool
    no_convergence: bool


def warp_advert(
    ad: Advert, h: np.ndarray, width: int, height: int
) -> tuple[np.ndarray, np.ndarray]:
    """Warp the advert onto the frame through homography h.

    h maps the advert's own rectangle onto the destination quad.  Omega
    is the rasterized destination quad clipped to the frame; the warped
    frame is filled on omega plus its 4-neighbor ring (the blend needs
    source values on the boundary) by sampling the advert at
    project(h^-1, pixel center) with bilinear interpolation, values
    anchored at pixel centers (advert lattice point (ix, iy) sits at
    coordinate (ix + 0.5, iy + 0.5)).
    """
    dest = Quad(project_points(h, ad.source_quad.corners))
    omega = rasterize_quad(dest, width, height)
    if not omega.any():
        raise EmptyOmega("destination quad covers no pixel of the frame")
    fill = _dilate4(omega)
    ys, xs = np.nonzero(fill)
    hinv = invert_homography(h)
    centers = np.column_stack((xs, ys)).astype(np.float64) + 0.5
    src = project_points(hinv, centers)
    warped = np.zeros((height, width, 3))
    for c in range(3):
        warped[ys, xs, c] = kernels.bilinear_many(
            np.ascontiguousarray(ad.image[:, :, c]), src[:, 0] - 0.5, src[:, 1] - 0.5
        )
    return warped, omega


def _dilate4(mask: np.ndarray) -> np.ndarray:
    out = mask.copy()
    out[1:, :] |= mask[:-1, :]
    out[:-1, :] |= mask[1:, :]
    out[:, 1:] |= mask[:, :-1]
    out[:, :-1] |= mask[:, 1:]
    return out


def _omega_system(omega: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Index bookkeeping for the omega pixels.

    Returns (idx, nbr, boundary_flat): idx is the row-major flat index
    of each omega pixel; nbr is (n, 4) with the omega ordinal of the
    N, S, W, E neighbor or -1 when that neighbor is outside omega;
    boundary_flat is the (n, 4) flat index of each neighbor pixel.
    """
    h, w = omega.shape
    idx = np.flatnonzero(omega)
    if idx.size == 0:
        raise EmptyOmega("omega has no pixels")
    ys, xs = np.divmod(idx, w)
    if xs.min() == 0 or ys.min() == 0 or xs.max() == w - 1 or ys.max() == h - 1:
        raise OmegaTouchesBorder("an omega pixel lies on the frame border")
    lut = np.full(h * w, -1, dtype=np.int64)
    lut[idx] = np.arange(idx.size)
    neighbor_flat = np.column_stack((idx - w, idx + w, idx - 1, idx + 1))
    nbr = lut[neighbor_flat]
    return idx, nbr, neighbor_flat


def poisson_blend(
    target: np.ndarray, source: np.ndarray, omega: np.ndarray, cfg: BlendConfig = BlendConfig()
) -> BlendResult:
    """Gradient-domain clone of source into target over omega.

    Per channel, conjugate gradient solves the SPD Poisson system to a
    relative residual of cfg.solver_tolerance; pixels outside omega are
    copied from target untouched.
    """
    validate_frame(target)
    validate_frame(source)
    if target.shape != source.shape or omega.shape != target.shape[:2]:
        raise ValueError("target, source and omega dimensions must agree")
    idx, nbr, neighbor_flat = _omega_system(np.asarray(omega, dtype=bool))
    h, w = omega.shape
    ys, xs = np.divmod(idx, w)
    out = target.copy()
    worst_residual = 0.0
    worst_iterations = 0
    all_converged = True
    any_failed = False
    for c in range(3):
        s = np.ascontiguousarray(source[:, :, c]).ravel()
        t = np.ascontiguousarray(target[:, :, c]).ravel()
        b = 4.0 * s[idx] - s[neighbor_flat].sum(axis=1)
        on_boundary = nbr < 0
        b = b + np.where(on_boundary, t[neighbor_flat], 0.0).sum(axis=1)
        x, iterations, residual = _conjugate_gradient(
            b, nbr, s[idx], cfg.solver_tolerance, cfg.max_iterations
        )
        out[ys, xs, c] = x
        worst_residual = max(worst_residual, residual)
        worst_iterations = max(worst_iterations, iterations)
        converged = residual <= cfg.solver_tolerance
        all_converged &= converged
        any_failed |= iterations >= cfg.max_iterations and residual > 10.0 * cfg.solver_tolerance
    return BlendResult(
        frame=out,
        residual=worst_residual,
        iterations=worst_iterations,
        converged=all_converged,
        no_convergence=any_failed,
    )


def _conjugate_gradient(
    b: np.ndarray, nbr: np.ndarray, x0: np.ndarray, tol: float, max_iter: int
) -> tuple[np.ndarray, int, float]:
    """Matrix-free CG on the omega Laplacian.  Returns (x, iterations,
    relative residual), with the residual recomputed from scratch at
    exit so the reported value is trustworthy."""
    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        return np.zeros_like(b), 0, 0.0
    x = x0.astype(np.float64, copy=True)
    iterations = 0
    while True:
        # True residual: governs both convergence and the reported value,
        # so recurrence drift can never overstate accuracy.
        r = b - kernels.laplacian_apply(x, nbr)
        r_norm = float(np.linalg.norm(r))
        if r_norm <= tol * b_norm or iterations >= max_iter:
            return x, iterations, r_norm / b_norm
        p = r.copy()
        rs = r_norm * r_norm
        while iterations < max_iter:
            ap = kernels.laplacian_apply(p, nbr)
            pap = float(p @ ap)
            if pap <= 0.0:
                # Search direction numerically degenerate; no progress
                # is possible from here.
                true = float(np.linalg.norm(b - kernels.laplacian_apply(x, nbr)))
                return x, iterations, true / b_norm
            alpha = rs / pap
            x += alpha * p
            r -= alpha * ap
            iterations += 1
            rs_new = float(r @ r)
            r_norm = np.sqrt(rs_new)
            if r_norm <= tol * b_norm:
                break  # candidate convergence; outer loop re-verifies
            p = r + (rs_new / rs) * p
            rs = rs_new


def direct_composite(target: np.ndarray, source: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """Hard cut: source inside omega, target outside."""
    validate_frame(target)
    if target.shape != source.shape or omega.shape != target.shape[:2]:
        raise ValueError("target, source and omega dimensions must agree")
    return np.where(np.asarray(omega, dtype=bool)[:, :, None], source, target)


def clamp_frame(frame: np.ndarray) -> np.ndarray:
    return np.clip(frame, 0.0, 1.0)

"""Pure-numpy kernel implementations (fallback backend).

Semantics are the contract; the numba backend mirrors these functions
loop-for-loop.  Where the two backends must agree bit-for-bit
(bilinear sampling, rasterization, the masked Laplacian) the arithmetic
is written in the exact evaluation order the numba loops use.
"""

import numpy as np


def bilinear_many(img: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Clamped bilinear samples of ``img`` at float coordinates.

    Coordinates outside [0, w-1] x [0, h-1] are clamped to the border.
    """
    h, w = img.shape
    xc = np.clip(xs, 0.0, float(w - 1))
    yc = np.clip(ys, 0.0, float(h - 1))
    x0 = np.clip(np.floor(xc), 0, max(w - 2, 0)).astype(np.int64)
    y0 = np.clip(np.floor(yc), 0, max(h - 2, 0)).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xc - x0
    fy = yc - y0
    top = img[y0, x0] * (1.0 - fx) + img[y0, x1] * fx
    bot = img[y1, x0] * (1.0 - fx) + img[y1, x1] * fx
    return top * (1.0 - fy) + bot * fy


def rasterize_convex(corners: np.ndarray, width: int, height: int) -> np.ndarray:
    """Fill a clockwise convex quad: pixel (x, y) is set iff its center
    (x+0.5, y+0.5) lies inside the quad or on its boundary."""
    cx = np.arange(width, dtype=np.float64) + 0.5
    cy = (np.arange(height, dtype=np.float64) + 0.5)[:, None]
    inside = np.ones((height, width), dtype=bool)
    for i in range(4):
        ax, ay = corners[i]
        bx, by = corners[(i + 1) % 4]
        ex = bx - ax
        ey = by - ay
        cross = ex * (cy - ay) - ey * (cx - ax)
        inside &= cross >= 0.0
    return inside


def label_components(mask: np.ndarray) -> np.ndarray:
    """8-connected labeling; components numbered 1..K in order of their
    minimal row-major pixel index.  Background is 0."""
    h, w = mask.shape
    labels = np.zeros((h, w), dtype=np.int32)
    visited = ~mask
    starts = np.flatnonzero(mask.ravel())
    label = 0
    for flat in starts:
        sy, sx = divmod(int(flat), w)
        if visited[sy, sx]:
            continue
        label += 1
        visited[sy, sx] = True
        fy = np.array([sy], dtype=np.int64)
        fx = np.array([sx], dtype=np.int64)
        while fy.size:
            labels[fy, fx] = label
            ny = (fy[:, None] + _OFF_Y).ravel()
            nx = (fx[:, None] + _OFF_X).ravel()
            ok = (ny >= 0) & (ny < h) & (nx >= 0) & (nx < w)
            ny, nx = ny[ok], nx[ok]
            ok = ~visited[ny, nx]
            ny, nx = ny[ok], nx[ok]
            if ny.size:
                flat_n = np.unique(ny * w + nx)
                ny, nx = np.divmod(flat_n, w)
                visited[ny, nx] = True
            fy, fx = ny, nx
    return labels


_OFF_Y = np.array([-1, -1, -1, 0, 0, 1, 1, 1], dtype=np.int64)
_OFF_X = np.array([-1, 0, 1, -1, 1, -1, 0, 1], dtype=np.int64)


def _box_sum(a: np.ndarray, half: int) -> np.ndarray:
    """Sum of a over (2*half+1)^2 windows; only centers whose window fits
    entirely inside the image are filled, the border band stays 0."""
    h, w = a.shape
    k = 2 * half + 1
    if h < k or w < k:
        return np.zeros_like(a)
    p = np.zeros((h + 1, w + 1), dtype=np.float64)
    np.cumsum(np.cumsum(a, axis=0), axis=1, out=p[1:, 1:])
    s = p[k:, k:] - p[:-k, k:] - p[k:, :-k] + p[:-k, :-k]
    out = np.zeros_like(a)
    out[half:h - half, half:w - half] = s
    return out


def min_eig_map(ix: np.ndarray, iy: np.ndarray, half: int) -> np.ndarray:
    """Minimum eigenvalue of the summed structure tensor over a
    (2*half+1)^2 window; zero on the border band where the window
    does not fit."""
    sxx = _box_sum(ix * ix, half)
    sxy = _box_sum(ix * iy, half)
    syy = _box_sum(iy * iy, half)
    tr = 0.5 * (sxx + syy)
    det_root = np.sqrt(np.square(0.5 * (sxx - syy)) + np.square(sxy))
    return np.maximum(tr - det_root, 0.0)


def lk_level(
    prev: np.ndarray,
    nxt: np.ndarray,
    gx: np.ndarray,
    gy: np.ndarray,
    px: float,
    py: float,
    dx: float,
    dy: float,
    half: int,
    max_iter: int,
    eps: float,
    min_eig: float,
) -> tuple[float, float, int, float]:
    """One pyramid level of iterative window displacement refinement.

    Returns (dx, dy, status, mean_abs_residual); status 0 means lost
    (window out of bounds or texture below the eigenvalue cutoff).
    """
    h, w = prev.shape
    offs = np.arange(-half, half + 1, dtype=np.float64)
    oy, ox = np.meshgrid(offs, offs, indexing="ij")
    tx = (px + ox).ravel()
    ty = (py + oy).ravel()
    if tx[0] < 0.0 or ty[0] < 0.0 or tx[-1] > w - 1.0 or ty[-1] > h - 1.0:
        return dx, dy, 0, np.inf
    tpl = bilinear_many(prev, tx, ty)
    gxs = bilinear_many(gx, tx, ty)
    gys = bilinear_many(gy, tx, ty)
    gxx = float(np.dot(gxs, gxs))
    gxy = float(np.dot(gxs, gys))
    gyy = float(np.dot(gys, gys))
    tr = 0.5 * (gxx + gyy)
    dr = np.sqrt((0.5 * (gxx - gyy)) ** 2 + gxy**2)
    if tr - dr < min_eig:
        return dx, dy, 0, np.inf
    det = gxx * gyy - gxy * gxy
    if det <= 0.0:
        return dx, dy, 0, np.inf
    for _ in range(max_iter):
        qx = tx + dx
        qy = ty + dy
        if qx[0] < 0.0 or qy[0] < 0.0 or qx[-1] > w - 1.0 or qy[-1] > h - 1.0:
            return dx, dy, 0, np.inf
        diff = tpl - bilinear_many(nxt, qx, qy)
        bx = float(np.dot(gxs, diff))
        by = float(np.dot(gys, diff))
        ddx = (gyy * bx - gxy * by) / det
        ddy = (gxx * by - gxy * bx) / det
        dx += ddx
        dy += ddy
        if ddx * ddx + ddy * ddy < eps * eps:
            break
    qx = tx + dx
    qy = ty + dy
    if qx[0] < 0.0 or qy[0] < 0.0 or qx[-1] > w - 1.0 or qy[-1] > h - 1.0:
        return dx, dy, 0, np.inf
    resid = float(np.mean(np.abs(tpl - bilinear_many(nxt, qx, qy))))
    return dx, dy, 1, resid


def laplacian_apply(f: np.ndarray, nbr: np.ndarray) -> np.ndarray:
    """Apply the masked 5-point Laplacian: out[i] = 4 f[i] - sum of f at
    the in-region neighbors listed in nbr[i] (entries < 0 are absent)."""
    n = f.shape[0]
    ext = np.append(f, 0.0)
    idx = np.where(nbr < 0, n, nbr)
    out = 4.0 * f
    out = out - ext[idx[:, 0]]
    out = out - ext[idx[:, 1]]
    out = out - ext[idx[:, 2]]
    out = out - ext[idx[:, 3]]
    return out

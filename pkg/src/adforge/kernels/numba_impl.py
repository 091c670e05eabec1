"""Numba kernel implementations (accelerated backend).

Mirrors :mod:`adforge.kernels.numpy_impl`; bilinear sampling,
rasterization and the masked Laplacian reproduce the numpy arithmetic
order exactly so both backends agree bit-for-bit on those kernels.
"""

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _bilin(img, x, y):
    h, w = img.shape
    xc = min(max(x, 0.0), w - 1.0)
    yc = min(max(y, 0.0), h - 1.0)
    x0 = int(np.floor(xc))
    y0 = int(np.floor(yc))
    xmax = w - 2 if w >= 2 else 0
    ymax = h - 2 if h >= 2 else 0
    if x0 > xmax:
        x0 = xmax
    if x0 < 0:
        x0 = 0
    if y0 > ymax:
        y0 = ymax
    if y0 < 0:
        y0 = 0
    x1 = min(x0 + 1, w - 1)
    y1 = min(y0 + 1, h - 1)
    fx = xc - x0
    fy = yc - y0
    top = img[y0, x0] * (1.0 - fx) + img[y0, x1] * fx
    bot = img[y1, x0] * (1.0 - fx) + img[y1, x1] * fx
    return top * (1.0 - fy) + bot * fy


@njit(cache=True)
def bilinear_many(img, xs, ys):
    out = np.empty(xs.shape[0], dtype=np.float64)
    for i in range(xs.shape[0]):
        out[i] = _bilin(img, xs[i], ys[i])
    return out


@njit(cache=True)
def rasterize_convex(corners, width, height):
    inside = np.empty((height, width), dtype=np.bool_)
    for iy in range(height):
        cy = iy + 0.5
        for ix in range(width):
            cx = ix + 0.5
            ok = True
            for i in range(4):
                ax = corners[i, 0]
                ay = corners[i, 1]
                j = i + 1
                if j == 4:
                    j = 0
                ex = corners[j, 0] - ax
                ey = corners[j, 1] - ay
                if ex * (cy - ay) - ey * (cx - ax) < 0.0:
                    ok = False
                    break
            inside[iy, ix] = ok
    return inside


@njit(cache=True)
def label_components(mask):
    h, w = mask.shape
    labels = np.zeros((h, w), dtype=np.int32)
    stack = np.empty(h * w, dtype=np.int64)
    label = 0
    for sy in range(h):
        for sx in range(w):
            if not mask[sy, sx] or labels[sy, sx] != 0:
                continue
            label += 1
            top = 0
            stack[top] = sy * w + sx
            top += 1
            labels[sy, sx] = label
            while top > 0:
                top -= 1
                flat = stack[top]
                y = flat // w
                x = flat - y * w
                for dy in range(-1, 2):
                    ny = y + dy
                    if ny < 0 or ny >= h:
                        continue
                    for dx in range(-1, 2):
                        nx = x + dx
                        if nx < 0 or nx >= w:
                            continue
                        if mask[ny, nx] and labels[ny, nx] == 0:
                            labels[ny, nx] = label
                            stack[top] = ny * w + nx
                            top += 1
    return labels


@njit(cache=True)
def min_eig_map(ix, iy, half):
    h, w = ix.shape
    out = np.zeros((h, w), dtype=np.float64)
    k = 2 * half + 1
    if h < k or w < k:
        return out
    for y in range(half, h - half):
        for x in range(half, w - half):
            sxx = 0.0
            sxy = 0.0
            syy = 0.0
            for wy in range(y - half, y + half + 1):
                for wx in range(x - half, x + half + 1):
                    a = ix[wy, wx]
                    b = iy[wy, wx]
                    sxx += a * a
                    sxy += a * b
                    syy += b * b
            tr = 0.5 * (sxx + syy)
            d = 0.5 * (sxx - syy)
            lam = tr - np.sqrt(d * d + sxy * sxy)
            out[y, x] = lam if lam > 0.0 else 0.0
    return out


@njit(cache=True)
def lk_level(prev, nxt, gx, gy, px, py, dx, dy, half, max_iter, eps, min_eig):
    h, w = prev.shape
    k = 2 * half + 1
    if px - half < 0.0 or py - half < 0.0 or px + half > w - 1.0 or py + half > h - 1.0:
        return dx, dy, 0, np.inf
    npix = k * k
    tpl = np.empty(npix, dtype=np.float64)
    gxs = np.empty(npix, dtype=np.float64)
    gys = np.empty(npix, dtype=np.float64)
    i = 0
    for oy in range(-half, half + 1):
        for ox in range(-half, half + 1):
            tx = px + ox
            ty = py + oy
            tpl[i] = _bilin(prev, tx, ty)
            gxs[i] = _bilin(gx, tx, ty)
            gys[i] = _bilin(gy, tx, ty)
            i += 1
    gxx = 0.0
    gxy = 0.0
    gyy = 0.0
    for i in range(npix):
        gxx += gxs[i] * gxs[i]
        gxy += gxs[i] * gys[i]
        gyy += gys[i] * gys[i]
    n = float(npix)
    tr = 0.5 * (gxx + gyy)
    da = 0.5 * (gxx - gyy)
    dr = np.sqrt(da * da + gxy * gxy)
    if tr - dr < min_eig:
        return dx, dy, 0, np.inf
    det = gxx * gyy - gxy * gxy
    if det <= 0.0:
        return dx, dy, 0, np.inf
    for _ in range(max_iter):
        if px - half + dx < 0.0 or py - half + dy < 0.0 or \
                px + half + dx > w - 1.0 or py + half + dy > h - 1.0:
            return dx, dy, 0, np.inf
        bx = 0.0
        by = 0.0
        i = 0
        for oy in range(-half, half + 1):
            for ox in range(-half, half + 1):
                diff = tpl[i] - _bilin(nxt, px + ox + dx, py + oy + dy)
                bx += gxs[i] * diff
                by += gys[i] * diff
                i += 1
        ddx = (gyy * bx - gxy * by) / det
        ddy = (gxx * by - gxy * bx) / det
        dx += ddx
        dy += ddy
        if ddx * ddx + ddy * ddy < eps * eps:
            break
    if px - half + dx < 0.0 or py - half + dy < 0.0 or \
            px + half + dx > w - 1.0 or py + half + dy > h - 1.0:
        return dx, dy, 0, np.inf
    resid = 0.0
    i = 0
    for oy in range(-half, half + 1):
        for ox in range(-half, half + 1):
            resid += abs(tpl[i] - _bilin(nxt, px + ox + dx, py + oy + dy))
            i += 1
    return dx, dy, 1, resid / n


@njit(cache=True)
def laplacian_apply(f, nbr):
    n = f.shape[0]
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        acc = 4.0 * f[i]
        for kk in range(4):
            j = nbr[i, kk]
            if j >= 0:
                acc -= f[j]
            else:
                acc -= 0.0
        out[i] = acc
    return out

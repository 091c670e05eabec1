"""Time each hot kernel under both backends (numba @njit loops vs the
pure-numpy fallback) on realistic workloads.

Run:  python3 bench/bench_kernels.py [--repeats N]

Both backends are imported directly (bypassing the ADFORGE_NUMBA switch)
so one process can time the pair side by side.  Numba functions are
called once per workload before timing so JIT compilation is excluded.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from adforge.kernels import numpy_impl

try:
    from adforge.kernels import numba_impl
except ImportError:
    numba_impl = None


def _best_of(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _workloads() -> list[tuple[str, str, tuple]]:
    """(name, kernel attr, args) for each timed case."""
    rng = np.random.default_rng(0)

    img = rng.random((480, 640))
    xs = rng.uniform(0, 639, 200_000)
    ys = rng.uniform(0, 479, 200_000)

    corners = np.array([[100.3, 80.7], [520.6, 95.2], [500.9, 400.4], [120.1, 380.8]])

    mask = rng.random((480, 640)) > 0.55

    gray = rng.random((480, 640))
    gx = np.empty_like(gray)
    gy = np.empty_like(gray)
    gx[:, 1:-1] = (gray[:, 2:] - gray[:, :-2]) / 2.0
    gx[:, 0] = gray[:, 1] - gray[:, 0]
    gx[:, -1] = gray[:, -1] - gray[:, -2]
    gy[1:-1, :] = (gray[2:, :] - gray[:-2, :]) / 2.0
    gy[0, :] = gray[1, :] - gray[0, :]
    gy[-1, :] = gray[-1, :] - gray[-2, :]
    nxt = np.roll(gray, (1, 2), axis=(0, 1))

    n = 120_000
    f = rng.random(n)
    nbr = rng.integers(-1, n, (n, 4)).astype(np.int64)

    return [
        ("bilinear_many 200k samples", "bilinear_many", (img, xs, ys)),
        ("rasterize_convex 640x480", "rasterize_convex", (corners, 640, 480)),
        ("label_components 640x480", "label_components", (mask,)),
        ("min_eig_map 640x480 w=7", "min_eig_map", (gx, gy, 3)),
        (
            "lk_level one window",
            "lk_level",
            (gray, nxt, gx, gy, 320.0, 240.0, 0.0, 0.0, 3, 20, 0.01, 1e-4),
        ),
        ("laplacian_apply 120k unknowns", "laplacian_apply", (f, nbr)),
    ]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5, help="timing repeats (best-of)")
    args = parser.parse_args()

    cases = _workloads()
    name_w = max(len(name) for name, _, _ in cases)

    if numba_impl is None:
        print("numba backend unavailable; timing numpy only\n")
    header = f"{'kernel':<{name_w}}  {'numpy':>10}"
    if numba_impl is not None:
        header += f"  {'numba':>10}  {'speedup':>8}"
    print(header)
    print("-" * len(header))

    for name, attr, call_args in cases:
        np_fn = getattr(numpy_impl, attr)
        np_t = _best_of(lambda: np_fn(*call_args), args.repeats)
        line = f"{name:<{name_w}}  {np_t * 1e3:9.3f}ms"
        if numba_impl is not None:
            nb_fn = getattr(numba_impl, attr)
            nb_fn(*call_args)  # warm the JIT cache before timing
            nb_t = _best_of(lambda: nb_fn(*call_args), args.repeats)
            line += f"  {nb_t * 1e3:9.3f}ms  {np_t / nb_t:7.2f}x"
        print(line)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

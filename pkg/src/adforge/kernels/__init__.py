"""Hot numeric kernels with two interchangeable backends.

Every kernel exists twice: a numba ``@njit`` loop version
(:mod:`adforge.kernels.numba_impl`) and a vectorized pure-numpy version
(:mod:`adforge.kernels.numpy_impl`).  The active backend is chosen once at
import time from the ``ADFORGE_NUMBA`` environment variable:

* ``auto`` (default) — numba if it imports, numpy otherwise
* ``0`` / ``off`` / ``false`` — force the numpy fallback
* ``1`` / ``on`` / ``true`` — require numba (ImportError if missing)

``bench/bench_kernels.py`` times both backends side by side.
"""

import os

_flag = os.environ.get("ADFORGE_NUMBA", "auto").strip().lower()

if _flag in ("0", "off", "false", "no"):
    _use_numba = False
elif _flag in ("1", "on", "true", "yes", "force"):
    import numba  # noqa: F401  -- fail loudly when forced but missing

    _use_numba = True
else:
    try:
        import numba  # noqa: F401

        _use_numba = True
    except ImportError:
        _use_numba = False

if _use_numba:
    from . import numba_impl as _impl

    BACKEND = "numba"
else:
    from . import numpy_impl as _impl

    BACKEND = "numpy"

bilinear_many = _impl.bilinear_many
rasterize_convex = _impl.rasterize_convex
label_components = _impl.label_components
min_eig_map = _impl.min_eig_map
lk_level = _impl.lk_level
laplacian_apply = _impl.laplacian_apply

__all__ = [
    "BACKEND",
    "bilinear_many",
    "rasterize_convex",
    "label_components",
    "min_eig_map",
    "lk_level",
    "laplacian_apply",
]

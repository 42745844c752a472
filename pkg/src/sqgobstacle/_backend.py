"""Selects the compiled kernels when available, else the numpy fallback.

``SQGOBSTACLE_BACKEND=python`` forces the fallback. ``SQGOBSTACLE_THREADS`` caps the
OpenMP thread count of the compiled loops (default 1).
"""

import os

from . import _pycore

OUTER_VALUE = _pycore.OUTER_VALUE
OUTER_REPLICATE = _pycore.OUTER_REPLICATE


def thread_count():
    raw = os.environ.get("SQGOBSTACLE_THREADS", "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def _load_compiled():
    if os.environ.get("SQGOBSTACLE_BACKEND", "").strip().lower() == "python":
        return None
    try:
        from . import _core
    except ImportError:
        return None
    return _core


_core = _load_compiled()
BACKEND = "compiled" if _core is not None else "python"


def direct_sum(targets, sources, weights, radius, delta, blend, backend=None):
    import numpy as np

    targets = np.ascontiguousarray(targets, dtype=float).reshape(-1, 2)
    sources = np.ascontiguousarray(sources, dtype=float).reshape(-1, 2)
    weights = np.ascontiguousarray(weights, dtype=float).reshape(-1)
    use = backend or BACKEND
    if use == "compiled" and _core is not None:
        return _core.direct_sum(targets, sources, weights, float(radius), float(delta),
                                tuple(blend), thread_count())
    return _pycore.direct_sum(targets, sources, weights, radius, delta, blend)


def interp_polar(values, r0, dr, pr, ptheta, limiter=False, outer_mode=OUTER_VALUE,
                 outer_value=0.0, backend=None):
    use = backend or BACKEND
    if use == "compiled" and _core is not None:
        return _core.interp_polar(values, float(r0), float(dr), pr, ptheta, bool(limiter),
                                  int(outer_mode), float(outer_value), thread_count())
    return _pycore.interp_polar(values, r0, dr, pr, ptheta, limiter, outer_mode, outer_value)

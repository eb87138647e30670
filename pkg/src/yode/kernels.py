"""Backend selection for the pair scans.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``YODE_PURE_PYTHON=1`` is set, the numpy fallback is
used. ``BACKEND`` names the active one.
"""

import os

import numpy as np

from . import _pykernels

BACKENDS = {"python": _pykernels}

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None
else:
    BACKENDS["cython"] = _ckernels

if os.environ.get("YODE_PURE_PYTHON") == "1" or _ckernels is None:
    BACKEND = "python"
else:
    BACKEND = "cython"


def get_backend(name=None):
    name = name or BACKEND
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None


def lag_powers(n: int, step: float, alpha: float) -> np.ndarray:
    """Table ``(k * step) ** alpha`` for ``k = 0 .. n-1`` (entry 0 unused)."""
    lags = np.arange(n, dtype=np.float64) * step
    if alpha == 0.0:
        return np.ones(n)
    return np.power(lags, alpha)


def holder_scan(values, lagpow, i0, i1, backend=None):
    return get_backend(backend).holder_scan(np.ascontiguousarray(values, dtype=np.float64), lagpow, i0, i1)


def lift_scan(values, lagpow, a, b, backend=None):
    return get_backend(backend).lift_scan(np.ascontiguousarray(values, dtype=np.float64), lagpow, a, b)

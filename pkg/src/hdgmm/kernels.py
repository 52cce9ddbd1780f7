"""Hot-loop kernels, compiled when available.

The Cython extension ``hdgmm._ckernels`` is used if it was built; otherwise
the numpy versions in ``hdgmm._pykernels`` are used. Setting the environment
variable ``HDGMM_PURE_PYTHON=1`` forces the fallback.

``BACKEND`` names the active implementation ("cython" or "python").
"""
import os

import numpy as np

from . import _pykernels

_impl = _pykernels
BACKEND = "python"
if os.environ.get("HDGMM_PURE_PYTHON", "") in ("", "0"):
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels


def _c64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def spiked_quadform(sqnorm, proj, inv_a, inv_b):
    return _impl.spiked_quadform(_c64(sqnorm), _c64(proj), _c64(inv_a), float(inv_b))


def normalize_log_rows(logp):
    return _impl.normalize_log_rows(_c64(logp))


def argmax_dot(X, q):
    return _impl.argmax_dot(_c64(X), _c64(q))


def nearest_row(C, q):
    return _impl.nearest_row(_c64(C), _c64(q))


def assign_nearest(X, C):
    return _impl.assign_nearest(_c64(X), _c64(C))

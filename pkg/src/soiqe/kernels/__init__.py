"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The implementation is chosen once at import time from ``SOIQE_BACKEND``:
``numba`` (default when numba imports cleanly) or ``numpy``. Both paths share
one contract; results agree to floating-point rounding, not bit-for-bit.
"""

import os

from . import _numpy

BACKEND_ENV = "SOIQE_BACKEND"


def _select():
    wanted = os.environ.get(BACKEND_ENV, "numba").strip().lower()
    if wanted == "numpy":
        return _numpy
    if wanted != "numba":
        raise ImportError(f"{BACKEND_ENV} must be 'numba' or 'numpy', got {wanted!r}")
    try:
        from . import _numba
    except ImportError:
        return _numpy
    return _numba


_impl = _select()

BACKEND = _impl.NAME
bilinear_sample = _impl.bilinear_sample
correlate_symmetric = _impl.correlate_symmetric
encode_batch = _impl.encode_batch


def available_backends():
    """Return the kernel modules importable in this environment, by name."""
    found = {"numpy": _numpy}
    try:
        from . import _numba
    except ImportError:
        pass
    else:
        found["numba"] = _numba
    return found

"""Basis-evaluation kernels with a compiled core and a numpy fallback.

The compiled extension is preferred when importable.  Set the environment
variable ``KANBENCH_KERNEL=numpy`` to force the fallback (useful for the
backend benchmark and for debugging), or ``KANBENCH_KERNEL=cython`` to fail
loudly when the extension is missing.
"""

import os

from . import numpy_backend

_requested = os.environ.get("KANBENCH_KERNEL", "").strip().lower()

if _requested == "numpy":
    _impl = numpy_backend
    BACKEND = "numpy"
else:
    try:
        from . import _bspline_cy as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        if _requested == "cython":
            raise
        _impl = numpy_backend
        BACKEND = "numpy"

basis_matrix = _impl.basis_matrix
basis_and_derivative_matrix = _impl.basis_and_derivative_matrix


def active_backend() -> str:
    """Name of the kernel backend selected at import time."""
    return BACKEND


__all__ = [
    "BACKEND",
    "active_backend",
    "basis_matrix",
    "basis_and_derivative_matrix",
    "numpy_backend",
]

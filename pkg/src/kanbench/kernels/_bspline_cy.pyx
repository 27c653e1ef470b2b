# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled B-spline basis kernels.

Same De Boor-Cox recursion and seeding convention as ``numpy_backend``, but
evaluated per point over the local support window only (at most degree+1
basis functions are nonzero at any x), which avoids the dense temporaries of
the vectorized fallback.
"""

from libc.math cimport isfinite

import numpy as np


cdef inline Py_ssize_t _find_span(const double[::1] knots, int degree, double x) noexcept:
    """Index j of the order-0 interval containing x, or -1 when outside.

    An x equal to the last interior knot maps to the final interior interval.
    Non-finite x counts as outside (zero row), matching the numpy backend.
    """
    cdef Py_ssize_t nk = knots.shape[0]
    cdef Py_ssize_t hi_idx = nk - 1 - degree
    cdef double step, rel
    cdef Py_ssize_t j
    if not isfinite(x):
        return -1
    if x == knots[hi_idx]:
        return hi_idx - 1
    if x < knots[0] or x >= knots[nk - 1]:
        return -1
    step = knots[1] - knots[0]
    rel = (x - knots[0]) / step
    j = <Py_ssize_t> rel
    if j > nk - 2:
        j = nk - 2
    # guard against float rounding in the arithmetic span lookup
    while j > 0 and x < knots[j]:
        j -= 1
    while j < nk - 2 and x >= knots[j + 1]:
        j += 1
    return j


def basis_matrix(const double[::1] knots, int degree, const double[::1] x):
    """Rows of basis values, shape (len(x), len(knots) - degree - 1)."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t n0 = knots.shape[0] - 1
    cdef Py_ssize_t nb = knots.shape[0] - degree - 1
    out = np.zeros((n, nb), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef double[::1] buf = np.zeros(n0, dtype=np.float64)
    cdef Py_ssize_t s, j, i, lo, hi
    cdef int r
    cdef double xv
    for s in range(n):
        xv = x[s]
        j = _find_span(knots, degree, xv)
        if j < 0:
            continue
        lo = j - degree if j - degree > 0 else 0
        for i in range(lo, j + 1):
            buf[i] = 0.0
        buf[j] = 1.0
        for r in range(1, degree + 1):
            lo = j - r if j - r > 0 else 0
            hi = j if j < n0 - r - 1 else n0 - r - 1
            for i in range(lo, hi + 1):
                buf[i] = (
                    (xv - knots[i]) / (knots[i + r] - knots[i]) * buf[i]
                    + (knots[i + r + 1] - xv) / (knots[i + r + 1] - knots[i + 1])
                    * (buf[i + 1] if i + 1 <= j else 0.0)
                )
        lo = j - degree if j - degree > 0 else 0
        hi = j if j < nb - 1 else nb - 1
        for i in range(lo, hi + 1):
            o[s, i] = buf[i]
    return out


def basis_and_derivative_matrix(const double[::1] knots, int degree, const double[::1] x):
    """Basis values and first derivatives, both (len(x), n_basis)."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t n0 = knots.shape[0] - 1
    cdef Py_ssize_t nb = knots.shape[0] - degree - 1
    vals = np.zeros((n, nb), dtype=np.float64)
    ders = np.zeros((n, nb), dtype=np.float64)
    cdef double[:, ::1] v = vals
    cdef double[:, ::1] d = ders
    cdef double[::1] buf = np.zeros(n0, dtype=np.float64)
    cdef Py_ssize_t s, j, i, lo, hi
    cdef int r
    cdef double xv, bl, br
    for s in range(n):
        xv = x[s]
        j = _find_span(knots, degree, xv)
        if j < 0:
            continue
        lo = j - degree if j - degree > 0 else 0
        for i in range(lo, j + 1):
            buf[i] = 0.0
        buf[j] = 1.0
        # levels 1..degree-1 in place; the final level feeds both outputs
        for r in range(1, degree):
            lo = j - r if j - r > 0 else 0
            hi = j if j < n0 - r - 1 else n0 - r - 1
            for i in range(lo, hi + 1):
                buf[i] = (
                    (xv - knots[i]) / (knots[i + r] - knots[i]) * buf[i]
                    + (knots[i + r + 1] - xv) / (knots[i + r + 1] - knots[i + 1])
                    * (buf[i + 1] if i + 1 <= j else 0.0)
                )
        lo = j - degree if j - degree > 0 else 0
        hi = j if j < nb - 1 else nb - 1
        for i in range(lo, hi + 1):
            bl = buf[i]
            br = buf[i + 1] if i + 1 <= j else 0.0
            v[s, i] = (
                (xv - knots[i]) / (knots[i + degree] - knots[i]) * bl
                + (knots[i + degree + 1] - xv)
                / (knots[i + degree + 1] - knots[i + 1]) * br
            )
            d[s, i] = degree * (
                bl / (knots[i + degree] - knots[i])
                - br / (knots[i + degree + 1] - knots[i + 1])
            )
    return vals, ders

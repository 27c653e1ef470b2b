"""Vectorized numpy implementation of the B-spline basis kernels.

Evaluates order-k basis functions on a uniform extended knot vector via the
De Boor-Cox recursion, densely over all knot spans.  Serves as the portable
fallback for the compiled kernel in ``_bspline_cy``; both backends implement
the same seeding convention and must agree to float64 precision.
"""

import numpy as np

__all__ = ["basis_matrix", "basis_and_derivative_matrix"]


def _sanitize(knots: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Map non-finite inputs to a finite point outside the knot span.

    Out-of-span points produce all-zero rows, so this reproduces the
    compiled kernel's behavior without NaN/inf leaking into the recursion.
    """
    x = np.asarray(x, dtype=np.float64)
    if np.isfinite(x).all():
        return x
    return np.where(np.isfinite(x), x, knots[-1] + 1.0)


def _order_zero(knots: np.ndarray, degree: int, x: np.ndarray) -> np.ndarray:
    """Indicator seeds B_{i,0}(x) with the right-endpoint adjustment.

    Half-open convention: B_{i,0}(x) = 1 iff knots[i] <= x < knots[i+1].
    An x exactly equal to the last interior knot is assigned to the final
    interior interval so partition of unity holds on the closed range.
    """
    xc = x[:, None]
    b = ((xc >= knots[:-1]) & (xc < knots[1:])).astype(np.float64)
    hi_idx = len(knots) - 1 - degree  # last interior knot
    at_hi = x == knots[hi_idx]
    if at_hi.any():
        b[at_hi] = 0.0
        b[at_hi, hi_idx - 1] = 1.0
    return b


def basis_matrix(knots: np.ndarray, degree: int, x: np.ndarray) -> np.ndarray:
    """Rows of basis values, shape (len(x), len(knots) - degree - 1)."""
    x = _sanitize(knots, x)
    b = _order_zero(knots, degree, x)
    for r in range(1, degree + 1):
        left = (x[:, None] - knots[: -(r + 1)]) / (knots[r:-1] - knots[: -(r + 1)])
        right = (knots[r + 1 :] - x[:, None]) / (knots[r + 1 :] - knots[1:-r])
        b = left * b[:, :-1] + right * b[:, 1:]
    return b


def basis_and_derivative_matrix(
    knots: np.ndarray, degree: int, x: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Basis values and their first derivatives, both (len(x), n_basis).

    The derivative uses the standard identity
    B'_{i,k} = k * (B_{i,k-1}/(t_{i+k}-t_i) - B_{i+1,k-1}/(t_{i+k+1}-t_{i+1})),
    evaluated from the order-(k-1) values of the same recursion.
    """
    x = _sanitize(knots, x)
    b = _order_zero(knots, degree, x)
    for r in range(1, degree):
        left = (x[:, None] - knots[: -(r + 1)]) / (knots[r:-1] - knots[: -(r + 1)])
        right = (knots[r + 1 :] - x[:, None]) / (knots[r + 1 :] - knots[1:-r])
        b = left * b[:, :-1] + right * b[:, 1:]
    k = degree
    left = (x[:, None] - knots[: -(k + 1)]) / (knots[k:-1] - knots[: -(k + 1)])
    right = (knots[k + 1 :] - x[:, None]) / (knots[k + 1 :] - knots[1:-k])
    vals = left * b[:, :-1] + right * b[:, 1:]
    deriv = k * (
        b[:, :-1] / (knots[k:-1] - knots[: -(k + 1)])
        - b[:, 1:] / (knots[k + 1 :] - knots[1:-k])
    )
    return vals, deriv

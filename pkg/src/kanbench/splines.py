"""Uniform extended knot grids and B-spline basis evaluation.

A grid of ``intervals`` uniform segments of degree-``degree`` splines over
[range_lo, range_hi] carries ``intervals + degree`` basis functions.  The
knot vector extends ``degree`` uniform steps past each end so that every
basis function has a full support inside the knot span.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DimensionError, NumericError


@dataclass(frozen=True)
class SplineGrid:
    """Knot layout for one family of uniform B-splines."""

    intervals: int
    degree: int
    range_lo: float
    range_hi: float
    knots: np.ndarray = field(repr=False)

    @property
    def n_basis(self) -> int:
        return self.intervals + self.degree

    @property
    def step(self) -> float:
        return (self.range_hi - self.range_lo) / self.intervals


def make_grid(
    intervals: int, degree: int, range_lo: float = -1.0, range_hi: float = 1.0
) -> SplineGrid:
    """Build a uniform grid with ``intervals + 2*degree + 1`` knots.

    Interior knots span exactly [range_lo, range_hi]; ``degree`` extension
    knots continue the uniform spacing on each side.
    """
    if intervals < 1:
        raise ValueError(f"grid needs at least one interval, got {intervals}")
    if degree < 1:
        raise ValueError(f"spline degree must be positive, got {degree}")
    if not (np.isfinite(range_lo) and np.isfinite(range_hi)) or range_lo >= range_hi:
        raise ValueError(f"invalid grid range [{range_lo}, {range_hi}]")
    step = (range_hi - range_lo) / intervals
    idx = np.arange(-degree, intervals + degree + 1, dtype=np.float64)
    knots = range_lo + idx * step
    knots.setflags(write=False)
    return SplineGrid(intervals, degree, float(range_lo), float(range_hi), knots)


def _check_finite_scalar(x: float) -> float:
    x = float(x)
    if not np.isfinite(x):
        raise NumericError(f"basis evaluation needs a finite input, got {x}")
    return x


def basis(grid: SplineGrid, x: float) -> np.ndarray:
    """Values of all basis functions at x (length ``grid.n_basis``).

    The vector sums to 1 for x in the closed grid range, is non-negative
    everywhere, and is all zero outside the extended knot span.
    """
    x = _check_finite_scalar(x)
    return kernels.basis_matrix(grid.knots, grid.degree, np.array([x]))[0]


def basis_derivative(grid: SplineGrid, x: float) -> np.ndarray:
    """First derivatives of all basis functions at x."""
    x = _check_finite_scalar(x)
    return kernels.basis_and_derivative_matrix(
        grid.knots, grid.degree, np.array([x])
    )[1][0]


def spline_eval(coeffs: np.ndarray, grid: SplineGrid, x: float) -> float:
    """Weighted basis sum sum_i coeffs[i] * B_i(x)."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if coeffs.shape != (grid.n_basis,):
        raise DimensionError(
            f"expected {grid.n_basis} coefficients, got shape {coeffs.shape}"
        )
    return float(coeffs @ basis(grid, x))


def batched_basis(grid: SplineGrid, x: np.ndarray) -> np.ndarray:
    """Basis values for an array of inputs; output shape ``x.shape + (n_basis,)``.

    Non-finite entries produce zero rows; callers that require finite inputs
    must validate beforehand.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    flat = kernels.basis_matrix(grid.knots, grid.degree, x.reshape(-1))
    return flat.reshape(*x.shape, grid.n_basis)


def batched_basis_and_derivative(
    grid: SplineGrid, x: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Basis values and derivatives for an array of inputs."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    vals, ders = kernels.basis_and_derivative_matrix(
        grid.knots, grid.degree, x.reshape(-1)
    )
    shape = (*x.shape, grid.n_basis)
    return vals.reshape(shape), ders.reshape(shape)

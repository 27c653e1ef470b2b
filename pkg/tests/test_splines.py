import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kanbench import kernels
from kanbench.errors import DimensionError, NumericError
from kanbench.splines import (
    basis,
    basis_derivative,
    batched_basis,
    batched_basis_and_derivative,
    make_grid,
    spline_eval,
)

from oracles import naive_basis_vector


class TestMakeGrid:
    def test_cubic_grid_knots(self):
        g = make_grid(5, 3, -1.0, 1.0)
        assert len(g.knots) == 12
        np.testing.assert_allclose(g.knots, np.arange(-2.2, 2.3, 0.4), atol=1e-12)
        assert g.n_basis == 8

    def test_smallest_grid(self):
        g = make_grid(1, 1, 0.0, 1.0)
        np.testing.assert_allclose(g.knots, [-1.0, 0.0, 1.0, 2.0])
        assert g.n_basis == 2

    def test_basis_count(self):
        assert make_grid(3, 3, -1.0, 1.0).n_basis == 6

    @pytest.mark.parametrize("bad", [(0, 3), (5, 0), (-1, 3)])
    def test_rejects_bad_counts(self, bad):
        with pytest.raises(ValueError):
            make_grid(bad[0], bad[1], -1.0, 1.0)

    def test_rejects_inverted_range(self):
        with pytest.raises(ValueError):
            make_grid(5, 3, 1.0, -1.0)


class TestBasis:
    def test_interior_knot_cubic_values(self):
        # 0.2 is an interior knot of this grid; uniform cubics give 1/6, 4/6, 1/6
        g = make_grid(5, 3, -1.0, 1.0)
        b = basis(g, 0.2)
        expected = np.zeros(8)
        expected[3:6] = [1 / 6, 4 / 6, 1 / 6]
        np.testing.assert_allclose(b, expected, atol=1e-12)

    def test_sums_to_one_at_lo(self):
        g = make_grid(4, 2, -3.0, 2.0)
        assert basis(g, -3.0).sum() == pytest.approx(1.0, abs=1e-12)

    def test_zero_outside_support(self):
        g = make_grid(5, 3, -1.0, 1.0)
        assert np.all(basis(g, 1.0 + 10 * 2.0) == 0.0)

    def test_right_endpoint_partition_of_unity(self):
        g = make_grid(5, 3, -1.0, 1.0)
        assert basis(g, 1.0).sum() == pytest.approx(1.0, abs=1e-12)

    def test_non_finite_input_rejected(self):
        g = make_grid(5, 3, -1.0, 1.0)
        for bad in (np.nan, np.inf, -np.inf):
            with pytest.raises(NumericError):
                basis(g, bad)

    @pytest.mark.parametrize("G,k", [(1, 1), (3, 2), (5, 3), (10, 3), (4, 5)])
    def test_matches_naive_recursion(self, G, k, rng):
        g = make_grid(G, k, -1.0, 1.0)
        for x in rng.uniform(-1.5, 1.5, size=25):
            expected = naive_basis_vector(float(x), k, g.knots)
            np.testing.assert_allclose(basis(g, float(x)), expected, atol=1e-12)

    def test_partition_of_unity_1000_points(self):
        for G, k in [(3, 3), (5, 3), (10, 3), (15, 3), (20, 3), (5, 1), (5, 2), (5, 4)]:
            g = make_grid(G, k, -1.0, 1.0)
            xs = np.linspace(-1.0, 1.0, 1000, endpoint=False)
            sums = batched_basis(g, xs).sum(axis=1)
            assert np.abs(sums - 1.0).max() < 1e-12

    def test_non_negative_and_local_support(self, rng):
        g = make_grid(7, 3, -2.0, 2.0)
        xs = rng.uniform(-3.5, 3.5, size=300)
        vals = batched_basis(g, xs)
        assert (vals >= 0).all()
        assert (np.count_nonzero(vals, axis=1) <= g.degree + 1).all()

    @given(
        shift=st.floats(-5, 5, allow_nan=False),
        x=st.floats(-1.2, 1.2, allow_nan=False),
    )
    @settings(max_examples=60, deadline=None)
    def test_translation_equivariance(self, shift, x):
        g0 = make_grid(5, 3, -1.0, 1.0)
        g1 = make_grid(5, 3, -1.0 + shift, 1.0 + shift)
        np.testing.assert_allclose(basis(g0, x), basis(g1, x + shift), atol=1e-12)


class TestBasisDerivative:
    def test_derivative_sums_to_zero_interior(self, rng):
        g = make_grid(5, 3, -1.0, 1.0)
        for x in rng.uniform(-0.99, 0.99, size=50):
            assert abs(basis_derivative(g, float(x)).sum()) < 1e-10

    def test_symmetric_center_is_stationary(self):
        # the basis function peaking at an interior knot has zero slope there
        g = make_grid(6, 3, -1.0, 1.0)
        d = basis_derivative(g, 0.0)  # 0.0 is the central knot
        center = np.argmax(basis(g, 0.0))
        assert abs(d[center]) < 1e-12

    def test_matches_finite_differences(self, rng):
        g = make_grid(5, 3, -1.0, 1.0)
        h = 1e-6
        for x in rng.uniform(-0.95, 0.95, size=100):
            x = float(x)
            fd = (basis(g, x + h) - basis(g, x - h)) / (2 * h)
            an = basis_derivative(g, x)
            scale = np.maximum(np.abs(fd), 1e-3)
            assert (np.abs(an - fd) / scale).max() < 1e-5


class TestSplineEval:
    def test_partition_of_unity_constant(self, rng):
        g = make_grid(5, 3, -1.0, 1.0)
        for x in rng.uniform(-1.0, 1.0, size=20):
            assert spline_eval(np.ones(8), g, float(x)) == pytest.approx(1.0, abs=1e-12)

    def test_zero_coeffs(self):
        g = make_grid(5, 3, -1.0, 1.0)
        assert spline_eval(np.zeros(8), g, 0.3) == 0.0

    def test_ramp_coefficients_at_interior_knot(self):
        # frozen from the naive-recursion oracle: basis (1/6, 4/6, 1/6) at
        # indices 3..5 gives 3/6 + 16/6 + 5/6 = 4.0
        g = make_grid(5, 3, -1.0, 1.0)
        expected = float(np.arange(8.0) @ naive_basis_vector(0.2, 3, g.knots))
        assert expected == pytest.approx(4.0, abs=1e-12)
        assert spline_eval(np.arange(8.0), g, 0.2) == pytest.approx(expected, abs=1e-12)

    def test_length_mismatch(self):
        g = make_grid(5, 3, -1.0, 1.0)
        with pytest.raises(DimensionError):
            spline_eval(np.ones(7), g, 0.0)


class TestBackends:
    def test_backend_agreement(self, rng):
        try:
            from kanbench.kernels import _bspline_cy
        except ImportError:
            pytest.skip("compiled kernel not built")
        for G, k in [(1, 1), (5, 3), (12, 4)]:
            g = make_grid(G, k, -1.0, 1.0)
            xs = np.concatenate(
                [rng.uniform(-2.5, 2.5, 200), g.knots.copy(), [np.nan, np.inf]]
            )
            np.testing.assert_allclose(
                _bspline_cy.basis_matrix(g.knots, k, xs),
                kernels.numpy_backend.basis_matrix(g.knots, k, xs),
                atol=1e-14,
            )
            vc, dc = _bspline_cy.basis_and_derivative_matrix(g.knots, k, xs)
            vn, dn = kernels.numpy_backend.basis_and_derivative_matrix(g.knots, k, xs)
            np.testing.assert_allclose(vc, vn, atol=1e-14)
            np.testing.assert_allclose(dc, dn, atol=1e-14)

    def test_batched_shapes(self, rng):
        g = make_grid(5, 3, -1.0, 1.0)
        x = rng.normal(size=(4, 6))
        assert batched_basis(g, x).shape == (4, 6, 8)
        vals, ders = batched_basis_and_derivative(g, x)
        assert vals.shape == ders.shape == (4, 6, 8)

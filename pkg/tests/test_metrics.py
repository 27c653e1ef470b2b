import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kanbench.metrics import confusion, metrics_from_predictions, precision_recall_f1


class TestConfusion:
    def test_identity_diagonal(self):
        cm = confusion(np.array([0, 1, 2]), np.array([0, 1, 2]), 3)
        np.testing.assert_array_equal(cm.counts, np.eye(3, dtype=int))

    def test_hand_tally(self):
        cm = confusion(np.array([0, 1, 1, 1]), np.array([0, 0, 1, 1]), 2)
        np.testing.assert_array_equal(cm.counts, [[1, 1], [0, 2]])

    def test_empty(self):
        cm = confusion(np.array([], dtype=int), np.array([], dtype=int), 3)
        assert cm.total == 0
        np.testing.assert_array_equal(cm.counts, np.zeros((3, 3), dtype=int))

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            confusion(np.array([3]), np.array([0]), 3)

    def test_total_equals_samples(self, rng):
        preds = rng.integers(0, 4, 100)
        labels = rng.integers(0, 4, 100)
        assert confusion(preds, labels, 4).total == 100


class TestPrecisionRecallF1:
    def test_perfect_diagonal(self):
        m = metrics_from_predictions(np.array([0, 1, 2]), np.array([0, 1, 2]), 3)
        assert m.macro_precision == m.macro_recall == m.macro_f1 == 1.0
        assert m.weighted_f1 == 1.0

    def test_hand_case(self):
        m = metrics_from_predictions(
            np.array([0, 1, 1, 1]), np.array([0, 0, 1, 1]), 2
        )
        np.testing.assert_allclose(m.precision, [1.0, 2 / 3])
        np.testing.assert_allclose(m.recall, [0.5, 1.0])
        np.testing.assert_allclose(m.f1, [2 / 3, 0.8])
        assert m.macro_f1 == pytest.approx(0.7333, abs=1e-4)

    def test_degenerate_class_zero(self):
        # class 2 never predicted and never true -> all zeros by the 0/0 rule
        m = metrics_from_predictions(np.array([0, 1]), np.array([0, 1]), 3)
        assert m.precision[2] == m.recall[2] == m.f1[2] == 0.0
        assert m.degenerate_classes == 1

    def test_f1_is_harmonic_mean(self, rng):
        preds = rng.integers(0, 3, 300)
        labels = rng.integers(0, 3, 300)
        m = metrics_from_predictions(preds, labels, 3)
        for p, r, f in zip(m.precision, m.recall, m.f1):
            if p + r > 0:
                assert f == pytest.approx(2 * p * r / (p + r))
                assert f <= max(p, r) + 1e-12
            if p == r:
                assert f == pytest.approx(p)

    def test_values_in_unit_interval(self, rng):
        preds = rng.integers(0, 5, 50)
        labels = rng.integers(0, 5, 50)
        m = metrics_from_predictions(preds, labels, 5)
        for v in np.concatenate([m.precision, m.recall, m.f1]):
            assert 0.0 <= v <= 1.0
        assert 0.0 <= m.macro_f1 <= 1.0 and 0.0 <= m.weighted_f1 <= 1.0

    @given(perm_seed=st.integers(0, 2**31 - 1))
    @settings(max_examples=30, deadline=None)
    def test_relabeling_invariance(self, perm_seed):
        rng = np.random.default_rng(42)
        preds = rng.integers(0, 4, 200)
        labels = rng.integers(0, 4, 200)
        base = metrics_from_predictions(preds, labels, 4)
        perm = np.random.default_rng(perm_seed).permutation(4)
        permuted = metrics_from_predictions(perm[preds], perm[labels], 4)
        assert permuted.macro_f1 == pytest.approx(base.macro_f1)
        assert permuted.macro_precision == pytest.approx(base.macro_precision)
        assert permuted.weighted_f1 == pytest.approx(base.weighted_f1)

    def test_uniform_random_predictor_chance_level(self):
        rng = np.random.default_rng(0)
        n, c = 10_000, 4
        labels = np.repeat(np.arange(c), n // c)
        preds = rng.integers(0, c, n)
        m = metrics_from_predictions(preds, labels, c)
        assert abs(m.macro_f1 - 1 / c) < 0.1

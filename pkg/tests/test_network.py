import numpy as np
import pytest

from kanbench.errors import DimensionError
from kanbench.network import (
    KanLayerParams,
    MlpLayerParams,
    NetworkParams,
    NetworkSpec,
    cross_entropy_loss,
    efficient_kan_layer_forward,
    init_params,
    kan_layer_forward,
    load_checkpoint,
    loss_and_grads,
    mlp_layer_forward,
    network_forward,
    reg_penalty,
    save_checkpoint,
    silu,
)
from kanbench.splines import make_grid

from oracles import finite_difference_grads


def zeroed(net: NetworkParams) -> NetworkParams:
    for _, _, arr in net.tensor_items():
        arr[:] = 0.0
    return net


class TestInit:
    def test_same_seed_bit_identical(self):
        spec = NetworkSpec("kan_efficient", (5, 4, 3))
        a = init_params(spec, 17)
        b = init_params(spec, 17)
        for (_, _, x), (_, _, y) in zip(a.tensor_items(), b.tensor_items()):
            np.testing.assert_array_equal(x, y)

    def test_different_seeds_differ(self):
        spec = NetworkSpec("mlp", (5, 4, 3))
        a = init_params(spec, 0)
        b = init_params(spec, 1)
        assert not np.array_equal(a.layers[0].weights, b.layers[0].weights)

    def test_coeff_std_matches_target(self):
        # empirical std of the spline-coefficient initializer ~ 0.1/G
        spec = NetworkSpec("kan_efficient", (40, 40, 40), grid_size=5)
        net = init_params(spec, 0)
        draws = np.concatenate([l.coeffs.reshape(-1) for l in net.layers])
        assert draws.size >= 10_000
        assert abs(draws.std() - 0.1 / 5) / (0.1 / 5) < 0.2

    def test_kan_shapes_and_defaults(self):
        spec = NetworkSpec("kan_original", (3, 2), grid_size=4, spline_degree=2)
        net = init_params(spec, 0)
        layer = net.layers[0]
        assert layer.coeffs.shape == (2, 3, 6)
        assert np.all(layer.spline_scales == 1.0)
        assert np.all(layer.bias == 0.0)


class TestSilu:
    def test_zero(self):
        assert silu(0.0) == 0.0

    def test_hand_value(self):
        assert float(silu(1.0)) == pytest.approx(0.7311, abs=1e-4)

    def test_asymptote(self):
        assert float(silu(50.0)) == pytest.approx(50.0, abs=1e-9)

    def test_gradient_matches_fd(self, rng):
        xs = rng.normal(0, 3, 40)
        _, grad = silu(xs, grad=True)
        h = 1e-6
        fd = (silu(xs + h) - silu(xs - h)) / (2 * h)
        np.testing.assert_allclose(grad, fd, atol=1e-8)


class TestKanLayer:
    def _layer(self, d_in, d_out, grid_size=5, degree=3, seed=0):
        spec = NetworkSpec("kan_efficient", (d_in, d_out), grid_size=grid_size,
                           spline_degree=degree)
        return init_params(spec, seed).layers[0]

    def test_all_zero_params(self):
        layer = self._layer(3, 2)
        for arr in layer.tensors().values():
            arr[:] = 0.0
        out, phi = kan_layer_forward(layer, np.array([0.5, -0.5, 0.1]))
        assert np.all(out == 0.0) and np.all(phi == 0.0)

    def test_single_edge_silu_only(self):
        layer = self._layer(1, 1)
        layer.base_weights[:] = 1.0
        layer.spline_scales[:] = 0.0
        layer.coeffs[:] = 0.0
        layer.bias[:] = 0.0
        out, _ = kan_layer_forward(layer, np.array([1.0]))
        assert out[0] == pytest.approx(0.7311, abs=1e-4)

    def test_partition_of_unity_spline_branch(self):
        layer = self._layer(4, 2)
        layer.base_weights[:] = 0.0
        layer.spline_scales[:] = 1.0
        layer.coeffs[:] = 1.0
        layer.bias[:] = 0.25
        out, _ = kan_layer_forward(layer, np.array([0.1, -0.3, 0.8, 0.0]))
        np.testing.assert_allclose(out, 0.25 + 4.0, atol=1e-12)

    def test_batched_equals_single(self, rng):
        layer = self._layer(6, 4, seed=3)
        X = rng.normal(0, 0.8, (16, 6))
        batched = efficient_kan_layer_forward(layer, X)
        for i in range(16):
            single, _ = kan_layer_forward(layer, X[i])
            np.testing.assert_allclose(batched[i], single, atol=1e-10)

    def test_single_row_batch(self, rng):
        layer = self._layer(3, 2, seed=1)
        x = rng.normal(0, 1, 3)
        single, _ = kan_layer_forward(layer, x)
        np.testing.assert_allclose(
            efficient_kan_layer_forward(layer, x[None])[0], single, atol=1e-10
        )

    def test_dimension_errors(self):
        layer = self._layer(3, 2)
        with pytest.raises(DimensionError):
            kan_layer_forward(layer, np.zeros(4))
        with pytest.raises(DimensionError):
            efficient_kan_layer_forward(layer, np.zeros((0, 3)))


class TestMlpLayer:
    def test_identity_relu(self):
        p = MlpLayerParams(np.eye(2), np.zeros(2))
        np.testing.assert_array_equal(
            mlp_layer_forward(p, np.array([-1.0, 2.0])), [0.0, 2.0]
        )

    def test_bias_only(self):
        p = MlpLayerParams(np.zeros((1, 2)), np.array([3.0]))
        np.testing.assert_array_equal(mlp_layer_forward(p, np.zeros(2)), [3.0])

    def test_hand_matrix_multiply(self):
        w = np.array([[1.0, -2.0], [0.5, 0.25]])
        x = np.array([2.0, 3.0])
        p = MlpLayerParams(w, np.array([0.1, -0.2]))
        expected = np.maximum(w @ x + p.bias, 0.0)
        np.testing.assert_allclose(mlp_layer_forward(p, x), expected)
        np.testing.assert_allclose(
            mlp_layer_forward(p, x, hidden=False), w @ x + p.bias
        )


class TestNetworkForward:
    def test_zero_params_uniform_probabilities(self, rng):
        for variant in ("kan_efficient", "kan_original", "mlp"):
            spec = NetworkSpec(variant, (4, 3, 3))
            net = zeroed(init_params(spec, 0))
            trace = network_forward(net, rng.normal(0, 1, (5, 4)))
            np.testing.assert_allclose(trace.probabilities, 1 / 3, atol=1e-12)

    def test_softmax_monotone_in_inputs(self):
        spec = NetworkSpec("mlp", (3, 3))
        net = zeroed(init_params(spec, 0))
        net.layers[0].weights[:] = np.eye(3)
        x = np.array([0.1, 2.0, -1.0])
        trace = network_forward(net, x)
        assert np.argmax(trace.probabilities[0]) == 1

    def test_depth3_composition_oracle(self, rng):
        spec = NetworkSpec("kan_original", (2, 2, 2, 2))
        net = init_params(spec, 9)
        x = rng.normal(0, 0.5, 2)
        out = x
        for layer in net.layers:
            out, _ = kan_layer_forward(layer, out)
        trace = network_forward(net, x)
        np.testing.assert_allclose(trace.logits[0], out, atol=1e-10)

    def test_traced_and_folded_paths_agree(self, rng):
        for seed in range(50):
            spec = NetworkSpec("kan_efficient", (5, 4, 3), grid_size=4)
            net = init_params(spec, seed)
            for _, _, arr in net.tensor_items():
                arr += rng.normal(0, 0.3, arr.shape)
            X = rng.normal(0, 1.0, (7, 5))
            a = network_forward(net, X, keep_edges=True)
            b = network_forward(net, X, keep_edges=False)
            assert np.abs(a.logits - b.logits).max() < 1e-10

    def test_probability_rows_sum_to_one(self, rng):
        spec = NetworkSpec("kan_efficient", (6, 5, 4))
        net = init_params(spec, 2)
        trace = network_forward(net, rng.normal(0, 2, (11, 6)))
        np.testing.assert_allclose(trace.probabilities.sum(axis=1), 1.0, atol=1e-9)
        assert (trace.probabilities >= 0).all()

    def test_permutation_equivariance(self, rng):
        spec = NetworkSpec("kan_efficient", (4, 5, 3))
        net = init_params(spec, 4)
        x = rng.normal(0, 1, (6, 4))
        base = network_forward(net, x).logits

        perm = rng.permutation(5)
        permuted = net.copy()
        first, second = permuted.layers
        first.base_weights[:] = first.base_weights[perm]
        first.spline_scales[:] = first.spline_scales[perm]
        first.coeffs[:] = first.coeffs[perm]
        first.bias[:] = first.bias[perm]
        second.base_weights[:] = second.base_weights[:, perm]
        second.spline_scales[:] = second.spline_scales[:, perm]
        second.coeffs[:] = second.coeffs[:, perm]
        np.testing.assert_allclose(
            network_forward(permuted, x).logits, base, atol=1e-10
        )


class TestCrossEntropy:
    def test_uniform_three_classes(self):
        logits = np.zeros((4, 3))
        labels = np.array([0, 1, 2, 0])
        assert cross_entropy_loss(logits, labels) == pytest.approx(np.log(3.0))

    def test_certain_correct_prediction(self):
        logits = np.array([[800.0, 0.0]])
        assert cross_entropy_loss(logits, [0]) == 0.0

    def test_hand_logsumexp(self):
        assert cross_entropy_loss(np.array([[2.0, 0.0]]), [0]) == pytest.approx(
            0.1269, abs=1e-4
        )

    def test_non_negative(self, rng):
        logits = rng.normal(0, 5, (30, 4))
        labels = rng.integers(0, 4, 30)
        assert cross_entropy_loss(logits, labels) >= 0.0

    def test_label_out_of_range(self):
        with pytest.raises(ValueError):
            cross_entropy_loss(np.zeros((1, 3)), [3])


class TestRegPenalty:
    def test_zero_params_zero_penalty(self, rng):
        x = rng.normal(0, 1, (4, 3))
        for variant in ("kan_efficient", "kan_original", "mlp"):
            spec = NetworkSpec(variant, (3, 2))
            net = zeroed(init_params(spec, 0))
            trace = network_forward(net, x, keep_edges=True)
            assert reg_penalty(net, trace) == 0.0

    def test_mlp_sum_of_squares(self):
        spec = NetworkSpec("mlp", (2, 1))
        net = init_params(spec, 0)
        net.layers[0].weights[:] = np.array([[1.0, -2.0]])
        net.layers[0].bias[:] = 7.0  # biases excluded
        assert reg_penalty(net) == 5.0

    def test_efficient_mean_abs_coeffs(self):
        spec = NetworkSpec("kan_efficient", (3, 2))
        net = init_params(spec, 0)
        net.layers[0].coeffs[:] = 0.5
        assert reg_penalty(net) == pytest.approx(0.5)

    def test_original_single_edge_matches_silu(self):
        spec = NetworkSpec("kan_original", (1, 1))
        net = zeroed(init_params(spec, 0))
        net.layers[0].base_weights[:] = 1.0
        trace = network_forward(net, np.array([[1.0]]), keep_edges=True)
        assert reg_penalty(net, trace) == pytest.approx(float(silu(1.0)))


class TestBackward:
    def test_zero_gradient_when_correct_and_unregularized(self):
        spec = NetworkSpec("mlp", (2, 2))
        net = zeroed(init_params(spec, 0))
        net.layers[0].weights[:] = np.array([[400.0, 0.0], [0.0, 400.0]])
        x = np.array([[1.0, 0.0]])
        total, ce, pen, grads = loss_and_grads(net, x, [0], reg_factor=0.0)
        assert total == 0.0
        for g in grads:
            for arr in g.values():
                assert np.abs(arr).max() < 1e-12

    def test_mlp_hand_softmax_gradient(self):
        # single linear layer: d_logits = probs - onehot; d_W = d_logits^T x
        spec = NetworkSpec("mlp", (3, 2))
        net = zeroed(init_params(spec, 0))
        x = np.array([[1.0, -1.0, 2.0]])
        _, _, _, grads = loss_and_grads(net, x, [1], reg_factor=0.0)
        probs = np.array([0.5, 0.5])
        expected = np.outer(probs - np.array([0.0, 1.0]), x[0])
        np.testing.assert_allclose(grads[0]["weights"], expected, atol=1e-12)
        np.testing.assert_allclose(grads[0]["bias"], probs - [0.0, 1.0], atol=1e-12)

    @pytest.mark.parametrize(
        "variant,reg",
        [("kan_efficient", 0.0), ("kan_efficient", 0.1),
         ("kan_original", 0.1), ("mlp", 1.0)],
    )
    def test_gradients_match_finite_differences(self, variant, reg, rng):
        spec = NetworkSpec(variant, (4, 3, 2), grid_size=4)
        for seed in range(5):
            net = init_params(spec, seed)
            X = rng.normal(0, 0.8, (6, 4))
            y = rng.integers(0, 2, 6)
            _, _, _, grads = loss_and_grads(net, X, y, reg)
            fd = finite_difference_grads(
                lambda: loss_and_grads(net, X, y, reg)[0], net
            )
            for li in range(len(net.layers)):
                for name in grads[li]:
                    a, b = grads[li][name], fd[li][name]
                    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-6)
                    assert (np.abs(a - b) / denom).max() < 1e-4, (variant, li, name)


class TestCheckpoint:
    def test_roundtrip_bit_exact(self, tmp_path, rng):
        spec = NetworkSpec("kan_efficient", (5, 4, 3), grid_size=4)
        net = init_params(spec, 11)
        for _, _, arr in net.tensor_items():
            arr += rng.normal(0, 1, arr.shape)
        path = tmp_path / "ckpt.npz"
        save_checkpoint(net, path, seed=11, extras={"scaler_means": np.arange(5.0)})
        loaded, seed, extras = load_checkpoint(path)
        assert seed == 11
        assert loaded.spec == spec
        for (_, _, a), (_, _, b) in zip(net.tensor_items(), loaded.tensor_items()):
            np.testing.assert_array_equal(a, b)
        np.testing.assert_array_equal(extras["scaler_means"], np.arange(5.0))

    def test_mlp_roundtrip(self, tmp_path):
        spec = NetworkSpec("mlp", (3, 2))
        net = init_params(spec, 5)
        path = tmp_path / "m.npz"
        save_checkpoint(net, path)
        loaded, seed, extras = load_checkpoint(path)
        assert seed is None and extras == {}
        np.testing.assert_array_equal(loaded.layers[0].weights, net.layers[0].weights)

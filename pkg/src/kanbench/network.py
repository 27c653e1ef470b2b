"""Spline-edge (KAN) and MLP layers: forward evaluation, losses, exact gradients.

Both KAN variants share one parameterization per layer: a silu base branch
scaled by ``base_weights``, a spline branch with per-edge ``coeffs`` scaled by
``spline_scales``, and an output bias.  The "original" evaluation path
materializes every per-edge activation (needed for the activation-based L1
penalty and for interpretability); the "efficient" path folds the spline
branch into one matrix product over the flattened (input, basis) axis.  The
two paths are numerically interchangeable; they differ in computation order
and in which regularization penalty applies.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import expit, logsumexp

from .errors import DimensionError, NumericError
from .splines import (
    SplineGrid,
    batched_basis,
    batched_basis_and_derivative,
    make_grid,
)

VARIANTS = ("kan_original", "kan_efficient", "mlp")


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture description: variant, layer widths, and spline grid."""

    variant: str
    layer_sizes: tuple[int, ...]
    grid_size: int = 5
    spline_degree: int = 3
    grid_range: tuple[float, float] = (-1.0, 1.0)
    activation: str = "relu"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}, expected one of {VARIANTS}")
        if len(self.layer_sizes) < 2 or any(s < 1 for s in self.layer_sizes):
            raise ValueError(f"need >= 2 positive layer sizes, got {self.layer_sizes}")
        if self.activation != "relu":
            raise ValueError(f"unsupported hidden activation {self.activation!r}")
        object.__setattr__(self, "layer_sizes", tuple(int(s) for s in self.layer_sizes))

    @property
    def depth(self) -> int:
        """Number of trainable transformations."""
        return len(self.layer_sizes) - 1

    @property
    def is_kan(self) -> bool:
        return self.variant != "mlp"

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "layer_sizes": list(self.layer_sizes),
            "grid_size": self.grid_size,
            "spline_degree": self.spline_degree,
            "grid_range": list(self.grid_range),
            "activation": self.activation,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkSpec":
        return cls(
            variant=d["variant"],
            layer_sizes=tuple(d["layer_sizes"]),
            grid_size=int(d.get("grid_size", 5)),
            spline_degree=int(d.get("spline_degree", 3)),
            grid_range=tuple(d.get("grid_range", (-1.0, 1.0))),
            activation=d.get("activation", "relu"),
        )


@dataclass
class KanLayerParams:
    grid: SplineGrid
    base_weights: np.ndarray  # (d_out, d_in)
    spline_scales: np.ndarray  # (d_out, d_in)
    coeffs: np.ndarray  # (d_out, d_in, n_basis)
    bias: np.ndarray  # (d_out,)

    @property
    def d_in(self) -> int:
        return self.base_weights.shape[1]

    @property
    def d_out(self) -> int:
        return self.base_weights.shape[0]

    def tensors(self) -> dict[str, np.ndarray]:
        return {
            "base_weights": self.base_weights,
            "spline_scales": self.spline_scales,
            "coeffs": self.coeffs,
            "bias": self.bias,
        }


@dataclass
class MlpLayerParams:
    weights: np.ndarray  # (d_out, d_in)
    bias: np.ndarray  # (d_out,)

    @property
    def d_in(self) -> int:
        return self.weights.shape[1]

    @property
    def d_out(self) -> int:
        return self.weights.shape[0]

    def tensors(self) -> dict[str, np.ndarray]:
        return {"weights": self.weights, "bias": self.bias}


@dataclass
class NetworkParams:
    spec: NetworkSpec
    layers: list

    def tensor_items(self):
        """Yields (layer_index, tensor_name, array) over all learnable tensors."""
        for li, layer in enumerate(self.layers):
            for name, arr in layer.tensors().items():
                yield li, name, arr

    def copy(self) -> "NetworkParams":
        layers = []
        for layer in self.layers:
            if isinstance(layer, KanLayerParams):
                layers.append(
                    KanLayerParams(
                        layer.grid,
                        layer.base_weights.copy(),
                        layer.spline_scales.copy(),
                        layer.coeffs.copy(),
                        layer.bias.copy(),
                    )
                )
            else:
                layers.append(MlpLayerParams(layer.weights.copy(), layer.bias.copy()))
        return NetworkParams(self.spec, layers)


@dataclass
class ForwardTrace:
    """Intermediate state of one forward pass.

    ``layer_inputs[l]`` is the batch entering layer l (so for MLPs these are
    the post-nonlinearity vectors of the previous layer); ``edge_values[l]``
    holds the per-edge activations phi[b, q, p] for KAN layers when requested.
    """

    layer_inputs: list = field(default_factory=list)
    edge_values: list | None = None
    logits: np.ndarray | None = None
    probabilities: np.ndarray | None = None


def init_params(spec: NetworkSpec, seed: int) -> NetworkParams:
    """Seeded initialization: fan-based uniform weights, small spline noise.

    KAN layers: base_weights ~ U(+-sqrt(6/(d_in+d_out))), spline_scales = 1,
    coeffs ~ N(0, (0.1/G)^2), bias = 0.  MLP layers: the same uniform law for
    weights, bias = 0.
    """
    rng = np.random.default_rng(seed)
    layers = []
    for d_in, d_out in zip(spec.layer_sizes, spec.layer_sizes[1:]):
        bound = np.sqrt(6.0 / (d_in + d_out))
        if spec.is_kan:
            grid = make_grid(spec.grid_size, spec.spline_degree, *spec.grid_range)
            layers.append(
                KanLayerParams(
                    grid=grid,
                    base_weights=rng.uniform(-bound, bound, size=(d_out, d_in)),
                    spline_scales=np.ones((d_out, d_in)),
                    coeffs=rng.normal(
                        0.0, 0.1 / spec.grid_size, size=(d_out, d_in, grid.n_basis)
                    ),
                    bias=np.zeros(d_out),
                )
            )
        else:
            layers.append(
                MlpLayerParams(
                    weights=rng.uniform(-bound, bound, size=(d_out, d_in)),
                    bias=np.zeros(d_out),
                )
            )
    return NetworkParams(spec, layers)


def silu(x, grad: bool = False):
    """x * sigmoid(x); with grad=True also returns the derivative."""
    x = np.asarray(x, dtype=np.float64)
    sig = expit(x)
    s = x * sig
    if grad:
        return s, sig * (1.0 + x * (1.0 - sig))
    return s


def kan_layer_forward(p: KanLayerParams, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Single-sample spline-edge layer; returns (output, per-edge activations).

    out[q] = bias[q] + sum_p(base_weights[q,p]*silu(x[p])
                             + spline_scales[q,p]*sum_i coeffs[q,p,i]*B_i(x[p]))
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (p.d_in,):
        raise DimensionError(f"expected input of length {p.d_in}, got shape {x.shape}")
    bas = batched_basis(p.grid, x)  # (d_in, n_basis)
    sv = np.einsum("qpi,pi->qp", p.coeffs, bas)
    phi = p.base_weights * silu(x)[None, :] + p.spline_scales * sv
    return p.bias + phi.sum(axis=1), phi


def efficient_kan_layer_forward(p: KanLayerParams, X: np.ndarray) -> np.ndarray:
    """Batched spline-edge layer via one flattened matrix product.

    The basis matrix over (batch, input, basis) is computed once and
    contracted against spline_scales*coeffs; numerically identical to
    mapping kan_layer_forward over the rows.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[0] == 0:
        raise DimensionError("empty batch")
    if X.shape[1] != p.d_in:
        raise DimensionError(f"expected {p.d_in} inputs, got {X.shape[1]}")
    bas = batched_basis(p.grid, X)  # (B, d_in, n_basis)
    folded = (p.spline_scales[:, :, None] * p.coeffs).reshape(p.d_out, -1)
    return silu(X) @ p.base_weights.T + bas.reshape(X.shape[0], -1) @ folded.T + p.bias


def _kan_layer_forward_traced(p: KanLayerParams, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batched layer keeping phi[b, q, p] (original evaluation order)."""
    bas = batched_basis(p.grid, X)
    sv = np.einsum("bpi,qpi->bqp", bas, p.coeffs, optimize=True)
    phi = silu(X)[:, None, :] * p.base_weights[None] + sv * p.spline_scales[None]
    return p.bias + phi.sum(axis=2), phi


def mlp_layer_forward(p: MlpLayerParams, x: np.ndarray, hidden: bool = True) -> np.ndarray:
    """Affine map with a rectifier on hidden layers, identity on the output."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != p.d_in:
        raise DimensionError(f"expected {p.d_in} inputs, got {x.shape[-1]}")
    z = x @ p.weights.T + p.bias
    return np.maximum(z, 0.0) if hidden else z


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def network_forward(net: NetworkParams, X: np.ndarray, keep_edges: bool | None = None) -> ForwardTrace:
    """Compose all layers and convert logits to class probabilities.

    keep_edges defaults to True for KAN variants, recording phi[b, q, p] per
    layer (required for the activation penalty and interpretability); pass
    False to use the faster folded evaluation.
    """
    spec = net.spec
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != spec.layer_sizes[0]:
        raise DimensionError(
            f"expected {spec.layer_sizes[0]} inputs, got {X.shape[1]}"
        )
    if keep_edges is None:
        keep_edges = spec.is_kan
    trace = ForwardTrace(edge_values=[] if (keep_edges and spec.is_kan) else None)
    out = X
    n_layers = len(net.layers)
    for li, layer in enumerate(net.layers):
        trace.layer_inputs.append(out)
        if spec.is_kan:
            if trace.edge_values is not None:
                out, phi = _kan_layer_forward_traced(layer, out)
                trace.edge_values.append(phi)
            else:
                out = efficient_kan_layer_forward(layer, out)
        else:
            out = mlp_layer_forward(layer, out, hidden=li < n_layers - 1)
    trace.logits = out
    trace.probabilities = softmax(out)
    return trace


def cross_entropy_loss(logits: np.ndarray, labels: np.ndarray) -> float:
    """Mean -log p[label], evaluated in log-sum-exp form from the logits."""
    logits = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if labels.min() < 0 or labels.max() >= logits.shape[1]:
        raise ValueError(f"labels outside [0, {logits.shape[1]})")
    lse = logsumexp(logits, axis=1)
    picked = logits[np.arange(len(labels)), labels]
    return float(np.mean(lse - picked))


def reg_penalty(net: NetworkParams, trace: ForwardTrace | None = None) -> float:
    """Variant-specific penalty (the reg factor is applied by the caller).

    kan_original: batch-mean |phi| per edge, summed over all edges (needs a
    trace); kan_efficient: mean |coeffs| over every spline coefficient;
    mlp: sum of squared weights, biases excluded.
    """
    variant = net.spec.variant
    if variant == "kan_original":
        if trace is None or trace.edge_values is None:
            raise ValueError("activation penalty needs a forward trace with edge values")
        batch = trace.layer_inputs[0].shape[0]
        total = sum(np.abs(phi).sum() for phi in trace.edge_values)
        return float(total / batch)
    if variant == "kan_efficient":
        total = sum(np.abs(l.coeffs).sum() for l in net.layers)
        count = sum(l.coeffs.size for l in net.layers)
        return float(total / count)
    return float(sum((l.weights**2).sum() for l in net.layers))


def _zero_grads(net: NetworkParams) -> list[dict[str, np.ndarray]]:
    return [
        {name: np.zeros_like(arr) for name, arr in layer.tensors().items()}
        for layer in net.layers
    ]


def loss_and_grads(
    net: NetworkParams,
    X: np.ndarray,
    labels: np.ndarray,
    reg_factor: float = 0.0,
) -> tuple[float, float, float, list[dict[str, np.ndarray]]]:
    """Total loss (cross-entropy + reg_factor * penalty) and its exact gradients.

    Returns (total_loss, cross_entropy, penalty, per-layer gradient dicts).
    Raises NumericError naming the layer if a non-finite value appears.
    """
    spec = net.spec
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    B = X.shape[0]
    if labels.shape[0] != B:
        raise DimensionError(f"{B} rows but {labels.shape[0]} labels")

    activation_pen = spec.variant == "kan_original" and reg_factor != 0.0

    # forward, caching what the backward sweep needs
    cache = []
    out = X
    n_layers = len(net.layers)
    for li, layer in enumerate(net.layers):
        x_in = out
        if spec.is_kan:
            bas, dbas = batched_basis_and_derivative(layer.grid, x_in)
            s, s_grad = silu(x_in, grad=True)
            if spec.variant == "kan_original":
                sv = np.einsum("bpi,qpi->bqp", bas, layer.coeffs, optimize=True)
                phi = s[:, None, :] * layer.base_weights[None] + sv * layer.spline_scales[None]
                out = layer.bias + phi.sum(axis=2)
                cache.append(("kan_traced", x_in, s, s_grad, bas, dbas, sv, phi))
            else:
                folded = (layer.spline_scales[:, :, None] * layer.coeffs).reshape(layer.d_out, -1)
                out = s @ layer.base_weights.T + bas.reshape(B, -1) @ folded.T + layer.bias
                cache.append(("kan_folded", x_in, s, s_grad, bas, dbas, None, None))
        else:
            hidden = li < n_layers - 1
            z = x_in @ layer.weights.T + layer.bias
            out = np.maximum(z, 0.0) if hidden else z
            cache.append(("mlp", x_in, z, hidden))
        if not np.isfinite(out).all():
            raise NumericError(f"non-finite activations in layer {li}")

    logits = out
    ce = cross_entropy_loss(logits, labels)
    probs = softmax(logits)

    if spec.variant == "kan_original":
        edge_total = sum(np.abs(c[7]).sum() for c in cache)
        penalty = float(edge_total / B)
    elif spec.variant == "kan_efficient":
        penalty = reg_penalty(net)
    else:
        penalty = reg_penalty(net)
    total = ce + reg_factor * penalty

    grads = _zero_grads(net)
    onehot = np.zeros_like(probs)
    onehot[np.arange(B), labels] = 1.0
    d_out = (probs - onehot) / B

    pen_scale = reg_factor / B if activation_pen else 0.0
    n_coeffs = sum(l.coeffs.size for l in net.layers) if spec.variant == "kan_efficient" else 0

    for li in range(n_layers - 1, -1, -1):
        layer = net.layers[li]
        g = grads[li]
        entry = cache[li]
        if entry[0] == "kan_traced":
            _, x_in, s, s_grad, bas, dbas, sv, phi = entry
            d_phi = np.broadcast_to(d_out[:, :, None], phi.shape).copy()
            if pen_scale:
                d_phi += pen_scale * np.sign(phi)
            g["bias"][:] = d_out.sum(axis=0)
            g["base_weights"][:] = np.einsum("bqp,bp->qp", d_phi, s, optimize=True)
            g["spline_scales"][:] = np.einsum("bqp,bqp->qp", d_phi, sv, optimize=True)
            t1 = np.einsum("bqp,bpi->qpi", d_phi, bas, optimize=True)
            g["coeffs"][:] = t1 * layer.spline_scales[:, :, None]
            dsv = np.einsum("bpi,qpi->bqp", dbas, layer.coeffs, optimize=True)
            d_out = (
                np.einsum("bqp,qp->bp", d_phi, layer.base_weights, optimize=True) * s_grad
                + np.einsum("bqp,bqp->bp", d_phi, dsv * layer.spline_scales[None], optimize=True)
            )
        elif entry[0] == "kan_folded":
            _, x_in, s, s_grad, bas, dbas, _, _ = entry
            nb = layer.grid.n_basis
            g["bias"][:] = d_out.sum(axis=0)
            g["base_weights"][:] = d_out.T @ s
            t1 = (d_out.T @ bas.reshape(B, -1)).reshape(layer.d_out, layer.d_in, nb)
            g["spline_scales"][:] = (t1 * layer.coeffs).sum(axis=2)
            g["coeffs"][:] = t1 * layer.spline_scales[:, :, None]
            if spec.variant == "kan_efficient" and reg_factor != 0.0:
                g["coeffs"] += (reg_factor / n_coeffs) * np.sign(layer.coeffs)
            folded = (layer.spline_scales[:, :, None] * layer.coeffs).reshape(layer.d_out, -1)
            u = (d_out @ folded).reshape(B, layer.d_in, nb)
            d_out = (d_out @ layer.base_weights) * s_grad + (u * dbas).sum(axis=2)
        else:
            _, x_in, z, hidden = entry
            dz = d_out if not hidden else d_out * (z > 0.0)
            g["weights"][:] = dz.T @ x_in
            if spec.variant == "mlp" and reg_factor != 0.0:
                g["weights"] += reg_factor * 2.0 * layer.weights
            g["bias"][:] = dz.sum(axis=0)
            d_out = dz @ layer.weights

    return total, ce, penalty, grads


def save_checkpoint(
    net: NetworkParams,
    path: str | Path,
    seed: int | None = None,
    extras: dict[str, np.ndarray] | None = None,
) -> None:
    """Write spec, seed, and all tensors to an .npz file (bit-exact float64)."""
    meta = {"spec": net.spec.to_dict(), "seed": seed}
    arrays: dict[str, np.ndarray] = {"__meta__": np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)}
    for li, name, arr in net.tensor_items():
        arrays[f"layer{li}/{name}"] = arr
    for key, arr in (extras or {}).items():
        arrays[f"extra/{key}"] = np.asarray(arr)
    np.savez(path, **arrays)


def load_checkpoint(path: str | Path) -> tuple[NetworkParams, int | None, dict[str, np.ndarray]]:
    """Inverse of save_checkpoint; returns (params, seed, extras)."""
    with np.load(path) as data:
        meta = json.loads(bytes(data["__meta__"]).decode())
        spec = NetworkSpec.from_dict(meta["spec"])
        net = init_params(spec, 0)
        for li, layer in enumerate(net.layers):
            for name in layer.tensors():
                layer.tensors()[name][:] = data[f"layer{li}/{name}"]
        extras = {
            key[len("extra/"):]: data[key] for key in data.files if key.startswith("extra/")
        }
    return net, meta["seed"], extras

"""Edge-level interpretability for spline networks plus model-agnostic Shapley
attributions.

Edge importance is the mean absolute per-edge activation over a reference
batch; pruning keeps edges scoring at least a fraction of their layer's
maximum and then drops hidden nodes left without active in/out edges.  The
Shapley engine is a Monte-Carlo permutation estimator whose per-permutation
marginal contributions telescope exactly, so baseline + attributions always
reproduce the model output.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .network import NetworkParams, network_forward, silu
from .splines import batched_basis


@dataclass(frozen=True)
class EdgeImportanceMap:
    """Per layer, a (d_out, d_in) matrix of non-negative scores."""

    scores: list  # list of np.ndarray

    def layer_max(self, layer: int) -> float:
        return float(self.scores[layer].max())


@dataclass(frozen=True)
class PrunedGraph:
    edge_masks: list  # list of boolean (d_out, d_in) arrays
    retained_nodes: list  # list of boolean arrays, one per node layer


@dataclass(frozen=True)
class SplineCurve:
    layer: int
    out_node: int
    in_node: int
    xs: np.ndarray
    values: np.ndarray
    importance: float


@dataclass(frozen=True)
class ShapleyReport:
    sample_index: int
    target_class: int
    baseline_value: float
    attributions: np.ndarray
    model_output: float
    n_permutations: int


def edge_importance(net: NetworkParams, batch: np.ndarray) -> EdgeImportanceMap:
    """Mean |phi[q, p]| per edge over the reference batch."""
    batch = np.atleast_2d(np.asarray(batch, dtype=np.float64))
    if batch.shape[0] == 0:
        raise DimensionError("empty reference batch")
    trace = network_forward(net, batch, keep_edges=True)
    if trace.edge_values is None:
        raise ValueError("edge importance is defined for spline networks only")
    return EdgeImportanceMap([np.abs(phi).mean(axis=0) for phi in trace.edge_values])


def prune(scores: EdgeImportanceMap, threshold: float = 0.01) -> PrunedGraph:
    """Keep edges with score >= threshold * (layer max); drop dead hidden nodes.

    A hidden node survives only with at least one active incoming and one
    active outgoing edge; dropping a node deactivates its edges, so the rule
    is iterated to a fixed point.  Input and output nodes always survive.
    """
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    masks = []
    for layer_scores in scores.scores:
        cutoff = threshold * layer_scores.max()
        masks.append(layer_scores >= cutoff)

    n_layers = len(masks)
    node_alive = [np.ones(masks[0].shape[1], dtype=bool)]
    node_alive += [np.ones(m.shape[0], dtype=bool) for m in masks]

    changed = True
    while changed:
        changed = False
        for li, mask in enumerate(masks):
            pruned = mask & node_alive[li][None, :] & node_alive[li + 1][:, None]
            if (pruned != mask).any():
                masks[li] = pruned
                changed = True
        for nl in range(1, n_layers):  # hidden node layers only
            incoming = masks[nl - 1].any(axis=1)
            outgoing = masks[nl].any(axis=0)
            alive = incoming & outgoing
            if (alive != node_alive[nl]).any():
                node_alive[nl] = alive
                changed = True
    return PrunedGraph(masks, node_alive)


def sample_spline_curves(
    net: NetworkParams,
    n_points: int = 101,
    scores: EdgeImportanceMap | None = None,
    margin: float = 0.5,
) -> list[SplineCurve]:
    """Sample every edge's activation phi(x) on a uniform x range.

    The range spans the grid limits widened by ``margin`` on each side, so
    the extension-knot behavior outside the training range is visible.
    """
    if n_points < 2:
        raise ValueError("need at least two sample points")
    curves = []
    for li, layer in enumerate(net.layers):
        if not hasattr(layer, "grid"):
            raise ValueError("spline curves are defined for spline networks only")
        grid = layer.grid
        xs = np.linspace(grid.range_lo - margin, grid.range_hi + margin, n_points)
        bas = batched_basis(grid, xs)  # (n_points, n_basis)
        base = silu(xs)
        spline_vals = np.einsum("qpi,xi->qpx", layer.coeffs, bas, optimize=True)
        for q in range(layer.d_out):
            for p in range(layer.d_in):
                vals = (
                    layer.base_weights[q, p] * base
                    + layer.spline_scales[q, p] * spline_vals[q, p]
                )
                imp = float(scores.scores[li][q, p]) if scores is not None else 0.0
                curves.append(SplineCurve(li, q, p, xs, vals, imp))
    return curves


def _permutation_attributions(
    predict_fn,
    sample: np.ndarray,
    baseline: np.ndarray,
    n_permutations: int,
    seed: int,
) -> tuple[float, np.ndarray, float]:
    """Core estimator; predict_fn maps an (n, T) batch to n scalar outputs."""
    t = len(sample)
    # keep each chunk's (m, t+1, t) input tensor around 32 MB
    chunk = max(1, min(512, int(4e6 / ((t + 1) * t))))
    rng = np.random.default_rng(seed)
    phi = np.zeros(t)
    f_baseline = float(predict_fn(baseline[None, :])[0])
    f_sample = float(predict_fn(sample[None, :])[0])

    done = 0
    while done < n_permutations:
        m = min(chunk, n_permutations - done)
        perms = np.stack([rng.permutation(t) for _ in range(m)])  # (m, t)
        # chain[j] switches the first j features (in permutation order) from
        # baseline to sample; endpoints are shared across permutations
        switched = np.zeros((m, t + 1, t), dtype=bool)
        rows = np.repeat(np.arange(m), t)
        steps = np.tile(np.arange(1, t + 1), m)
        switched[rows, steps, perms.reshape(-1)] = True
        switched = np.cumsum(switched, axis=1).astype(bool)
        inputs = np.where(switched, sample[None, None, :], baseline[None, None, :])
        outputs = np.asarray(predict_fn(inputs.reshape(-1, t))).reshape(m, t + 1)
        marginals = np.diff(outputs, axis=1)  # (m, t) in permutation order
        np.add.at(phi, perms.reshape(-1), marginals.reshape(-1))
        done += m

    phi /= n_permutations
    return f_baseline, phi, f_sample


def shapley_attributions(
    net_or_fn,
    sample: np.ndarray,
    baseline: np.ndarray,
    n_permutations: int = 1000,
    seed: int = 0,
    target_class: int = 0,
    sample_index: int = 0,
) -> ShapleyReport:
    """Monte-Carlo Shapley attribution of one model output.

    Accepts either trained NetworkParams (the attributed output is the
    post-softmax probability of ``target_class``) or any callable mapping an
    (n, T) batch to n scalars.  Each sampled feature permutation is walked
    from the baseline to the sample, crediting every feature its marginal
    output change; marginals telescope, so
    baseline_value + sum(attributions) == model output exactly (up to
    accumulation error).
    """
    if n_permutations < 1:
        raise ValueError("need at least one permutation")
    sample = np.asarray(sample, dtype=np.float64).reshape(-1)
    baseline = np.asarray(baseline, dtype=np.float64).reshape(-1)
    if sample.shape != baseline.shape:
        raise DimensionError("sample and baseline must have equal lengths")

    if isinstance(net_or_fn, NetworkParams):
        net = net_or_fn

        def predict_fn(batch):
            trace = network_forward(net, batch, keep_edges=False)
            return trace.probabilities[:, target_class]

    else:
        predict_fn = net_or_fn

    f0, phi, f_full = _permutation_attributions(
        predict_fn, sample, baseline, n_permutations, seed
    )
    return ShapleyReport(
        sample_index=sample_index,
        target_class=target_class,
        baseline_value=f0,
        attributions=phi,
        model_output=f_full,
        n_permutations=n_permutations,
    )


def export_graph_json(
    net: NetworkParams,
    scores: EdgeImportanceMap,
    pruned: PrunedGraph,
    curves: list[SplineCurve],
) -> str:
    """Plot-ready JSON: nodes, active scored edges, per-edge curve samples."""
    layers = []
    for li, mask in enumerate(pruned.edge_masks):
        edges = []
        layer_scores = scores.scores[li]
        for q in range(mask.shape[0]):
            for p in range(mask.shape[1]):
                if mask[q, p]:
                    edges.append(
                        {"out": q, "in": p, "score": float(layer_scores[q, p])}
                    )
        layers.append(edges)
    curve_records = [
        {
            "layer": c.layer,
            "out": c.out_node,
            "in": c.in_node,
            "importance": c.importance,
            "x": [float(v) for v in c.xs],
            "phi": [float(v) for v in c.values],
        }
        for c in curves
    ]
    doc = {
        "nodes": [
            {"layer": nl, "retained": [bool(b) for b in alive]}
            for nl, alive in enumerate(pruned.retained_nodes)
        ],
        "edges": layers,
        "curves": curve_records,
    }
    return json.dumps(doc, indent=2)


SHAP_CSV_HEADER = "sample,class,feature,feature_value,phi"


def shap_reports_to_csv(
    reports: list[ShapleyReport], samples: np.ndarray
) -> str:
    """Long-format rows `sample,class,feature,feature_value,phi`."""
    lines = [SHAP_CSV_HEADER]
    for rep in reports:
        row = samples[rep.sample_index]
        for f_idx, phi_val in enumerate(rep.attributions):
            lines.append(
                f"{rep.sample_index},{rep.target_class},{f_idx},"
                f"{row[f_idx]!r},{phi_val!r}"
            )
    return "\n".join(lines) + "\n"

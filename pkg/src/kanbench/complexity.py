"""Closed-form parameter counts, forward-pass FLOPs, and energy estimates.

Counts are linear in the input length and class count, so evaluating them at
dataset-averaged (fractional) sizes reproduces dataset-averaged counts.  The
spline-network bracket term 9*k*(G + 1.5*k) + 2*G - 2.5*k + 3 prices one
edge's basis recursion plus the weighted combination; ``nl_silu`` is the
FLOP price charged per silu evaluation (default 20).  The published
per-layer parameter accounting charges G + k + 3 values per edge, one more
than the G + k + 2 tensor entries stored here (coeffs + base weight +
spline scale); reports carry both figures.
"""

from dataclasses import dataclass
from typing import Sequence

from .network import NetworkSpec

DEFAULT_NL_SILU = 20.0
DEFAULT_GFLOPS_PER_WATT = 65.0  # A100 float32 efficiency figure


@dataclass(frozen=True)
class ComplexityReport:
    learnable_parameters: int
    stored_parameters: int
    forward_flops: float
    tec_joules: float
    nl_silu: float
    gflops_per_watt: float


def kan_param_count(layer_sizes: Sequence[float], grid_size: int, degree: int) -> int:
    """Published per-layer count (d_in*d_out)*(G+k+3) + d_out, summed."""
    total = 0.0
    for d_in, d_out in zip(layer_sizes, layer_sizes[1:]):
        total += d_in * d_out * (grid_size + degree + 3) + d_out
    return round(total)


def kan_stored_param_count(layer_sizes: Sequence[float], grid_size: int, degree: int) -> int:
    """Tensor entries actually stored: (d_in*d_out)*(G+k+2) + d_out per layer."""
    total = 0.0
    for d_in, d_out in zip(layer_sizes, layer_sizes[1:]):
        total += d_in * d_out * (grid_size + degree + 2) + d_out
    return round(total)


def mlp_param_count(layer_sizes: Sequence[float]) -> int:
    """(d_in * d_out) + d_out per layer, summed."""
    total = 0.0
    for d_in, d_out in zip(layer_sizes, layer_sizes[1:]):
        total += d_in * d_out + d_out
    return round(total)


def _bracket(grid_size: float, degree: float) -> float:
    return 9.0 * degree * (grid_size + 1.5 * degree) + 2.0 * grid_size - 2.5 * degree + 3.0


def kan_layer_flops(
    d_in: float,
    d_out: float,
    grid_size: int,
    degree: int,
    nl_silu: float = DEFAULT_NL_SILU,
) -> float:
    """One spline layer: nonlinearity on each input plus the per-edge bracket."""
    return nl_silu * d_in + d_in * d_out * _bracket(grid_size, degree)


def kan_forward_flops(
    series_length: float,
    width: float,
    depth: int,
    class_count: float,
    grid_size: int,
    degree: int,
    nl_silu: float = DEFAULT_NL_SILU,
) -> float:
    """Forward-pass FLOPs of a uniform-width spline network.

    Structure for depth >= 2: an input layer of width ``width``, depth-2
    width-to-width transitions, and an output layer to ``class_count``.  For
    depth < 2 the per-layer accounting is summed directly.
    """
    br = _bracket(grid_size, degree)
    if depth < 2:
        return nl_silu * series_length + series_length * class_count * br
    return (
        nl_silu * series_length
        + series_length * width * br
        + (depth - 2) * (nl_silu * width + width * width * br)
        + nl_silu * width
        + width * class_count * br
    )


def mlp_forward_flops(
    series_length: float, width: float, hidden_layers: int, class_count: float
) -> float:
    """(M + 2MT) + (K-1)(M + 2M^2) + (M + 2MC) for K hidden layers of width M."""
    if hidden_layers < 1:
        raise ValueError("accounting assumes at least one hidden layer")
    return (
        (width + 2.0 * width * series_length)
        + (hidden_layers - 1) * (width + 2.0 * width * width)
        + (width + 2.0 * width * class_count)
    )


def network_flops(spec: NetworkSpec, nl_silu: float = DEFAULT_NL_SILU) -> float:
    """Per-layer FLOP total for an arbitrary (possibly non-uniform) spec."""
    sizes = spec.layer_sizes
    if spec.is_kan:
        return sum(
            kan_layer_flops(d_in, d_out, spec.grid_size, spec.spline_degree, nl_silu)
            for d_in, d_out in zip(sizes, sizes[1:])
        )
    # the published MLP accounting charges the penultimate width, not the
    # class count, as the output layer's additive term
    total = 0.0
    pairs = list(zip(sizes, sizes[1:]))
    for d_in, d_out in pairs[:-1]:
        total += d_out + 2.0 * d_in * d_out
    d_in, d_out = pairs[-1]
    total += d_in + 2.0 * d_in * d_out
    return total


def tec(flops: float, gflops_per_watt: float = DEFAULT_GFLOPS_PER_WATT) -> float:
    """Theoretical energy per prediction in joules: FLOPs / (GFLOPS/W * 1e9)."""
    if flops < 0 or gflops_per_watt <= 0:
        raise ValueError("flops must be non-negative and gflops_per_watt positive")
    return flops / (gflops_per_watt * 1e9)


def complexity_report(
    spec: NetworkSpec,
    nl_silu: float = DEFAULT_NL_SILU,
    gflops_per_watt: float = DEFAULT_GFLOPS_PER_WATT,
) -> ComplexityReport:
    sizes = spec.layer_sizes
    if spec.is_kan:
        learnable = kan_param_count(sizes, spec.grid_size, spec.spline_degree)
        stored = kan_stored_param_count(sizes, spec.grid_size, spec.spline_degree)
    else:
        learnable = stored = mlp_param_count(sizes)
    flops = network_flops(spec, nl_silu)
    return ComplexityReport(
        learnable_parameters=learnable,
        stored_parameters=stored,
        forward_flops=flops,
        tec_joules=tec(flops, gflops_per_watt),
        nl_silu=nl_silu,
        gflops_per_watt=gflops_per_watt,
    )


def report_csv_row(model: str, config: str, report: ComplexityReport) -> str:
    return (
        f"{model},{config},{report.learnable_parameters},{report.stored_parameters},"
        f"{report.forward_flops!r},{report.tec_joules!r},{report.nl_silu!r},"
        f"{report.gflops_per_watt!r}"
    )


COMPLEXITY_CSV_HEADER = (
    "model,config,params_eq,params_stored,flops,tec_joules,nl_silu,gflops_per_watt"
)

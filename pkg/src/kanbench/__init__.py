"""Spline-edge (Kolmogorov-Arnold) network engine and benchmark harness for
univariate time-series classification."""

from .data import Dataset, ScalerParams, SplitSpec
from .kernels import active_backend
from .network import NetworkParams, NetworkSpec
from .splines import SplineGrid, make_grid
from .training import TrainConfig

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "ScalerParams",
    "SplitSpec",
    "SplineGrid",
    "make_grid",
    "NetworkParams",
    "NetworkSpec",
    "TrainConfig",
    "active_backend",
    "__version__",
]

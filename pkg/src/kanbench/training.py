"""Adam optimization, the epoch/batch training loop, and test evaluation.

A training run is a pure function of (architecture, datasets, config): the
per-epoch shuffle derives from (seed, epoch), so repeated runs produce the
same trajectory, and distinct seeds stay independent.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import NumericError
from .metrics import ClassificationMetrics, metrics_from_predictions
from .network import (
    NetworkParams,
    NetworkSpec,
    cross_entropy_loss,
    init_params,
    loss_and_grads,
    network_forward,
)

SELECTION_RULES = ("best_val_f1", "final")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.001
    epochs: int = 500
    batch_size: int = 16
    seed: int = 0
    reg_factor: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    selection: str = "best_val_f1"

    def __post_init__(self):
        # lr = 0 is legal as a degenerate no-op configuration
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise ValueError("Adam betas must lie in (0, 1)")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.selection not in SELECTION_RULES:
            raise ValueError(f"selection must be one of {SELECTION_RULES}")


def default_reg_factor(variant: str) -> float:
    """Penalty weight per variant: 0.1 for both KAN paths, 1.0 for the MLP."""
    return 1.0 if variant == "mlp" else 0.1


@dataclass
class AdamState:
    m: list[dict[str, np.ndarray]]
    v: list[dict[str, np.ndarray]]
    step: int = 0

    @classmethod
    def for_params(cls, net: NetworkParams) -> "AdamState":
        zeros = lambda: [
            {name: np.zeros_like(arr) for name, arr in layer.tensors().items()}
            for layer in net.layers
        ]
        return cls(m=zeros(), v=zeros())


@dataclass(frozen=True)
class EpochLog:
    epoch: int
    train_loss: float
    val_loss: float
    val_f1: float
    seconds: float


@dataclass
class TrainResult:
    final_params: NetworkParams
    best_params: NetworkParams
    logs: list[EpochLog]
    diverged: bool = False
    best_epoch: int = -1

    def selected_params(self, selection: str) -> NetworkParams:
        return self.final_params if selection == "final" else self.best_params


def adam_step(
    net: NetworkParams,
    grads: list[dict[str, np.ndarray]],
    state: AdamState,
    cfg: TrainConfig,
) -> tuple[NetworkParams, AdamState]:
    """Bias-corrected Adam update, applied in place; returns (net, state)."""
    state.step += 1
    t = state.step
    c1 = 1.0 - cfg.beta1**t
    c2 = 1.0 - cfg.beta2**t
    for li, layer in enumerate(net.layers):
        for name, arr in layer.tensors().items():
            g = grads[li][name]
            if not np.isfinite(g).all():
                raise NumericError(f"non-finite gradient for layer {li} tensor {name}")
            m = state.m[li][name]
            v = state.v[li][name]
            m *= cfg.beta1
            m += (1.0 - cfg.beta1) * g
            v *= cfg.beta2
            v += (1.0 - cfg.beta2) * g * g
            arr -= cfg.learning_rate * (m / c1) / (np.sqrt(v / c2) + cfg.epsilon)
    return net, state


def _validation_scores(net: NetworkParams, val: Dataset) -> tuple[float, float]:
    trace = network_forward(net, val.series, keep_edges=False)
    loss = cross_entropy_loss(trace.logits, val.labels)
    preds = np.argmax(trace.probabilities, axis=1)
    m = metrics_from_predictions(preds, val.labels, val.class_count)
    return loss, m.macro_f1


def train(
    spec: NetworkSpec,
    train_ds: Dataset,
    val_ds: Dataset,
    cfg: TrainConfig,
) -> TrainResult:
    """Run the full epoch loop; snapshots the best-validation-F1 parameters.

    Every epoch shuffles the training rows with a generator seeded from
    (cfg.seed, epoch) and consumes them in mini-batches (the last batch may
    be short).  A non-finite loss or gradient aborts the run and flags it as
    diverged, returning the logs accumulated so far.
    """
    net = init_params(spec, cfg.seed)
    state = AdamState.for_params(net)
    logs: list[EpochLog] = []
    best = net.copy()
    best_f1 = -1.0
    best_epoch = -1
    n = train_ds.n_rows

    for epoch in range(cfg.epochs):
        tic = time.perf_counter()
        order = np.random.default_rng([cfg.seed, epoch]).permutation(n)
        loss_sum = 0.0
        try:
            for start in range(0, n, cfg.batch_size):
                idx = order[start : start + cfg.batch_size]
                total, _, _, grads = loss_and_grads(
                    net, train_ds.series[idx], train_ds.labels[idx], cfg.reg_factor
                )
                if not np.isfinite(total):
                    raise NumericError(f"non-finite loss at epoch {epoch}")
                loss_sum += total * len(idx)
                adam_step(net, grads, state, cfg)
        except NumericError:
            return TrainResult(net, best, logs, diverged=True, best_epoch=best_epoch)
        seconds = time.perf_counter() - tic

        val_loss, val_f1 = _validation_scores(net, val_ds)
        logs.append(EpochLog(epoch, loss_sum / n, val_loss, val_f1, seconds))
        if val_f1 > best_f1:
            best_f1 = val_f1
            best_epoch = epoch
            best = net.copy()

    return TrainResult(net, best, logs, diverged=False, best_epoch=best_epoch)


def evaluate(net: NetworkParams, test: Dataset) -> ClassificationMetrics:
    """Argmax predictions (ties -> lowest class index) scored on a test set."""
    trace = network_forward(net, test.series, keep_edges=False)
    preds = np.argmax(trace.probabilities, axis=1)
    return metrics_from_predictions(preds, test.labels, test.class_count)


def epoch_logs_to_csv(logs: list[EpochLog]) -> str:
    lines = ["epoch,train_loss,val_loss,val_f1,seconds"]
    for log in logs:
        lines.append(
            f"{log.epoch},{log.train_loss!r},{log.val_loss!r},{log.val_f1!r},{log.seconds!r}"
        )
    return "\n".join(lines) + "\n"

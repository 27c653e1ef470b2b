"""Experiment harness: single runs, hyperparameter sweeps, aggregation, reports.

A run record captures one (dataset, configuration, seed) training; sweeps
enumerate a single varying axis (grid size, depth, or width) against the
learning-rate and seed lists.  Aggregation averages over seeds first, then
reports mean/stddev across datasets, plus per-dataset means for scatter
plots and tie-averaged ranks for critical-difference summaries.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from .complexity import ComplexityReport, complexity_report
from .data import Dataset, SplitSpec, apply_scaler, fit_scaler, load_ucr_pair, split_indices
from .metrics import ClassificationMetrics
from .network import NetworkParams, NetworkSpec
from .training import TrainConfig, TrainResult, default_reg_factor, evaluate, train

SWEEP_FAMILIES = ("grid", "depth", "width")

GRID_VALUES = (3, 5, 10, 15, 20)
DEPTH_VALUES = tuple(range(2, 11))
WIDTH_VALUES = tuple(range(5, 105, 5))
LEARNING_RATES = (0.0001, 0.001, 0.01, 0.1, 1.0)
SEEDS = (0, 1, 2, 5, 42)
FIXED_GRID = 5
FIXED_DEPTH = 3
FIXED_WIDTH = 40


def reference_spec(variant: str, series_length: int, class_count: int, depth: int = 3) -> NetworkSpec:
    """Reference architectures: KAN [T,40,...,C] G=5, MLP [T,300,...,C]."""
    if variant == "mlp":
        hidden = [300] * depth
        return NetworkSpec("mlp", (series_length, *hidden, class_count))
    hidden = [40] * (depth - 1)
    return NetworkSpec(variant, (series_length, *hidden, class_count), grid_size=5)


def best_preset(variant: str, series_length: int, class_count: int) -> tuple[NetworkSpec, float]:
    """Best-found configurations: KAN [T,40,C] G=5 @ lr 0.1; efficient KAN
    [T,40,40,C] G=3 @ lr 0.001."""
    if variant == "kan_original":
        return NetworkSpec(variant, (series_length, 40, class_count), grid_size=5), 0.1
    if variant == "kan_efficient":
        return (
            NetworkSpec(variant, (series_length, 40, 40, class_count), grid_size=3),
            0.001,
        )
    return reference_spec("mlp", series_length, class_count), 0.001


def load_manifest() -> list[str]:
    """Names of the complete (no missing values) archive datasets."""
    text = resources.files("kanbench").joinpath("manifests/ucr117.txt").read_text()
    return [line.strip() for line in text.splitlines() if line.strip()]


@dataclass(frozen=True)
class RunKey:
    dataset: str
    variant: str
    config: str  # canonical hyperparameter string
    seed: int


@dataclass
class RunRecord:
    dataset: str
    variant: str
    config: str
    seed: int
    learning_rate: float
    axis_value: float | None
    metrics: ClassificationMetrics | None
    final_metrics: ClassificationMetrics | None
    complexity: ComplexityReport | None
    train_seconds: float
    diverged: bool
    error: str = ""

    def key(self) -> RunKey:
        return RunKey(self.dataset, self.variant, self.config, self.seed)


def config_string(spec: NetworkSpec, cfg: TrainConfig) -> str:
    hidden = ",".join(str(s) for s in spec.layer_sizes[1:-1])
    parts = [f"hidden=[{hidden}]"]
    if spec.is_kan:
        parts.append(f"G={spec.grid_size}")
    parts.append(f"lr={cfg.learning_rate:g}")
    parts.append(f"reg={cfg.reg_factor:g}")
    return " ".join(parts)


def prepare_datasets(
    dataset_dir: str | Path,
    split: SplitSpec,
    stratify: bool = True,
) -> tuple[Dataset, Dataset, Dataset, np.ndarray, np.ndarray]:
    """Parse, split, and standardize one archive-style dataset directory.

    The scaler is fit on the training part only and applied to all three
    parts; returns (train, validation, test, means, stds).
    """
    full_train, test = load_ucr_pair(dataset_dir)
    tr_idx, va_idx = split_indices(full_train.labels, full_train.class_count, split, stratify)
    train_part = full_train.subset(tr_idx)
    val_part = full_train.subset(va_idx)
    scaler = fit_scaler(train_part)
    return (
        apply_scaler(train_part, scaler),
        apply_scaler(val_part, scaler),
        apply_scaler(test, scaler),
        scaler.means,
        scaler.stds,
    )


def run_single(
    dataset_dir: str | Path,
    spec_template: NetworkSpec | None,
    cfg: TrainConfig,
    variant: str | None = None,
    stratify: bool = True,
    axis_value: float | None = None,
) -> tuple[RunRecord, TrainResult, NetworkParams, NetworkSpec]:
    """Full pipeline: parse, split 80:20, scale, train, evaluate, account.

    ``spec_template`` may use placeholder input/output sizes (0); they are
    replaced by the dataset's length and class count.
    """
    dataset_dir = Path(dataset_dir)
    train_ds, val_ds, test_ds, _, _ = prepare_datasets(
        dataset_dir, SplitSpec(0.8, cfg.seed), stratify
    )
    t, c = train_ds.length, train_ds.class_count
    if spec_template is None:
        spec = reference_spec(variant or "kan_efficient", t, c)
    else:
        sizes = list(spec_template.layer_sizes)
        sizes[0] = sizes[0] or t
        sizes[-1] = sizes[-1] or c
        spec = NetworkSpec(
            spec_template.variant,
            tuple(sizes),
            grid_size=spec_template.grid_size,
            spline_degree=spec_template.spline_degree,
            grid_range=spec_template.grid_range,
            activation=spec_template.activation,
        )

    result = train(spec, train_ds, val_ds, cfg)
    selected = result.selected_params(cfg.selection)
    metrics = evaluate(selected, test_ds)
    final_metrics = evaluate(result.final_params, test_ds)
    record = RunRecord(
        dataset=dataset_dir.name,
        variant=spec.variant,
        config=config_string(spec, cfg),
        seed=cfg.seed,
        learning_rate=cfg.learning_rate,
        axis_value=axis_value,
        metrics=metrics,
        final_metrics=final_metrics,
        complexity=complexity_report(spec),
        train_seconds=float(sum(log.seconds for log in result.logs)),
        diverged=result.diverged,
    )
    return record, result, selected, spec


@dataclass(frozen=True)
class SweepPlan:
    """One-axis hyperparameter sweep over datasets, learning rates, seeds."""

    family: str
    datasets: tuple[str, ...]
    variants: tuple[str, ...] = ("kan_original", "kan_efficient")
    axis_values: tuple[float, ...] = ()
    learning_rates: tuple[float, ...] = LEARNING_RATES
    seeds: tuple[int, ...] = SEEDS
    fixed_grid: int = FIXED_GRID
    fixed_depth: int = FIXED_DEPTH
    fixed_width: int = FIXED_WIDTH
    epochs: int = 500
    batch_size: int = 16
    reg_factor: float | None = None  # None -> per-variant default
    stratify: bool = True

    def __post_init__(self):
        if self.family not in SWEEP_FAMILIES:
            raise ValueError(f"family must be one of {SWEEP_FAMILIES}")
        if not self.axis_values:
            default = {"grid": GRID_VALUES, "depth": DEPTH_VALUES, "width": WIDTH_VALUES}
            object.__setattr__(self, "family", self.family)
            object.__setattr__(self, "axis_values", tuple(default[self.family]))

    def spec_for(self, variant: str, axis_value: float) -> NetworkSpec:
        """Materialize the architecture for one axis point (sizes use 0
        placeholders for the dataset-dependent input/output widths)."""
        grid = self.fixed_grid
        depth = self.fixed_depth
        width = self.fixed_width
        if self.family == "grid":
            grid = int(axis_value)
        elif self.family == "depth":
            depth = int(axis_value)
        else:
            width = int(axis_value)
        hidden = [width] * (depth - 1)
        return NetworkSpec(variant, (0, *hidden, 0), grid_size=grid)

    def jobs(self) -> list[dict]:
        out = []
        for ds in self.datasets:
            for variant in self.variants:
                for axis in self.axis_values:
                    for lr in self.learning_rates:
                        for seed in self.seeds:
                            out.append(
                                {
                                    "dataset_dir": ds,
                                    "variant": variant,
                                    "axis_value": axis,
                                    "learning_rate": lr,
                                    "seed": seed,
                                }
                            )
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "SweepPlan":
        return cls(
            family=d["family"],
            datasets=tuple(d["datasets"]),
            variants=tuple(d.get("variants", ("kan_original", "kan_efficient"))),
            axis_values=tuple(d.get("axis_values", ())),
            learning_rates=tuple(d.get("learning_rates", LEARNING_RATES)),
            seeds=tuple(d.get("seeds", SEEDS)),
            fixed_grid=int(d.get("fixed_grid", FIXED_GRID)),
            fixed_depth=int(d.get("fixed_depth", FIXED_DEPTH)),
            fixed_width=int(d.get("fixed_width", FIXED_WIDTH)),
            epochs=int(d.get("epochs", 500)),
            batch_size=int(d.get("batch_size", 16)),
            reg_factor=d.get("reg_factor"),
            stratify=bool(d.get("stratify", True)),
        )


def _run_sweep_job(args: tuple[SweepPlan, dict]) -> RunRecord:
    plan, job = args
    variant = job["variant"]
    reg = plan.reg_factor if plan.reg_factor is not None else default_reg_factor(variant)
    cfg = TrainConfig(
        learning_rate=job["learning_rate"],
        epochs=plan.epochs,
        batch_size=plan.batch_size,
        seed=job["seed"],
        reg_factor=reg,
    )
    spec = plan.spec_for(variant, job["axis_value"])
    try:
        record, _, _, _ = run_single(
            job["dataset_dir"], spec, cfg,
            stratify=plan.stratify, axis_value=job["axis_value"],
        )
    except Exception as exc:  # keep the sweep alive; the record carries the reason
        record = RunRecord(
            dataset=Path(job["dataset_dir"]).name,
            variant=variant,
            config="",
            seed=job["seed"],
            learning_rate=job["learning_rate"],
            axis_value=job["axis_value"],
            metrics=None,
            final_metrics=None,
            complexity=None,
            train_seconds=0.0,
            diverged=True,
            error=f"{type(exc).__name__}: {exc}",
        )
    return record


def run_sweep(plan: SweepPlan, parallelism: int = 1) -> list[RunRecord]:
    """Execute the plan's full Cartesian product; order matches plan.jobs().

    Runs are isolated and deterministic, so any parallelism degree yields
    the same record set.  Failures are recorded, never raised.
    """
    jobs = [(plan, job) for job in plan.jobs()]
    if parallelism <= 1:
        return [_run_sweep_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(_run_sweep_job, jobs, chunksize=1))


@dataclass
class AggregateReport:
    """Seed-averaged table plus dataset-level summaries.

    ``seed_means`` rows: one per (dataset, variant, config) with metric
    means over seeds; summaries derive from it, so merging shards is just
    concatenating records and re-aggregating.
    """

    seed_means: list[dict] = field(default_factory=list)
    summary: list[dict] = field(default_factory=list)
    ranks: list[dict] = field(default_factory=list)


def _record_metric_row(rec: RunRecord) -> dict:
    m = rec.metrics
    return {
        "precision": m.macro_precision if m else np.nan,
        "recall": m.macro_recall if m else np.nan,
        "f1": m.macro_f1 if m else np.nan,
        "precision_w": m.weighted_precision if m else np.nan,
        "recall_w": m.weighted_recall if m else np.nan,
        "f1_w": m.weighted_f1 if m else np.nan,
        "seconds": rec.train_seconds,
        "diverged": float(rec.diverged),
    }


def aggregate(records: list[RunRecord]) -> AggregateReport:
    """Seed means per (dataset, variant, config), then dataset mean/stddev.

    Divergent runs keep their achieved metrics and are counted in the
    ``diverged`` column; records that failed outright contribute only to
    the divergence count.
    """
    if not records:
        return AggregateReport()

    by_group: dict[tuple[str, str, str, float | None], list[RunRecord]] = {}
    for rec in records:
        by_group.setdefault(
            (rec.dataset, rec.variant, rec.config, rec.axis_value), []
        ).append(rec)

    metric_names = ("precision", "recall", "f1", "precision_w", "recall_w", "f1_w", "seconds")
    seed_means = []
    for (dataset, variant, config, axis_value), group in sorted(
        by_group.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2], str(kv[0][3]))
    ):
        rows = [_record_metric_row(r) for r in group]
        entry = {
            "dataset": dataset,
            "variant": variant,
            "config": config,
            "axis_value": axis_value,
            "lr": group[0].learning_rate,
            "n_seeds": len(group),
            "diverged": int(sum(r["diverged"] for r in rows)),
        }
        for name in metric_names:
            vals = [r[name] for r in rows if np.isfinite(r[name])]
            entry[name] = float(np.mean(vals)) if vals else np.nan
        seed_means.append(entry)

    summary = []
    by_config: dict[tuple[str, str, float | None], list[dict]] = {}
    for entry in seed_means:
        by_config.setdefault(
            (entry["variant"], entry["config"], entry["axis_value"]), []
        ).append(entry)
    for (variant, config, axis_value), entries in sorted(
        by_config.items(), key=lambda kv: (kv[0][0], kv[0][1], str(kv[0][2]))
    ):
        row = {
            "variant": variant,
            "config": config,
            "axis_value": axis_value,
            "lr": entries[0]["lr"],
            "n_datasets": len(entries),
            "diverged": int(sum(e["diverged"] for e in entries)),
        }
        for name in metric_names:
            vals = [e[name] for e in entries if np.isfinite(e[name])]
            row[f"{name}_mean"] = float(np.mean(vals)) if vals else np.nan
            row[f"{name}_std"] = float(np.std(vals)) if vals else np.nan
        summary.append(row)

    # tie-averaged ranks per dataset across (variant, config) "models"
    ranks: dict[tuple[str, str], list[float]] = {}
    by_dataset: dict[str, list[dict]] = {}
    for entry in seed_means:
        by_dataset.setdefault(entry["dataset"], []).append(entry)
    for dataset, entries in by_dataset.items():
        if len(entries) < 2:
            continue
        f1s = np.array([e["f1"] for e in entries])
        if not np.isfinite(f1s).all():
            continue
        rank_vals = rankdata(-f1s, method="average")
        for entry, rank in zip(entries, rank_vals):
            ranks.setdefault((entry["variant"], entry["config"]), []).append(float(rank))
    rank_rows = [
        {
            "variant": variant,
            "config": config,
            "mean_rank": float(np.mean(vals)),
            "n_datasets": len(vals),
        }
        for (variant, config), vals in sorted(ranks.items())
    ]
    return AggregateReport(seed_means=seed_means, summary=summary, ranks=rank_rows)


def _csv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(str(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def emit_reports(report: AggregateReport, records: list[RunRecord], out_dir: str | Path) -> list[Path]:
    """Write the summary table, sweep curves, scatter pairs, and rank table."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    path = out_dir / "summary_table.csv"
    header = [
        "variant", "config",
        "precision_mean", "precision_std", "recall_mean", "recall_std",
        "f1_mean", "f1_std", "seconds_mean", "seconds_std", "n_datasets", "diverged",
    ]
    rows = [
        [
            r["variant"], f'"{r["config"]}"',
            r["precision_mean"], r["precision_std"], r["recall_mean"], r["recall_std"],
            r["f1_mean"], r["f1_std"], r["seconds_mean"], r["seconds_std"],
            r["n_datasets"], r["diverged"],
        ]
        for r in report.summary
    ]
    _csv(path, header, rows)
    written.append(path)

    path = out_dir / "curves.csv"
    curve_rows = []
    for r in report.summary:
        if r["axis_value"] is not None:
            curve_rows.append(
                ["sweep", r["variant"], r["lr"], r["axis_value"], r["f1_mean"]]
            )
    _csv(path, ["family", "variant", "lr", "axis_value", "mean_f1"], curve_rows)
    written.append(path)

    # scatter pairs: per-dataset mean F1 for every model pair
    models = sorted({(e["variant"], e["config"]) for e in report.seed_means})
    per_model: dict[tuple[str, str], dict[str, float]] = {m: {} for m in models}
    for e in report.seed_means:
        per_model[(e["variant"], e["config"])][e["dataset"]] = e["f1"]
    for i, ma in enumerate(models):
        for mb in models[i + 1 :]:
            shared = sorted(set(per_model[ma]) & set(per_model[mb]))
            if not shared:
                continue
            name = f"scatter_{ma[0]}_vs_{mb[0]}_{len(written)}.csv"
            _csv(
                out_dir / name,
                ["dataset", "model_x_f1", "model_y_f1"],
                [[ds, per_model[ma][ds], per_model[mb][ds]] for ds in shared],
            )
            written.append(out_dir / name)

    path = out_dir / "ranks.csv"
    _csv(
        path,
        ["variant", "config", "mean_rank", "n_datasets"],
        [[r["variant"], f'"{r["config"]}"', r["mean_rank"], r["n_datasets"]] for r in report.ranks],
    )
    written.append(path)
    return written


METRICS_CSV_HEADER = "dataset,model,seed,precision,recall,f1,precision_w,recall_w,f1_w"


def record_to_metrics_csv_row(rec: RunRecord) -> str:
    m = rec.metrics
    if m is None:
        return f"{rec.dataset},{rec.variant} {rec.config},{rec.seed},,,,,,"
    return (
        f"{rec.dataset},{rec.variant} {rec.config},{rec.seed},"
        f"{m.macro_precision!r},{m.macro_recall!r},{m.macro_f1!r},"
        f"{m.weighted_precision!r},{m.weighted_recall!r},{m.weighted_f1!r}"
    )


def records_to_json(records: list[RunRecord]) -> str:
    """Serialize records (metrics flattened to scalars) as JSON lines."""
    lines = []
    for rec in records:
        d = {
            "dataset": rec.dataset,
            "variant": rec.variant,
            "config": rec.config,
            "seed": rec.seed,
            "learning_rate": rec.learning_rate,
            "axis_value": rec.axis_value,
            "train_seconds": rec.train_seconds,
            "diverged": rec.diverged,
            "error": rec.error,
        }
        if rec.metrics is not None:
            d["metrics"] = {
                "precision": rec.metrics.macro_precision,
                "recall": rec.metrics.macro_recall,
                "f1": rec.metrics.macro_f1,
                "precision_w": rec.metrics.weighted_precision,
                "recall_w": rec.metrics.weighted_recall,
                "f1_w": rec.metrics.weighted_f1,
            }
        if rec.complexity is not None:
            d["complexity"] = asdict(rec.complexity)
        lines.append(json.dumps(d))
    return "\n".join(lines) + "\n"


def records_from_json(text: str) -> list[RunRecord]:
    """Parse records written by records_to_json (enough detail to aggregate)."""
    from .metrics import ClassificationMetrics as CM

    records = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        d = json.loads(line)
        metrics = None
        if "metrics" in d:
            m = d["metrics"]
            empty = np.array([])
            metrics = CM(
                precision=empty, recall=empty, f1=empty,
                macro_precision=m["precision"], macro_recall=m["recall"],
                macro_f1=m["f1"], weighted_precision=m["precision_w"],
                weighted_recall=m["recall_w"], weighted_f1=m["f1_w"],
                degenerate_classes=0,
            )
        complexity = None
        if "complexity" in d:
            complexity = ComplexityReport(**d["complexity"])
        records.append(
            RunRecord(
                dataset=d["dataset"],
                variant=d["variant"],
                config=d["config"],
                seed=d["seed"],
                learning_rate=d["learning_rate"],
                axis_value=d["axis_value"],
                metrics=metrics,
                final_metrics=None,
                complexity=complexity,
                train_seconds=d["train_seconds"],
                diverged=d["diverged"],
                error=d.get("error", ""),
            )
        )
    return records

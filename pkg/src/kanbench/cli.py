"""Command-line harness: train, sweep, complexity, explain, report, synth."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .complexity import (
    COMPLEXITY_CSV_HEADER,
    complexity_report,
    kan_forward_flops,
    kan_param_count,
    mlp_forward_flops,
    mlp_param_count,
    report_csv_row,
    tec,
)
from .data import ScalerParams, apply_scaler, load_ucr_pair
from .interpret import (
    edge_importance,
    export_graph_json,
    prune,
    sample_spline_curves,
    shap_reports_to_csv,
    shapley_attributions,
)
from .network import NetworkSpec, load_checkpoint, save_checkpoint
from .sweep import (
    METRICS_CSV_HEADER,
    SweepPlan,
    aggregate,
    emit_reports,
    record_to_metrics_csv_row,
    records_from_json,
    records_to_json,
    run_single,
    run_sweep,
)
from .synth import make_benchmark_suite, make_smooth_bands_pair
from .training import TrainConfig, default_reg_factor, epoch_logs_to_csv


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.split(",") if tok.strip())


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    return json.loads(Path(path).read_text())


def _build_spec(args, cfg_file: dict) -> NetworkSpec:
    hidden = args.hidden or cfg_file.get("hidden")
    if hidden is None:
        hidden = (40, 40)
    elif isinstance(hidden, str):
        hidden = _parse_int_list(hidden)
    return NetworkSpec(
        variant=args.variant or cfg_file.get("variant", "kan_efficient"),
        layer_sizes=(0, *hidden, 0),  # input/output filled from the dataset
        grid_size=args.grid_size or cfg_file.get("grid_size", 5),
        spline_degree=args.degree or cfg_file.get("spline_degree", 3),
        grid_range=tuple(cfg_file.get("grid_range", (-1.0, 1.0))),
        activation=cfg_file.get("activation", "relu"),
    )


def _cmd_train(args) -> int:
    cfg_file = _load_config_file(args.config)
    spec_template = _build_spec(args, cfg_file)
    seeds = _parse_int_list(args.seeds) if args.seeds else tuple(
        cfg_file.get("seeds", [cfg_file.get("seed", 0)])
    )
    reg = args.reg_factor if args.reg_factor is not None else cfg_file.get(
        "reg_factor", default_reg_factor(spec_template.variant)
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    records = []
    for seed in seeds:
        cfg = TrainConfig(
            learning_rate=args.lr if args.lr is not None else cfg_file.get("learning_rate", 0.001),
            epochs=args.epochs or cfg_file.get("epochs", 500),
            batch_size=args.batch_size or cfg_file.get("batch_size", 16),
            seed=seed,
            reg_factor=reg,
            selection=args.selection or cfg_file.get("selection", "best_val_f1"),
        )
        record, result, selected, spec = run_single(
            args.dataset, spec_template, cfg, stratify=not args.no_stratify
        )
        records.append(record)
        (out_dir / f"epochs_seed{seed}.csv").write_text(epoch_logs_to_csv(result.logs))

        from .sweep import prepare_datasets
        from .data import SplitSpec

        _, _, _, means, stds = prepare_datasets(
            args.dataset, SplitSpec(0.8, seed), not args.no_stratify
        )
        save_checkpoint(
            selected,
            out_dir / f"checkpoint_seed{seed}.npz",
            seed=seed,
            extras={"scaler_means": means, "scaler_stds": stds},
        )
        m = record.metrics
        flag = " [diverged]" if record.diverged else ""
        print(
            f"{record.dataset} seed={seed} {spec.variant} {record.config}: "
            f"test macro-F1 {m.macro_f1:.4f}{flag}"
        )

    (out_dir / "records.jsonl").write_text(records_to_json(records))
    lines = [METRICS_CSV_HEADER] + [record_to_metrics_csv_row(r) for r in records]
    (out_dir / "metrics.csv").write_text("\n".join(lines) + "\n")
    mean_f1 = float(np.mean([r.metrics.macro_f1 for r in records]))
    print(f"mean test macro-F1 over {len(seeds)} seed(s): {mean_f1:.4f}")
    return 0


def _cmd_sweep(args) -> int:
    plan_dict = _load_config_file(args.plan)
    if args.family:
        plan_dict["family"] = args.family
    plan = SweepPlan.from_dict(plan_dict)
    records = run_sweep(plan, parallelism=args.parallelism)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "records.jsonl").write_text(records_to_json(records))
    report = aggregate(records)
    emit_reports(report, records, out_dir)
    n_div = sum(r.diverged for r in records)
    print(f"{len(records)} runs ({n_div} divergent) -> {out_dir}")
    return 0


def _cmd_complexity(args) -> int:
    rows = [COMPLEXITY_CSV_HEADER]
    if args.reference_table:
        t, c = args.length, args.classes
        for depth in (3, 4):
            hidden = [300] * depth
            flops = mlp_forward_flops(t, 300, depth, c)
            rows.append(
                f"mlp,[{t},{'x'.join(str(h) for h in hidden)},{c}],"
                f"{mlp_param_count([t, *hidden, c])},{mlp_param_count([t, *hidden, c])},"
                f"{flops!r},{tec(flops)!r},20.0,65.0"
            )
        for variant in ("kan_original", "kan_efficient"):
            for depth in (3, 4):
                hidden = [40] * (depth - 1)
                flops = kan_forward_flops(t, 40, depth, c, 5, 3)
                params = kan_param_count([t, *hidden, c], 5, 3)
                rows.append(
                    f"{variant},[{t},{'x'.join(str(h) for h in hidden)},{c}] G=5,"
                    f"{params},{params},{flops!r},{tec(flops)!r},20.0,65.0"
                )
    else:
        spec_dict = _load_config_file(args.spec)
        spec = NetworkSpec.from_dict(spec_dict)
        report = complexity_report(
            spec, nl_silu=args.nl_silu, gflops_per_watt=args.gflops_per_watt
        )
        rows.append(report_csv_row(spec.variant, json.dumps(spec.layer_sizes), report))
    text = "\n".join(rows) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    print(text, end="")
    return 0


def _cmd_explain(args) -> int:
    net, seed, extras = load_checkpoint(args.checkpoint)
    train_ds, test_ds = load_ucr_pair(args.dataset)
    if "scaler_means" in extras:
        scaler = ScalerParams(extras["scaler_means"], extras["scaler_stds"])
    else:
        from .data import fit_scaler

        scaler = fit_scaler(train_ds)
    train_std = apply_scaler(train_ds, scaler)
    test_std = apply_scaler(test_ds, scaler)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    scores = edge_importance(net, train_std.series)
    pruned = prune(scores, threshold=args.threshold)
    curves = sample_spline_curves(net, n_points=args.curve_points, scores=scores)
    (out_dir / "graph.json").write_text(export_graph_json(net, scores, pruned, curves))

    # feature ranking by first-layer edge scores
    feature_scores = scores.scores[0].mean(axis=0)
    edge_rank = np.argsort(-feature_scores)

    n_samples = min(args.shap_samples, test_std.n_rows)
    baseline = np.zeros(test_std.length)
    reports = []
    for i in range(n_samples):
        for c in range(test_std.class_count):
            reports.append(
                shapley_attributions(
                    net,
                    test_std.series[i],
                    baseline,
                    n_permutations=args.shap_permutations,
                    seed=seed or 0,
                    target_class=c,
                    sample_index=i,
                )
            )
    (out_dir / "shap.csv").write_text(
        shap_reports_to_csv(reports, test_std.series)
    )
    mean_abs_phi = np.zeros(test_std.length)
    for rep in reports:
        mean_abs_phi += np.abs(rep.attributions)
    mean_abs_phi /= max(len(reports), 1)
    shap_rank = np.argsort(-mean_abs_phi)

    top = min(5, test_std.length)
    print(f"top features by edge importance: {[int(i) for i in edge_rank[:top]]}")
    print(f"top features by mean |shap|:     {[int(i) for i in shap_rank[:top]]}")
    print(f"wrote graph.json and shap.csv to {out_dir}")
    return 0


def _cmd_report(args) -> int:
    in_dir = Path(args.in_dir)
    records = []
    for path in sorted(in_dir.glob("**/records.jsonl")):
        records.extend(records_from_json(path.read_text()))
    report = aggregate(records)
    written = emit_reports(report, records, args.out)
    print(f"aggregated {len(records)} records into {len(written)} files under {args.out}")
    return 0


def _cmd_synth(args) -> int:
    out = Path(args.out)
    if args.suite:
        paths = make_benchmark_suite(out, seed=args.seed)
        for p in paths:
            print(f"wrote {p}")
    else:
        p = make_smooth_bands_pair(
            out,
            name=args.name,
            n_train_per_class=args.per_class,
            n_test_per_class=args.per_class,
            length=args.length,
            classes=args.classes,
            noise=args.noise,
            seed=args.seed,
        )
        print(f"wrote {p}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kanbench",
        description="Spline-network engine and benchmark harness for time-series classification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one configuration on one dataset")
    p.add_argument("--dataset", required=True, help="directory with <name>_TRAIN.tsv/_TEST.tsv")
    p.add_argument("--config", help="JSON file with architecture/training fields")
    p.add_argument("--variant", choices=("kan_original", "kan_efficient", "mlp"))
    p.add_argument("--hidden", help="comma-separated hidden layer sizes, e.g. 40,40")
    p.add_argument("--grid-size", type=int, dest="grid_size")
    p.add_argument("--degree", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--seeds", help="comma-separated seeds, e.g. 0,1,2,5,42")
    p.add_argument("--reg-factor", type=float, dest="reg_factor")
    p.add_argument("--selection", choices=("best_val_f1", "final"))
    p.add_argument("--no-stratify", action="store_true")
    p.add_argument("--out", default="runs")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("sweep", help="run a one-axis hyperparameter sweep")
    p.add_argument("--plan", required=True, help="JSON sweep plan")
    p.add_argument("--family", choices=("grid", "depth", "width"))
    p.add_argument("--parallelism", type=int, default=1)
    p.add_argument("--out", default="sweep_out")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("complexity", help="closed-form parameter/FLOP/energy accounting")
    p.add_argument("--spec", help="JSON NetworkSpec file")
    p.add_argument("--reference-table", action="store_true",
                   help="emit the six reference rows at the given mean sizes")
    p.add_argument("--length", type=float, default=537.10)
    p.add_argument("--classes", type=float, default=8.26)
    p.add_argument("--nl-silu", type=float, default=20.0, dest="nl_silu")
    p.add_argument("--gflops-per-watt", type=float, default=65.0, dest="gflops_per_watt")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_complexity)

    p = sub.add_parser("explain", help="edge importance, pruning, curves, shap")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--shap-permutations", type=int, default=200, dest="shap_permutations")
    p.add_argument("--shap-samples", type=int, default=8, dest="shap_samples")
    p.add_argument("--threshold", type=float, default=0.01)
    p.add_argument("--curve-points", type=int, default=101, dest="curve_points")
    p.add_argument("--out", default="explain_out")
    p.set_defaults(func=_cmd_explain)

    p = sub.add_parser("report", help="aggregate stored run records into tables")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--out", default="report_out")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("synth", help="generate synthetic archive-style datasets")
    p.add_argument("--out", default="data")
    p.add_argument("--suite", action="store_true", help="write the 5-dataset benchmark suite")
    p.add_argument("--name", default="SmoothBands")
    p.add_argument("--length", type=int, default=15)
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--per-class", type=int, default=50, dest="per_class")
    p.add_argument("--noise", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

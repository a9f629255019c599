"""Command-line front end: generate | run | sweep | report.

Exit codes: 0 success, 2 validation error, 3 partial sweep failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

from .core import divisor_set, sigma_to_percent
from .data import MGParams, mackey_glass, save_csv
from .errors import CoverageError, MultistepError
from .evaluation import (
    EvalRecord,
    rank,
    rank_planes,
    records_from_csv,
    records_from_jsonl,
    relative_best,
    significance,
    timing_planes,
)
from .runner import (
    RunConfig,
    config_from_text,
    config_to_text,
    prepare_task,
    resolve_strategies,
    run_cell,
    sweep,
)
from .strategies import check_window_covers_horizon, is_existing_strategy, save_fitted
from .core import parse_strategy

PAPER_STYLE_MG_VARIANCE = 1.200e-01  # informational reference for `generate`

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_PARTIAL = 3


def _fmt(value: float) -> str:
    return f"{value:.3e}"


def _safe_id(strategy_id: str) -> str:
    table = {"ρ": "r", "δ": "d", "ι": "i", ":": "", "|": "__", ".": "_", "%": ""}
    out = strategy_id
    for old, new in table.items():
        out = out.replace(old, new)
    return out


def _add_dataset_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--csv", help="dataset CSV path (omit to use the built-in generator)")
    parser.add_argument("--column", help="CSV column name/index, or 'collapse' (default)")
    parser.add_argument("--header", choices=["auto", "yes", "no"], help="CSV header handling")
    parser.add_argument("--collapse-mode", choices=["mean", "sum", "first"], dest="collapse_mode")
    parser.add_argument("--dataset-name", dest="dataset_name", help="override the dataset label")
    parser.add_argument("--mg-length", type=int, dest="mg_length")
    parser.add_argument("--mg-seed", type=int, dest="mg_seed")
    parser.add_argument("--mg-tau", type=int, dest="mg_tau")


def _add_run_args(parser: argparse.ArgumentParser) -> None:
    _add_dataset_args(parser)
    parser.add_argument("--horizon", type=int)
    parser.add_argument("--window", type=int)
    parser.add_argument("--fractions", help="train,val,test fractions, e.g. 0.8,0.1,0.1")
    parser.add_argument("--learner", help="ridge | knn | mlp | forest | persistence")
    parser.add_argument(
        "--learner-param",
        action="append",
        dest="learner_param",
        metavar="KEY=VALUE",
        help="learner hyperparameter override (repeatable)",
    )
    parser.add_argument("--rectifier-learner", dest="rectifier_learner")
    parser.add_argument(
        "--rectifier-param", action="append", dest="rectifier_param", metavar="KEY=VALUE"
    )
    parser.add_argument("--seeds", help="comma-separated seeds (default 0,1,2)")
    parser.add_argument("--standardize", choices=["true", "false"])
    parser.add_argument("--output", help="output directory")
    parser.add_argument("--jobs", type=int)
    parser.add_argument("--config", help="config file; explicit flags override it")


def _merge_config(args: argparse.Namespace, strategies_default: tuple[str, ...]) -> RunConfig:
    from .learners.base import _parse_value

    config = RunConfig(strategies=strategies_default)
    if getattr(args, "config", None):
        config = dataclasses.replace(
            config_from_text(Path(args.config).read_text()), strategies=strategies_default
        )

    updates = {}
    for name in (
        "csv", "column", "header", "collapse_mode", "dataset_name",
        "mg_length", "mg_seed", "mg_tau", "horizon", "window", "learner",
        "rectifier_learner", "output", "jobs",
    ):
        value = getattr(args, name, None)
        if value is not None:
            updates[name] = value
    if getattr(args, "fractions", None):
        parts = [float(p) for p in args.fractions.split(",")]
        if len(parts) != 3:
            raise MultistepError(f"--fractions needs three numbers, got {args.fractions!r}")
        updates["train_fraction"], updates["val_fraction"], updates["test_fraction"] = parts
    if getattr(args, "seeds", None):
        updates["seeds"] = tuple(int(s) for s in args.seeds.split(","))
    if getattr(args, "standardize", None):
        updates["standardize"] = args.standardize == "true"
    if getattr(args, "strategies", None):
        updates["strategies"] = tuple(args.strategies)
    if getattr(args, "region", None):
        updates["strategies"] = (f"region:{args.region}",)
    if getattr(args, "limit", None) is not None:
        updates["limit"] = args.limit

    def parse_params(pairs):
        out = {}
        for pair in pairs or []:
            if "=" not in pair:
                raise MultistepError(f"expected KEY=VALUE, got {pair!r}")
            key, value = pair.split("=", 1)
            out[key.strip()] = _parse_value(value.strip())
        return out

    learner_params = dict(config.learner_params)
    learner_params.update(parse_params(getattr(args, "learner_param", None)))
    rectifier_params = dict(config.rectifier_params)
    rectifier_params.update(parse_params(getattr(args, "rectifier_param", None)))
    return dataclasses.replace(
        config, learner_params=learner_params, rectifier_params=rectifier_params, **updates
    )


def cmd_generate(args: argparse.Namespace) -> int:
    params = MGParams(
        beta=args.beta,
        gamma=args.gamma,
        exponent=args.exponent,
        tau=args.tau,
        dt=args.dt,
        warmup=args.warmup,
        length=args.length,
        seed=args.seed,
    )
    series = mackey_glass(params)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_csv(series, out)
    stats = series.summary()
    print(f"wrote {out} ({stats['length']} rows)")
    print(
        f"{series.name}  length {stats['length']}  mean {_fmt(stats['mean'])}  "
        f"variance {_fmt(stats['variance'])}  range {_fmt(stats['range'])}"
    )
    print(
        f"variance vs reference {_fmt(PAPER_STYLE_MG_VARIANCE)}: "
        f"ratio {stats['variance'] / PAPER_STYLE_MG_VARIANCE:.3f} (informational)"
    )
    return EXIT_OK


def _write_forecast_dump(path: Path, result) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["window_index", "step", "prediction", "actual"])
        preds, actuals = result.test_predictions, result.test_actuals
        for i in range(preds.shape[0]):
            for h in range(preds.shape[1]):
                writer.writerow([i, h + 1, repr(float(preds[i, h])), repr(float(actuals[i, h]))])


def cmd_run(args: argparse.Namespace) -> int:
    config = _merge_config(args, strategies_default=tuple(args.strategy))
    config.validate()
    specs = resolve_strategies(config.strategies, config.horizon)
    check_window_covers_horizon(specs, config.horizon, config.window)
    task = prepare_task(config)
    out_dir = Path(config.output) / task.task_id
    out_dir.mkdir(parents=True, exist_ok=True)
    records_path = out_dir / "records.jsonl"

    from .evaluation import append_records_jsonl

    for spec in specs:
        for seed in config.seeds:
            result = run_cell(
                task,
                spec,
                config.learner_config(),
                config.rectifier_config(),
                seed,
                keep_fitted=args.save_fitted,
            )
            append_records_jsonl([result.record], records_path)
            tag = f"{_safe_id(result.record.strategy_id)}_seed{seed}"
            _write_forecast_dump(out_dir / f"forecasts_{tag}.csv", result)
            if args.save_fitted and result.fitted is not None:
                save_fitted(result.fitted, out_dir / f"fitted_{tag}.json.gz")
            r = result.record
            val = "n/a" if r.val_mse is None else _fmt(r.val_mse)
            print(
                f"{r.strategy_id}  seed {seed}  test_mse {_fmt(r.test_mse)}  "
                f"val_mse {val}  models {r.n_models}  train_s {r.train_seconds:.3f}"
            )
    print(f"records appended to {records_path}")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    config = _merge_config(args, strategies_default=("all",))
    config.validate()
    specs = resolve_strategies(config.strategies, config.horizon)
    check_window_covers_horizon(specs, config.horizon, config.window)
    task = prepare_task(config)
    out_dir = Path(config.output) / task.task_id
    out_dir.mkdir(parents=True, exist_ok=True)
    records_path = out_dir / "records.jsonl"

    records, failures = sweep(
        task,
        specs,
        config.learner_config(),
        config.rectifier_config(),
        seeds=config.seeds,
        records_path=records_path,
        jobs=config.jobs,
        limit=config.limit,
    )
    print(
        f"{task.task_id}: {len(records)} records for {len(specs)} strategies x "
        f"{len(config.seeds)} seeds -> {records_path}"
    )
    if failures:
        print(f"{len(failures)} cells failed:", file=sys.stderr)
        for failure in failures:
            print(
                f"  {failure.strategy_id} seed {failure.seed}: {failure.error}",
                file=sys.stderr,
            )
        return EXIT_PARTIAL
    return EXIT_OK


def _gather_records(root: Path) -> list[EvalRecord]:
    records: list[EvalRecord] = []
    if root.is_file():
        if root.suffix == ".csv":
            return records_from_csv(root)
        return records_from_jsonl(root)
    for path in sorted(root.rglob("records.jsonl")):
        records.extend(records_from_jsonl(path))
    for path in sorted(root.rglob("records.csv")):
        records.extend(records_from_csv(path))
    return records


def _relative_tables(records: list[EvalRecord]):
    """Per (dataset, horizon): best-novel over best-existing MSE ratios
    and the per-seed proportion of wins."""
    by_cell: dict[tuple[str, int], list[EvalRecord]] = {}
    for r in records:
        by_cell.setdefault((r.dataset, r.horizon), []).append(r)
    rel_rows = []
    prop_rows = []
    for (dataset, horizon), cell_records in sorted(by_cell.items()):
        novel = [r for r in cell_records if not is_existing_strategy(parse_strategy(r.strategy_id, horizon))]
        existing = [r for r in cell_records if is_existing_strategy(parse_strategy(r.strategy_id, horizon))]
        if not novel or not existing:
            raise CoverageError(
                f"({dataset}, H={horizon}) needs both novel and existing strategies "
                f"for the relative-MSE table"
            )
        pooled = relative_best([r.test_mse for r in novel], [r.test_mse for r in existing])
        seeds = sorted({r.seed for r in cell_records})
        per_seed = []
        for seed in seeds:
            nov = [r.test_mse for r in novel if r.seed == seed]
            exi = [r.test_mse for r in existing if r.seed == seed]
            if nov and exi:
                per_seed.append(relative_best(nov, exi))
        import numpy as np

        mean_ratio = float(np.mean(per_seed))
        stderr = float(np.std(per_seed, ddof=1) / np.sqrt(len(per_seed))) if len(per_seed) > 1 else 0.0
        rel_rows.append((dataset, horizon, pooled, mean_ratio, stderr, len(per_seed)))
        prop_rows.append((dataset, horizon, sum(1 for v in per_seed if v < 1.0) / len(per_seed)))
    return rel_rows, prop_rows


def cmd_report(args: argparse.Namespace) -> int:
    from . import _svg

    root = Path(args.records)
    records = _gather_records(root)
    if not records:
        raise MultistepError(f"no records found under {root}")
    out_dir = Path(args.out) if args.out else (root if root.is_dir() else root.parent) / "reports"
    out_dir.mkdir(parents=True, exist_ok=True)

    strategies_by_task: dict = {}
    for r in records:
        strategies_by_task.setdefault(r.task, set()).add(r.strategy_id)
    common = set.intersection(*strategies_by_task.values())
    dropped = sorted({s for ids in strategies_by_task.values() for s in ids} - common)
    if dropped:
        print(f"dropping {len(dropped)} strategies not covered on every task: {dropped[:5]} ...")
    used = [r for r in records if r.strategy_id in common]

    table = rank(used)
    with open(out_dir / "rank_table.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["strategy_id", "avg_rank", "stderr", "existing"])
        order = sorted(range(len(table.strategies)), key=lambda i: table.avg_rank[i])
        for i in order:
            sid = table.strategies[i]
            writer.writerow([
                sid,
                f"{table.avg_rank[i]:.6f}",
                f"{table.stderr[i]:.6f}",
                is_existing_strategy(parse_strategy(sid, used[0].horizon)),
            ])
    print(f"rank table: {len(table.strategies)} strategies x {len(table.tasks)} tasks")

    try:
        result = significance(table, alpha=args.alpha)
        (out_dir / "significance.json").write_text(json.dumps(result.to_dict(), indent=2))
        existing_ids = {
            sid for sid in table.strategies
            if is_existing_strategy(parse_strategy(sid, used[0].horizon))
        }
        svg = _svg.cd_diagram_svg(
            table, result.nemenyi_cd, existing_ids, f"critical differences (alpha={args.alpha})"
        )
        (out_dir / "cd_diagram.svg").write_text(svg)
        print(
            f"friedman chi2 {result.friedman.statistic:.4f} p {result.friedman.pvalue:.3e}  "
            f"CD {result.nemenyi_cd:.4f}"
        )
    except MultistepError as exc:
        print(f"significance skipped: {exc}")

    try:
        rel_rows, prop_rows = _relative_tables(used)
        with open(out_dir / "relative_mse.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["dataset", "horizon", "pooled_ratio", "mean_ratio", "stderr", "n_seeds"])
            for row in rel_rows:
                writer.writerow(row)
        with open(out_dir / "proportion_wins.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["dataset", "horizon", "proportion"])
            for row in prop_rows:
                writer.writerow(row)
        best = min(rel_rows, key=lambda row: row[2])
        print(f"best pooled relative MSE (novel/existing): {best[2]:.4f} on {best[0]} H={best[1]}")
    except MultistepError as exc:
        print(f"relative tables skipped: {exc}")

    planes_dir = out_dir / "planes"
    try:
        planes = rank_planes(used)
    except MultistepError as exc:
        planes = {}
        print(f"rank planes skipped: {exc}")
    if planes:
        planes_dir.mkdir(exist_ok=True)
        from .evaluation import parse_region, region_label

        for label, plane in planes.items():
            safe = region_label(parse_region(label), ascii_safe=True)
            (planes_dir / f"rank_{safe}.json").write_text(json.dumps(plane.to_dict(), indent=2))
            (planes_dir / f"rank_{safe}.svg").write_text(
                _svg.heatmap_svg(plane, f"mean rank, region {label}")
            )
        print(f"rank planes: {sorted(planes)} -> {planes_dir}")
        missing = 9 - len(planes)
        if missing:
            print(f"{missing} regions lack full coverage and were omitted")

    timing_dir = out_dir / "timing"
    for mode in ("train", "inference"):
        try:
            planes = timing_planes(used, mode)
        except MultistepError as exc:
            print(f"{mode} timing planes skipped: {exc}")
            continue
        timing_dir.mkdir(exist_ok=True)
        from .evaluation import parse_region, region_label

        for label, plane in planes.items():
            safe = region_label(parse_region(label), ascii_safe=True)
            (timing_dir / f"{mode}_{safe}.json").write_text(json.dumps(plane.to_dict(), indent=2))
            (timing_dir / f"{mode}_{safe}.svg").write_text(
                _svg.heatmap_svg(plane, f"{mode} time / fastest, region {label}")
            )
        print(f"{mode} timing planes: {sorted(planes)} -> {timing_dir}")

    print(f"report written to {out_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="multistep",
        description="Multi-step forecasting strategy sweeps and rank-based reports.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate a chaotic benchmark series as CSV")
    gen.add_argument("--out", required=True, help="output CSV path")
    gen.add_argument("--length", type=int, default=10000)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--tau", type=int, default=17)
    gen.add_argument("--beta", type=float, default=0.2)
    gen.add_argument("--gamma", type=float, default=0.1)
    gen.add_argument("--exponent", type=float, default=10.0)
    gen.add_argument("--dt", type=float, default=1.0)
    gen.add_argument("--warmup", type=int, default=1000)
    gen.set_defaults(func=cmd_generate)

    run = sub.add_parser("run", help="train and score specific strategies")
    _add_run_args(run)
    run.add_argument(
        "--strategy",
        action="append",
        required=True,
        help="strategy id (e.g. 'ρ:10|δ:10') or alias (e.g. rectify, dirmo-5); repeatable",
    )
    run.add_argument("--save-fitted", action="store_true", dest="save_fitted")
    run.set_defaults(func=cmd_run)

    swp = sub.add_parser("sweep", help="evaluate the strategy space on one dataset")
    _add_run_args(swp)
    swp.add_argument(
        "--strategies",
        action="append",
        help="strategy tokens: all | atomic | region:<b>-<r> | alias | id (default: all)",
    )
    swp.add_argument("--region", help="shorthand for --strategies region:<b>-<r>")
    swp.add_argument("--limit", type=int, help="run at most this many new cells")
    swp.set_defaults(func=cmd_sweep)

    rep = sub.add_parser("report", help="build rank/significance/plane reports from records")
    rep.add_argument("records", help="records directory (or a single records file)")
    rep.add_argument("--out", help="report output directory (default: <records>/reports)")
    rep.add_argument("--alpha", type=float, default=0.05)
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MultistepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())

"""Run orchestration: configuration, task preparation, single-cell
execution, and resumable sweeps.

A *task* is a prepared dataset (split, optionally standardised, and
windowed); a *cell* is one strategy evaluated on one task with one seed.
Each cell derives its own learner seed from ``(seed, strategy, task)``,
so adding strategies to a sweep never changes existing cells' results,
and finished cells recorded in the JSON-lines file are skipped on
resume.  Cells may run in parallel; each cell is single-threaded
end-to-end and the record writer is a single serialised sink.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .core import (
    ComposedSpec,
    HorizonSpec,
    TimeSeries,
    WindowDataset,
    derive_seed,
    enumerate_strategy_space,
    make_windows,
    parse_strategy,
)
from .data import (
    DEFAULT_FRACTIONS,
    MGParams,
    SplitSeries,
    Standardizer,
    load_csv,
    mackey_glass,
    split,
    standardize_split,
)
from .errors import ConfigError, EmptyDatasetError, MultistepError
from .evaluation import EvalRecord, append_records_jsonl, mse, records_from_jsonl
from .learners import LearnerConfig
from .strategies import (
    FittedComposedStrategy,
    build_alias,
    forecast_composed_matrix,
    train_composed,
)

__all__ = ["RunConfig", "PreparedTask", "prepare_task", "resolve_strategies",
           "run_cell", "sweep", "CellFailure"]


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce a run, round-trippable through a
    plain-text ``key = value`` file."""

    # dataset: a CSV path, or the built-in generator when absent
    csv: str | None = None
    column: str = "collapse"
    header: str = "auto"
    collapse_mode: str = "mean"
    mg_length: int = 10000
    mg_seed: int = 0
    mg_tau: int = 17
    mg_beta: float = 0.2
    mg_gamma: float = 0.1
    mg_exponent: float = 10.0
    mg_dt: float = 1.0
    mg_warmup: int = 1000
    dataset_name: str | None = None

    horizon: int = 10
    window: int = 160
    train_fraction: float = DEFAULT_FRACTIONS[0]
    val_fraction: float = DEFAULT_FRACTIONS[1]
    test_fraction: float = DEFAULT_FRACTIONS[2]
    standardize: bool = True

    learner: str = "ridge"
    learner_params: dict[str, Any] = field(default_factory=dict)
    rectifier_learner: str | None = None
    rectifier_params: dict[str, Any] = field(default_factory=dict)

    strategies: tuple[str, ...] = ("all",)
    seeds: tuple[int, ...] = (0, 1, 2)
    output: str = "runs"
    jobs: int = 1
    limit: int | None = None

    def validate(self) -> None:
        if self.horizon < 1 or self.window < 1:
            raise ConfigError(f"horizon and window must be >= 1, got {self.horizon}, {self.window}")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")
        fracs = (self.train_fraction, self.val_fraction, self.test_fraction)
        if any(f <= 0 for f in fracs) or abs(sum(fracs) - 1.0) > 1e-9:
            raise ConfigError(f"split fractions must be positive and sum to 1, got {fracs}")

    @property
    def fractions(self) -> tuple[float, float, float]:
        return (self.train_fraction, self.val_fraction, self.test_fraction)

    def learner_config(self, seed: int = 0) -> LearnerConfig:
        return LearnerConfig(self.learner, seed, dict(self.learner_params))

    def rectifier_config(self, seed: int = 0) -> LearnerConfig | None:
        if self.rectifier_learner is None:
            return None
        return LearnerConfig(self.rectifier_learner, seed, dict(self.rectifier_params))


_SCALAR_FIELDS = {
    "csv": str, "column": str, "header": str, "collapse_mode": str,
    "mg_length": int, "mg_seed": int, "mg_tau": int, "mg_beta": float,
    "mg_gamma": float, "mg_exponent": float, "mg_dt": float, "mg_warmup": int,
    "dataset_name": str, "horizon": int, "window": int,
    "train_fraction": float, "val_fraction": float, "test_fraction": float,
    "standardize": bool, "learner": str, "rectifier_learner": str,
    "output": str, "jobs": int, "limit": int,
}


def _parse_scalar(kind, text: str):
    if text == "none":
        return None
    if kind is bool:
        if text.lower() not in ("true", "false"):
            raise ConfigError(f"expected true/false, got {text!r}")
        return text.lower() == "true"
    return kind(text)


def config_to_text(config: RunConfig) -> str:
    lines = []
    for name, kind in _SCALAR_FIELDS.items():
        value = getattr(config, name)
        if value is None:
            lines.append(f"{name} = none")
        elif kind is bool:
            lines.append(f"{name} = {'true' if value else 'false'}")
        else:
            lines.append(f"{name} = {value}")
    lines.append("strategies = " + ", ".join(config.strategies))
    lines.append("seeds = " + ", ".join(str(s) for s in config.seeds))
    for key in sorted(config.learner_params):
        lines.append(f"learner.{key} = {config.learner_params[key]}")
    for key in sorted(config.rectifier_params):
        lines.append(f"rectifier.{key} = {config.rectifier_params[key]}")
    return "\n".join(lines) + "\n"


def config_from_text(text: str) -> RunConfig:
    from .learners.base import _parse_value

    values: dict[str, Any] = {}
    learner_params: dict[str, Any] = {}
    rectifier_params: dict[str, Any] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"cannot parse config line {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in _SCALAR_FIELDS:
            values[key] = _parse_scalar(_SCALAR_FIELDS[key], value)
        elif key == "strategies":
            values["strategies"] = tuple(t.strip() for t in value.split(",") if t.strip())
        elif key == "seeds":
            values["seeds"] = tuple(int(t) for t in value.split(",") if t.strip())
        elif key.startswith("learner."):
            learner_params[key[len("learner."):]] = _parse_value(value)
        elif key.startswith("rectifier."):
            rectifier_params[key[len("rectifier."):]] = _parse_value(value)
        else:
            raise ConfigError(f"unknown config key {key!r}")
    values["learner_params"] = learner_params
    values["rectifier_params"] = rectifier_params
    return RunConfig(**values)


@dataclass
class PreparedTask:
    """A dataset made ready for training: split, scaled, and windowed."""

    name: str
    horizon: int
    window: int
    train_windows: WindowDataset
    val_windows: WindowDataset | None
    test_windows: WindowDataset
    raw_train: TimeSeries
    raw_splits: SplitSeries
    scaler: Standardizer | None

    @property
    def task_id(self) -> str:
        return f"{self.name}_H{self.horizon}"


def load_series(config: RunConfig) -> TimeSeries:
    if config.csv is not None:
        series = load_csv(
            config.csv,
            column=config.column,
            header=config.header,
            collapse_mode=config.collapse_mode,
            name=config.dataset_name or Path(config.csv).stem,
        )
    else:
        params = MGParams(
            beta=config.mg_beta,
            gamma=config.mg_gamma,
            exponent=config.mg_exponent,
            tau=config.mg_tau,
            dt=config.mg_dt,
            warmup=config.mg_warmup,
            length=config.mg_length,
            seed=config.mg_seed,
        )
        series = mackey_glass(params)
        if config.dataset_name:
            series = TimeSeries(config.dataset_name, series.values, series.source)
    return series


def prepare_task(config: RunConfig) -> PreparedTask:
    """Load, split, standardise and window a dataset.

    Windows never straddle split boundaries.  The validation split is
    windowed when long enough (its MSE is recorded but drives no
    decision); the train and test splits must each cover at least
    ``window + horizon`` observations.
    """
    config.validate()
    series = load_series(config)
    splits = split(series, config.fractions)
    scaler = None
    scaled = splits
    if config.standardize:
        scaled, scaler = standardize_split(splits)
    geometry = HorizonSpec(config.horizon, config.window)
    train_windows = make_windows(scaled.train, geometry)
    test_windows = make_windows(scaled.test, geometry)
    try:
        val_windows = make_windows(scaled.val, geometry)
    except EmptyDatasetError:
        val_windows = None
    return PreparedTask(
        name=series.name,
        horizon=config.horizon,
        window=config.window,
        train_windows=train_windows,
        val_windows=val_windows,
        test_windows=test_windows,
        raw_train=splits.train,
        raw_splits=splits,
        scaler=scaler,
    )


def resolve_strategies(tokens: Sequence[str], horizon: int) -> list[ComposedSpec]:
    """Expand strategy tokens into canonical specs, de-duplicated in
    order.

    Tokens: ``all`` (full base x rectifier grid plus base-only),
    ``atomic`` (base-only layer), ``region:<b>-<r>`` (one region's
    pairs), an alias like ``rectify`` or ``dirmo-5``, or a raw
    identifier like ``δ:50|δ:10``.
    """
    specs: list[ComposedSpec] = []
    seen: set[str] = set()

    def add(spec: ComposedSpec) -> None:
        spec = spec.canonical()
        if spec.strategy_id not in seen:
            seen.add(spec.strategy_id)
            specs.append(spec)

    for token in tokens:
        token = token.strip()
        if not token:
            continue
        if token == "all":
            for spec in enumerate_strategy_space(horizon, include_rectifiers=True):
                add(spec)
        elif token == "atomic":
            for spec in enumerate_strategy_space(horizon, include_rectifiers=False):
                add(spec)
        elif token.startswith("region:"):
            from .core import AtomicSpec, divisor_set
            from .evaluation import parse_region

            base_kind, rect_kind = parse_region(token[len("region:"):])
            divisors = divisor_set(horizon)
            # Build over the raw divisor grid so the whole-horizon
            # row/column (which canonicalises away from the region's
            # kind) stays in the region's cell set.
            for sb in divisors:
                for sr in divisors:
                    add(
                        ComposedSpec(
                            AtomicSpec(base_kind, sb, horizon).canonical(),
                            AtomicSpec(rect_kind, sr, horizon).canonical(),
                        )
                    )
        elif ":" in token:
            add(parse_strategy(token, horizon))
        else:
            name, _, sigma = token.partition("-")
            add(build_alias(name, horizon, int(sigma) if sigma else None))
    return specs


@dataclass(frozen=True)
class CellFailure:
    strategy_id: str
    seed: int
    error: str


@dataclass
class CellResult:
    record: EvalRecord
    fitted: FittedComposedStrategy | None
    test_predictions: np.ndarray
    test_actuals: np.ndarray


def run_cell(
    task: PreparedTask,
    spec: ComposedSpec,
    learner_config: LearnerConfig,
    rectifier_config: LearnerConfig | None = None,
    seed: int = 0,
    keep_fitted: bool = False,
) -> CellResult:
    """Train one strategy on one prepared task and score it.

    Test (and val) MSE are reported in raw series units: predictions are
    inverse-transformed before scoring when the task was standardised.
    """
    spec = spec.canonical()
    cell_seed = derive_seed(seed, spec.strategy_id, task.name, task.horizon)
    cfg = learner_config.with_seed(cell_seed)
    rcfg = None
    if rectifier_config is not None:
        rcfg = rectifier_config.with_seed(derive_seed(cell_seed, "rectifier"))

    fitted = train_composed(spec, cfg, task.train_windows, rcfg)

    start = time.perf_counter()
    predictions = forecast_composed_matrix(fitted, task.test_windows.inputs)
    inference_seconds = time.perf_counter() - start

    def to_raw(values: np.ndarray) -> np.ndarray:
        return task.scaler.inverse(values) if task.scaler is not None else values

    test_pred_raw = to_raw(predictions)
    test_actual_raw = to_raw(task.test_windows.targets)
    test_mse = mse(test_pred_raw, test_actual_raw)

    val_mse = None
    if task.val_windows is not None:
        val_pred = forecast_composed_matrix(fitted, task.val_windows.inputs)
        val_mse = mse(to_raw(val_pred), to_raw(task.val_windows.targets))

    record = EvalRecord(
        dataset=task.name,
        horizon=task.horizon,
        seed=seed,
        strategy_id=spec.strategy_id,
        test_mse=test_mse,
        val_mse=val_mse,
        train_seconds=fitted.train_seconds,
        inference_seconds=inference_seconds,
        n_models=fitted.n_models,
    )
    return CellResult(record, fitted if keep_fitted else None, test_pred_raw, test_actual_raw)


def _cell_worker(args) -> EvalRecord:
    task, spec_id, learner_config, rectifier_config, seed = args
    spec = parse_strategy(spec_id, task.horizon)
    return run_cell(task, spec, learner_config, rectifier_config, seed).record


def sweep(
    task: PreparedTask,
    specs: Sequence[ComposedSpec],
    learner_config: LearnerConfig,
    rectifier_config: LearnerConfig | None = None,
    seeds: Sequence[int] = (0,),
    records_path: str | Path | None = None,
    jobs: int = 1,
    limit: int | None = None,
) -> tuple[list[EvalRecord], list[CellFailure]]:
    """Evaluate strategies x seeds on a task, appending records as cells
    finish.

    Cells already present in ``records_path`` are skipped, so an
    interrupted sweep resumes where it stopped.  ``limit`` caps how many
    new cells run (the resume mechanism in miniature).  Failures are
    collected per cell; other cells keep running.
    """
    existing: list[EvalRecord] = []
    if records_path is not None:
        records_path = Path(records_path)
        if records_path.exists():
            existing = records_from_jsonl(records_path)
    done = {(r.strategy_id, r.seed) for r in existing}

    pending = []
    for seed in seeds:
        for spec in specs:
            spec = spec.canonical()
            if (spec.strategy_id, seed) not in done:
                pending.append((spec.strategy_id, seed))
    if limit is not None:
        pending = pending[:limit]

    new_records: list[EvalRecord] = []
    failures: list[CellFailure] = []

    def finish(record: EvalRecord) -> None:
        new_records.append(record)
        if records_path is not None:
            append_records_jsonl([record], records_path)

    if jobs <= 1:
        for spec_id, seed in pending:
            try:
                finish(_cell_worker((task, spec_id, learner_config, rectifier_config, seed)))
            except MultistepError as exc:
                failures.append(CellFailure(spec_id, seed, str(exc)))
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {
                pool.submit(
                    _cell_worker, (task, spec_id, learner_config, rectifier_config, seed)
                ): (spec_id, seed)
                for spec_id, seed in pending
            }
            for future in as_completed(futures):
                spec_id, seed = futures[future]
                try:
                    finish(future.result())
                except MultistepError as exc:
                    failures.append(CellFailure(spec_id, seed, str(exc)))

    wanted = {(s.canonical().strategy_id, seed) for s in specs for seed in seeds}
    records = [r for r in existing if (r.strategy_id, r.seed) in wanted] + new_records
    return records, failures

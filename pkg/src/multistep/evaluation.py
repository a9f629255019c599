"""Scoring, baselines, rank aggregation, significance machinery, and
plane heatmaps over the strategy space.

Evaluation is rank-based: every task (a dataset/horizon/seed triple)
ranks all strategies by test MSE (rank 1 = lowest error, ties share the
mean rank); ranks are averaged across tasks; the Friedman test checks
whether strategies differ at all and the Nemenyi critical difference
says which average-rank gaps are significant.  Planes arrange the
base-kind x rectifier-kind grid of composed strategies as heatmaps of
mean rank, re-expanding the whole-horizon duplicates so every region is
a full divisor-by-divisor matrix.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.special

from . import _quantiles
from .core import (
    AtomicSpec,
    ComposedSpec,
    KIND_ORDER,
    StrategyKind,
    TimeSeries,
    WindowDataset,
    divisor_set,
    parse_strategy,
    percent_to_sigma,
    sigma_to_percent,
)
from .errors import CoverageError, DataError, InvalidParameterisationError, ShapeError
from .strategies import is_existing_strategy

__all__ = [
    "EvalRecord",
    "RankTable",
    "FriedmanResult",
    "SignificanceResult",
    "Plane",
    "mse",
    "mean_forecast_error",
    "relative_best",
    "rank",
    "friedman",
    "nemenyi_cd",
    "cliques",
    "significance",
    "plane_aggregate",
    "rank_planes",
    "timing_planes",
    "region_label",
    "REGIONS",
    "records_to_csv",
    "records_from_csv",
    "append_records_jsonl",
    "records_from_jsonl",
]

CSV_COLUMNS = (
    "dataset",
    "horizon",
    "seed",
    "strategy_id",
    "test_mse",
    "val_mse",
    "train_seconds",
    "inference_seconds",
    "n_models",
)

REGIONS: tuple[tuple[StrategyKind, StrategyKind], ...] = tuple(
    (b, r) for b in KIND_ORDER for r in KIND_ORDER
)

_ASCII_KIND = {StrategyKind.REC_MO: "r", StrategyKind.DIR_MO: "d", StrategyKind.DIRREC_MO: "i"}


def region_label(region: tuple[StrategyKind, StrategyKind], ascii_safe: bool = False) -> str:
    """``ρ-δ`` style label for a (base kind, rectifier kind) region;
    ``ascii_safe`` gives the file-name form ``r-d``."""
    base, rect = region
    if ascii_safe:
        return f"{_ASCII_KIND[base]}-{_ASCII_KIND[rect]}"
    return f"{base.symbol}-{rect.symbol}"


def parse_region(text: str) -> tuple[StrategyKind, StrategyKind]:
    from .core import parse_kind

    parts = text.strip().split("-")
    if len(parts) != 2:
        raise InvalidParameterisationError(
            f"cannot parse region {text!r}: expected '<kind>-<kind>' such as ρ-ρ or r-d"
        )
    return parse_kind(parts[0]), parse_kind(parts[1])


@dataclass(frozen=True)
class EvalRecord:
    """One strategy evaluated on one task."""

    dataset: str
    horizon: int
    seed: int
    strategy_id: str
    test_mse: float
    train_seconds: float
    inference_seconds: float
    n_models: int
    val_mse: float | None = None

    def __post_init__(self) -> None:
        if not math.isfinite(self.test_mse) or self.test_mse < 0:
            raise DataError(f"test_mse must be finite and non-negative, got {self.test_mse}")
        parse_strategy(self.strategy_id, self.horizon)  # must round-trip

    @property
    def task(self) -> tuple[str, int, int]:
        return (self.dataset, self.horizon, self.seed)

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "horizon": self.horizon,
            "seed": self.seed,
            "strategy_id": self.strategy_id,
            "test_mse": self.test_mse,
            "val_mse": self.val_mse,
            "train_seconds": self.train_seconds,
            "inference_seconds": self.inference_seconds,
            "n_models": self.n_models,
        }

    @classmethod
    def from_dict(cls, blob: Mapping) -> "EvalRecord":
        return cls(
            dataset=str(blob["dataset"]),
            horizon=int(blob["horizon"]),
            seed=int(blob["seed"]),
            strategy_id=str(blob["strategy_id"]),
            test_mse=float(blob["test_mse"]),
            val_mse=None if blob.get("val_mse") in (None, "") else float(blob["val_mse"]),
            train_seconds=float(blob["train_seconds"]),
            inference_seconds=float(blob["inference_seconds"]),
            n_models=int(blob["n_models"]),
        )


def mse(pred: np.ndarray, actual: np.ndarray) -> float:
    """Mean of squared element-wise differences."""
    pred = np.asarray(pred, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    if pred.shape != actual.shape:
        raise ShapeError(f"shape mismatch: {pred.shape} vs {actual.shape}")
    if not (np.all(np.isfinite(pred)) and np.all(np.isfinite(actual))):
        raise DataError("mse inputs contain non-finite values")
    diff = pred - actual
    return float(np.mean(diff * diff))


def mean_forecast_error(train: TimeSeries, test_windows: WindowDataset) -> float:
    """MSE of the constant forecast equal to the train-split mean,
    evaluated over every test target.  A scale baseline."""
    if test_windows.n == 0:
        raise DataError("mean_forecast_error needs at least one test window")
    constant = float(train.values.mean())
    diff = test_windows.targets - constant
    return float(np.mean(diff * diff))


def relative_best(novel_mses: Sequence[float], existing_mses: Sequence[float]) -> float:
    """``min(novel) / min(existing)``; below 1 means a novel strategy
    beat every existing one."""
    if len(novel_mses) == 0 or len(existing_mses) == 0:
        raise DataError("relative_best needs non-empty novel and existing MSE sets")
    return float(min(novel_mses) / min(existing_mses))


def _tie_average_ranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.shape[0], dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < values.shape[0]:
        j = i
        while j + 1 < values.shape[0] and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


@dataclass(frozen=True)
class RankTable:
    """Per-task ranks and their cross-task aggregation.

    ``ranks[t, s]`` is the rank of strategy ``s`` on task ``t``; each row
    sums to ``k(k+1)/2``.  ``stderr`` is the sample standard deviation
    across tasks over ``sqrt(n_tasks)``.
    """

    tasks: tuple[tuple[str, int, int], ...]
    strategies: tuple[str, ...]
    ranks: np.ndarray
    avg_rank: np.ndarray
    stderr: np.ndarray


def rank(records: Iterable[EvalRecord]) -> RankTable:
    """Rank strategies within every task by ascending test MSE.

    Every task must contain every strategy exactly once; otherwise a
    coverage error lists the missing or duplicated cells.
    """
    records = list(records)
    if not records:
        raise CoverageError("no records to rank")
    strategies = tuple(sorted({r.strategy_id for r in records}))
    tasks = tuple(sorted({r.task for r in records}))
    index = {(r.task, r.strategy_id): r for r in records}
    if len(index) < len(records):
        seen: set = set()
        dupes = set()
        for r in records:
            key = (r.task, r.strategy_id)
            if key in seen:
                dupes.add(key)
            seen.add(key)
        raise CoverageError(f"duplicate records for cells: {sorted(dupes)[:5]}")
    missing = [
        (task, s) for task in tasks for s in strategies if (task, s) not in index
    ]
    if missing:
        raise CoverageError(
            f"ragged records: {len(missing)} missing cells, e.g. {missing[:5]}"
        )
    ranks = np.empty((len(tasks), len(strategies)))
    for t, task in enumerate(tasks):
        mses = np.array([index[(task, s)].test_mse for s in strategies])
        ranks[t] = _tie_average_ranks(mses)
    avg = ranks.mean(axis=0)
    if len(tasks) > 1:
        stderr = ranks.std(axis=0, ddof=1) / math.sqrt(len(tasks))
    else:
        stderr = np.zeros(len(strategies))
    return RankTable(tasks, strategies, ranks, avg, stderr)


@dataclass(frozen=True)
class FriedmanResult:
    statistic: float
    pvalue: float
    # Iman-Davenport F correction, emitted for reference alongside the
    # classical chi-square form.
    corrected_statistic: float
    corrected_pvalue: float
    n_tasks: int
    n_strategies: int


def friedman(table: RankTable) -> FriedmanResult:
    """Friedman chi-square test on a rank table.

    ``chi2 = 12/(N k (k+1)) * sum_j R_j^2 - 3 N (k+1)`` with ``R_j`` the
    rank sums, on ``k - 1`` degrees of freedom; the p-value comes from
    the regularised incomplete gamma function.
    """
    n, k = table.ranks.shape
    if n < 2 or k < 2:
        raise DataError(f"Friedman test needs >= 2 tasks and >= 2 strategies, got {n}x{k}")
    rank_sums = table.ranks.sum(axis=0)
    stat = 12.0 / (n * k * (k + 1)) * float((rank_sums**2).sum()) - 3.0 * n * (k + 1)
    stat = max(stat, 0.0)
    dof = k - 1
    pvalue = float(scipy.special.gammaincc(dof / 2.0, stat / 2.0))

    denom = n * (k - 1) - stat
    if denom <= 0:
        corrected, corrected_p = math.inf, 0.0
    else:
        corrected = (n - 1) * stat / denom
        d1, d2 = k - 1, (k - 1) * (n - 1)
        corrected_p = float(
            scipy.special.betainc(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * corrected))
        )
    return FriedmanResult(stat, pvalue, corrected, corrected_p, n, k)


def nemenyi_cd(k: int, n_tasks: int, alpha: float = 0.05) -> float:
    """Nemenyi critical difference: the average-rank gap below which two
    of ``k`` strategies compared on ``n_tasks`` tasks are not
    significantly different at level ``alpha``.
    """
    if k < _quantiles.K_MIN or k > _quantiles.K_MAX:
        raise DataError(f"critical values tabulated for {_quantiles.K_MIN} <= k <= {_quantiles.K_MAX}, got {k}")
    if n_tasks < 1:
        raise DataError(f"n_tasks must be >= 1, got {n_tasks}")
    table = None
    for level, values in _quantiles.Q.items():
        if math.isclose(alpha, level):
            table = values
    if table is None:
        raise DataError(f"alpha={alpha} not tabulated; available: {sorted(_quantiles.Q)}")
    q = table[k - _quantiles.K_MIN]
    return q * math.sqrt(k * (k + 1) / (6.0 * n_tasks))


def cliques(
    avg_ranks: Mapping[str, float] | Sequence[tuple[str, float]], cd: float
) -> list[tuple[str, ...]]:
    """Maximal groups of strategies whose average ranks all lie within
    one critical difference.

    Groups are contiguous in rank order; a group wholly contained in
    another is dropped.  Strategies inside a clique are ordered by rank.
    """
    pairs = list(avg_ranks.items()) if isinstance(avg_ranks, Mapping) else list(avg_ranks)
    pairs.sort(key=lambda p: (p[1], p[0]))
    n = len(pairs)
    result: list[tuple[str, ...]] = []
    prev_end = -1
    for i in range(n):
        end = i
        while end + 1 < n and pairs[end + 1][1] - pairs[i][1] <= cd:
            end += 1
        if end > prev_end:
            result.append(tuple(name for name, _ in pairs[i : end + 1]))
            prev_end = end
    return result


@dataclass(frozen=True)
class SignificanceResult:
    friedman: FriedmanResult
    alpha: float
    nemenyi_cd: float
    cliques: tuple[tuple[str, ...], ...]

    def to_dict(self) -> dict:
        return {
            "friedman_statistic": self.friedman.statistic,
            "friedman_pvalue": self.friedman.pvalue,
            "iman_davenport_statistic": self.friedman.corrected_statistic,
            "iman_davenport_pvalue": self.friedman.corrected_pvalue,
            "n_tasks": self.friedman.n_tasks,
            "n_strategies": self.friedman.n_strategies,
            "alpha": self.alpha,
            "nemenyi_cd": self.nemenyi_cd,
            "cliques": [list(c) for c in self.cliques],
        }


def significance(table: RankTable, alpha: float = 0.05) -> SignificanceResult:
    """Friedman test plus Nemenyi critical difference and rank cliques."""
    fr = friedman(table)
    cd = nemenyi_cd(len(table.strategies), len(table.tasks), alpha)
    groups = cliques(dict(zip(table.strategies, table.avg_rank)), cd)
    return SignificanceResult(fr, alpha, cd, tuple(groups))


@dataclass(frozen=True)
class Plane:
    """One region of the strategy plane: a base-percent x
    rectifier-percent matrix of values with the cells that reproduce
    already-known strategies flagged."""

    base_kind: StrategyKind
    rect_kind: StrategyKind
    percents: tuple[float, ...]
    values: np.ndarray
    stderr: np.ndarray | None
    existing: np.ndarray
    strategy_ids: tuple[tuple[str, ...], ...]

    @property
    def label(self) -> str:
        return region_label((self.base_kind, self.rect_kind))

    def to_dict(self) -> dict:
        return {
            "region": self.label,
            "percents": list(self.percents),
            "values": self.values.tolist(),
            "stderr": None if self.stderr is None else self.stderr.tolist(),
            "existing": self.existing.tolist(),
            "strategy_ids": [list(row) for row in self.strategy_ids],
        }


def _common_percent_grid(records: Sequence[EvalRecord]) -> tuple[float, ...]:
    horizons = sorted({r.horizon for r in records})
    grids = {
        h: tuple(sigma_to_percent(s, h) for s in divisor_set(h)) for h in horizons
    }
    first = grids[horizons[0]]
    for h, grid in grids.items():
        if grid != first:
            raise CoverageError(
                f"horizons {horizons} do not share one percentage grid; "
                f"{horizons[0]} gives {first} but {h} gives {grid}"
            )
    return first


def _cell_spec(
    region: tuple[StrategyKind, StrategyKind], pct_base: float, pct_rect: float, horizon: int
) -> ComposedSpec:
    base = AtomicSpec(region[0], percent_to_sigma(pct_base, horizon), horizon)
    rect = AtomicSpec(region[1], percent_to_sigma(pct_rect, horizon), horizon)
    return ComposedSpec(base, rect)


def plane_aggregate(
    records: Sequence[EvalRecord],
    region: tuple[StrategyKind, StrategyKind],
    table: RankTable | None = None,
) -> Plane:
    """Mean-rank heatmap for one (base kind, rectifier kind) region.

    Ranks are computed over all strategies present in ``records``;
    whole-horizon duplicate cells are re-expanded from the canonical
    record so the matrix covers the full divisor grid.  Missing cells
    are a coverage error.
    """
    records = list(records)
    table = table if table is not None else rank(records)
    percents = _common_percent_grid(records)
    horizon = records[0].horizon
    m = len(percents)
    values = np.empty((m, m))
    stderr = np.empty((m, m))
    existing = np.zeros((m, m), dtype=bool)
    ids = []
    lookup = {s: i for i, s in enumerate(table.strategies)}
    missing = []
    for i, pb in enumerate(percents):
        row_ids = []
        for j, pr in enumerate(percents):
            spec = _cell_spec(region, pb, pr, horizon)
            cell_id = spec.canonical().strategy_id
            row_ids.append(cell_id)
            idx = lookup.get(cell_id)
            if idx is None:
                missing.append(cell_id)
                continue
            values[i, j] = table.avg_rank[idx]
            stderr[i, j] = table.stderr[idx]
            existing[i, j] = is_existing_strategy(spec)
        ids.append(tuple(row_ids))
    if missing:
        raise CoverageError(
            f"region {region_label(region)} is missing records for cells: "
            f"{sorted(set(missing))}"
        )
    return Plane(region[0], region[1], percents, values, stderr, existing, tuple(ids))


def rank_planes(
    records: Sequence[EvalRecord], strict: bool = False
) -> dict[str, Plane]:
    """All fully-covered regions as mean-rank planes.

    With ``strict`` every region must be covered; otherwise uncovered
    regions are silently omitted.
    """
    records = list(records)
    table = rank(records)
    planes: dict[str, Plane] = {}
    for region in REGIONS:
        try:
            planes[region_label(region)] = plane_aggregate(records, region, table)
        except CoverageError:
            if strict:
                raise
    return planes


def timing_planes(
    records: Sequence[EvalRecord], mode: str = "train"
) -> dict[str, Plane]:
    """Mean train or inference seconds per cell, normalised so the
    fastest covered cell equals 1.0.  Regions without full coverage are
    omitted; non-positive recorded times are an error.
    """
    if mode not in ("train", "inference"):
        raise DataError(f"mode must be 'train' or 'inference', got {mode!r}")
    records = list(records)
    if not records:
        raise CoverageError("no records for timing plane")
    percents = _common_percent_grid(records)
    horizon = records[0].horizon
    attr = "train_seconds" if mode == "train" else "inference_seconds"
    sums: dict[str, list[float]] = {}
    for r in records:
        value = getattr(r, attr)
        if value <= 0:
            raise DataError(
                f"record ({r.dataset}, H={r.horizon}, seed={r.seed}, {r.strategy_id}) "
                f"has non-positive {attr} {value}"
            )
        sums.setdefault(r.strategy_id, []).append(value)
    means = {sid: float(np.mean(v)) for sid, v in sums.items()}

    raw: dict[str, np.ndarray] = {}
    ids_by_region: dict[str, tuple] = {}
    existing_by_region: dict[str, np.ndarray] = {}
    m = len(percents)
    for region in REGIONS:
        values = np.empty((m, m))
        existing = np.zeros((m, m), dtype=bool)
        ids = []
        covered = True
        for i, pb in enumerate(percents):
            row_ids = []
            for j, pr in enumerate(percents):
                spec = _cell_spec(region, pb, pr, horizon)
                cell_id = spec.canonical().strategy_id
                row_ids.append(cell_id)
                if cell_id not in means:
                    covered = False
                else:
                    values[i, j] = means[cell_id]
                    existing[i, j] = is_existing_strategy(spec)
            ids.append(tuple(row_ids))
        if covered:
            label = region_label(region)
            raw[label] = values
            ids_by_region[label] = tuple(ids)
            existing_by_region[label] = existing
    if not raw:
        raise CoverageError("no region of the timing plane is fully covered")
    global_min = min(float(v.min()) for v in raw.values())
    planes = {}
    for label, values in raw.items():
        base, rect = parse_region(label)
        planes[label] = Plane(
            base,
            rect,
            percents,
            values / global_min,
            None,
            existing_by_region[label],
            ids_by_region[label],
        )
    return planes


def records_to_csv(records: Sequence[EvalRecord], path: str) -> None:
    import csv as _csv

    with open(path, "w", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in records:
            blob = r.to_dict()
            writer.writerow(["" if blob[c] is None else blob[c] for c in CSV_COLUMNS])


def records_from_csv(path: str) -> list[EvalRecord]:
    import csv as _csv

    with open(path, newline="") as fh:
        reader = _csv.DictReader(fh)
        return [EvalRecord.from_dict(row) for row in reader]


def append_records_jsonl(records: Sequence[EvalRecord], path: str) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")


def records_from_jsonl(path: str) -> list[EvalRecord]:
    """Read records, tolerating a truncated final line (interrupted
    writer)."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                records.append(EvalRecord.from_dict(json.loads(line)))
            except json.JSONDecodeError:
                continue
    return records

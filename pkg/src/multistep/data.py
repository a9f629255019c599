"""Dataset acquisition and preparation.

CSV ingestion (single column or multivariate collapse), a chaotic
delay-equation generator, contiguous train/val/test splitting, and
train-statistics standardisation.  All operations are pure and
deterministic.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _backend
from .core import TimeSeries
from .errors import ConstantSeriesError, DataError, IntegrationError

__all__ = [
    "SplitSeries",
    "Standardizer",
    "MGParams",
    "load_csv",
    "mackey_glass",
    "split",
    "standardize_split",
    "save_csv",
]

DEFAULT_FRACTIONS = (0.8, 0.1, 0.1)
COLLAPSE_MODES = ("mean", "sum", "first")


@dataclass(frozen=True)
class SplitSeries:
    """Contiguous, order-preserving train/val/test partition of a series."""

    train: TimeSeries
    val: TimeSeries
    test: TimeSeries
    fractions: tuple[float, float, float] = DEFAULT_FRACTIONS


@dataclass(frozen=True)
class Standardizer:
    """Z-scoring statistics computed on the train split only."""

    mean: float
    std: float

    def transform(self, values: np.ndarray) -> np.ndarray:
        return (np.asarray(values, dtype=np.float64) - self.mean) / self.std

    def inverse(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values, dtype=np.float64) * self.std + self.mean

    @classmethod
    def fit(cls, train_values: np.ndarray) -> "Standardizer":
        values = np.asarray(train_values, dtype=np.float64)
        std = float(values.std())
        if std == 0.0:
            raise ConstantSeriesError("cannot standardise a constant train split")
        return cls(mean=float(values.mean()), std=std)


@dataclass(frozen=True)
class MGParams:
    """Parameters of the chaotic delay-feedback generator.

    Defaults are the canonical chaotic regime.  ``seed`` randomises the
    initial history only; the integration itself is deterministic.
    """

    beta: float = 0.2
    gamma: float = 0.1
    exponent: float = 10.0
    tau: int = 17
    dt: float = 1.0
    warmup: int = 1000
    length: int = 10000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.tau < 1:
            raise DataError(f"tau must be >= 1, got {self.tau}")
        if self.length < 1:
            raise DataError(f"length must be >= 1, got {self.length}")
        if self.dt <= 0:
            raise DataError(f"dt must be positive, got {self.dt}")
        if abs(round(1.0 / self.dt) * self.dt - 1.0) > 1e-9:
            raise DataError(
                f"1/dt must be an integer so the series can be subsampled to unit steps, "
                f"got dt={self.dt}"
            )
        if int(round(self.tau / self.dt)) < 1:
            raise DataError(f"tau/dt must be >= 1, got {self.tau}/{self.dt}")
        for name in ("beta", "gamma", "exponent", "dt"):
            if not np.isfinite(getattr(self, name)):
                raise DataError(f"{name} must be finite")


def _parse_cell(token: str) -> float:
    value = float(token)
    if not np.isfinite(value):
        raise ValueError(f"non-finite value {token!r}")
    return value


def load_csv(
    path: str,
    column: str | int = "collapse",
    header: str = "auto",
    collapse_mode: str = "mean",
    name: str | None = None,
) -> TimeSeries:
    """Read one series from a CSV file.

    ``column`` selects a column by name (requires a header) or 0-based
    index; the default ``"collapse"`` reduces all columns row-wise using
    ``collapse_mode`` (``mean``, ``sum`` or ``first``).  ``header`` is
    ``"auto"`` (detect), ``"yes"`` or ``"no"``.  Any row with a missing
    or unparsable value is an error naming that row.
    """
    if collapse_mode not in COLLAPSE_MODES:
        raise DataError(f"unknown collapse mode {collapse_mode!r}; expected {COLLAPSE_MODES}")
    try:
        with open(path, newline="") as fh:
            rows = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    except OSError as exc:
        raise DataError(f"cannot read {path!r}: {exc}") from exc
    if not rows:
        raise DataError(f"{path!r} contains no data rows")

    columns = [c.strip() for c in rows[0]]
    if header == "auto":
        try:
            for cell in columns:
                _parse_cell(cell)
            has_header = False
        except ValueError:
            has_header = True
    elif header in ("yes", "no"):
        has_header = header == "yes"
    else:
        raise DataError(f"header must be 'auto', 'yes' or 'no', got {header!r}")

    names = columns if has_header else [str(i) for i in range(len(columns))]
    data_rows = rows[1:] if has_header else rows
    if not data_rows:
        raise DataError(f"{path!r} has a header but no data rows")

    if column == "collapse":
        selected = list(range(len(names)))
    elif isinstance(column, int) or (isinstance(column, str) and column.lstrip("-").isdigit()):
        index = int(column)
        if not 0 <= index < len(names):
            raise DataError(f"column index {index} out of range for {len(names)} columns")
        selected = [index]
    else:
        if not has_header:
            raise DataError(f"column {column!r} requested but the file has no header")
        if column not in names:
            raise DataError(f"column {column!r} not found; available: {names}")
        selected = [names.index(column)]

    values = np.empty((len(data_rows), len(selected)))
    for i, row in enumerate(data_rows):
        for j, col in enumerate(selected):
            try:
                values[i, j] = _parse_cell(row[col].strip()) if col < len(row) else np.nan
                if not np.isfinite(values[i, j]):
                    raise ValueError
            except (ValueError, IndexError):
                cell = row[col] if col < len(row) else "<missing>"
                raise DataError(
                    f"{path!r}: unparsable or missing value {cell!r} in row {i + 1}"
                ) from None

    if column == "collapse" and len(selected) > 1:
        if collapse_mode == "mean":
            series = values.mean(axis=1)
        elif collapse_mode == "sum":
            series = values.sum(axis=1)
        else:
            series = values[:, 0]
    else:
        series = values[:, 0]
    return TimeSeries(name=name or str(path), values=series, source="csv")


def save_csv(series: TimeSeries, path: str) -> None:
    """Write a series as a one-column CSV with a ``value`` header."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["value"])
        for v in series.values:
            writer.writerow([repr(float(v))])


def mackey_glass(params: MGParams = MGParams()) -> TimeSeries:
    """Generate a chaotic series by fixed-step fourth-order integration
    of the delay-feedback equation
    ``dx/dt = beta*x(t-tau)/(1 + x(t-tau)^n) - gamma*x(t)``.

    The initial history is a seeded perturbation around 1.2, a warmup
    prefix is discarded, the trajectory is subsampled to unit steps, and
    the emitted series is mean-centred.
    """
    rng = np.random.default_rng(params.seed)
    delay = int(round(params.tau / params.dt))
    stride = int(round(1.0 / params.dt))
    total_units = params.warmup + params.length
    steps = total_units * stride

    buf = np.empty(delay + steps + 1)
    buf[:delay] = 1.2 + 0.1 * (rng.random(delay) - 0.5)
    buf[delay] = 1.2
    status = _backend.mg_integrate(
        buf, delay, steps, params.beta, params.gamma, params.exponent, params.dt
    )
    if status >= 0:
        raise IntegrationError(f"integration diverged (|x| > 1e6) at step {status}")
    trajectory = buf[delay:]
    series = trajectory[::stride][params.warmup : params.warmup + params.length]
    series = series - series.mean()
    return TimeSeries(name=f"mg_{params.length}", values=series, source="generated")


def split(
    series: TimeSeries, fractions: Sequence[float] = DEFAULT_FRACTIONS
) -> SplitSeries:
    """Partition a series into contiguous train/val/test segments.

    Boundaries are the floored cumulative fractions; the split is
    lossless (concatenating the three parts reproduces the input).
    """
    fracs = tuple(float(f) for f in fractions)
    if len(fracs) != 3 or any(f <= 0 for f in fracs):
        raise DataError(f"fractions must be three positive numbers, got {fractions}")
    if abs(sum(fracs) - 1.0) > 1e-9:
        raise DataError(f"fractions must sum to 1, got {sum(fracs)}")
    t = len(series)
    b1 = int(np.floor(t * fracs[0]))
    b2 = int(np.floor(t * (fracs[0] + fracs[1])))
    if b1 < 1 or b2 <= b1 or b2 >= t:
        raise DataError(
            f"series of length {t} is too short to split into fractions {fracs}"
        )
    values = series.values
    return SplitSeries(
        train=TimeSeries(f"{series.name}.train", values[:b1], series.source),
        val=TimeSeries(f"{series.name}.val", values[b1:b2], series.source),
        test=TimeSeries(f"{series.name}.test", values[b2:], series.source),
        fractions=fracs,
    )


def standardize_split(splits: SplitSeries) -> tuple[SplitSeries, Standardizer]:
    """Z-score all three splits using statistics of the train split only
    (no information from val or test leaks into the transform)."""
    scaler = Standardizer.fit(splits.train.values)
    return (
        SplitSeries(
            train=TimeSeries(splits.train.name, scaler.transform(splits.train.values), splits.train.source),
            val=TimeSeries(splits.val.name, scaler.transform(splits.val.values), splits.val.source),
            test=TimeSeries(splits.test.name, scaler.transform(splits.test.values), splits.test.source),
            fractions=splits.fractions,
        ),
        scaler,
    )

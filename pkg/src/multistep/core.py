"""Core domain types: series, windows, divisor arithmetic, and the
strategy-space grammar shared by every other module.

A multi-output forecasting strategy is identified by a kind (recursive,
direct, or direct-recursive multi-output) and a block size ``sigma`` that
must divide the forecast horizon.  Identifiers serialise ``sigma`` as a
percentage of the horizon so that strategies are comparable across
horizons: ``ρ:50`` means "recursive multi-output covering half the
horizon per step" regardless of whether the horizon is 10 or 80.  A
composed strategy pairs a base with an optional rectifier and is written
``<base>|<rectifier>``, e.g. ``ρ:10|δ:10``.

All types here are immutable after construction and safe to share across
workers; the module-level operations are pure functions.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Sequence

import numpy as np

from .errors import (
    DataError,
    EmptyDatasetError,
    InvalidHorizonError,
    InvalidParameterisationError,
)

__all__ = [
    "TimeSeries",
    "HorizonSpec",
    "StrategyKind",
    "AtomicSpec",
    "ComposedSpec",
    "WindowDataset",
    "divisor_set",
    "percent_to_sigma",
    "sigma_to_percent",
    "make_windows",
    "strategy_set",
    "enumerate_strategy_space",
    "parse_strategy",
    "derive_seed",
]


@dataclass(frozen=True)
class TimeSeries:
    """A named univariate sequence of finite reals, uniformly sampled.

    Parameters
    ----------
    name : str
        Identifier used in records and file names.
    values : array_like of float
        Observations in time order.  Must be non-empty and finite.
    source : str
        Provenance tag, e.g. ``"csv"`` or ``"generated"``.
    """

    name: str
    values: np.ndarray
    source: str = "generated"

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise DataError(f"series {self.name!r} must be 1-dimensional, got shape {values.shape}")
        if values.size < 1:
            raise DataError(f"series {self.name!r} is empty")
        if not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.isfinite(values))[0])
            raise DataError(f"series {self.name!r} has a non-finite value at index {bad}")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.values.size)

    def summary(self) -> dict:
        """Length, mean, variance and range of the series."""
        v = self.values
        return {
            "length": int(v.size),
            "mean": float(v.mean()),
            "variance": float(v.var()),
            "range": float(v.max() - v.min()),
        }


@dataclass(frozen=True)
class HorizonSpec:
    """Forecast task geometry: ``horizon`` future steps from a ``window``
    of past observations."""

    horizon: int
    window: int

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise InvalidHorizonError(f"horizon must be >= 1, got {self.horizon}")
        if self.window < 1:
            raise InvalidHorizonError(f"window must be >= 1, got {self.window}")


def divisor_set(horizon: int) -> tuple[int, ...]:
    """All positive integers dividing ``horizon``, ascending.

    These are the admissible output-block sizes for multi-output
    strategies at this horizon.
    """
    if horizon < 1:
        raise InvalidHorizonError(f"horizon must be >= 1, got {horizon}")
    return tuple(s for s in range(1, horizon + 1) if horizon % s == 0)


def sigma_to_percent(sigma: int, horizon: int) -> float:
    """Express a block size as a percentage of the horizon."""
    return 100.0 * sigma / horizon


def _format_percent(pct: float) -> str:
    return f"{pct:.10g}"


def percent_to_sigma(pct: float, horizon: int) -> int:
    """Convert a percentage-of-horizon parameter back to a block size.

    Raises
    ------
    InvalidParameterisationError
        If ``pct`` does not correspond to a divisor of ``horizon``.  The
        message names the nearest valid percentages.
    """
    if horizon < 1:
        raise InvalidHorizonError(f"horizon must be >= 1, got {horizon}")
    if not (0.0 < pct <= 100.0):
        raise InvalidParameterisationError(f"percentage must be in (0, 100], got {pct}")
    raw = pct * horizon / 100.0
    sigma = int(round(raw))
    divisors = divisor_set(horizon)
    if abs(raw - sigma) > 1e-6 * max(1.0, abs(raw)) or sigma not in divisors:
        valid = [sigma_to_percent(s, horizon) for s in divisors]
        below = max((v for v in valid if v <= pct), default=valid[0])
        above = min((v for v in valid if v >= pct), default=valid[-1])
        raise InvalidParameterisationError(
            f"{pct}% of horizon {horizon} is not a divisor; nearest valid "
            f"percentages are {_format_percent(below)}% and {_format_percent(above)}%"
        )
    return sigma


class StrategyKind(Enum):
    """The three multi-output strategy families.

    ``REC_MO`` iterates a single model, feeding predictions back into the
    input window.  ``DIR_MO`` trains one independent model per horizon
    segment.  ``DIRREC_MO`` also trains one model per segment but chains
    them, each consuming the previous segments' predictions.
    """

    REC_MO = "ρ"
    DIR_MO = "δ"
    DIRREC_MO = "ι"

    @property
    def symbol(self) -> str:
        return self.value


KIND_ORDER: tuple[StrategyKind, ...] = (
    StrategyKind.REC_MO,
    StrategyKind.DIR_MO,
    StrategyKind.DIRREC_MO,
)

_KIND_ALIASES = {
    "ρ": StrategyKind.REC_MO,
    "r": StrategyKind.REC_MO,
    "rho": StrategyKind.REC_MO,
    "recmo": StrategyKind.REC_MO,
    "δ": StrategyKind.DIR_MO,
    "d": StrategyKind.DIR_MO,
    "delta": StrategyKind.DIR_MO,
    "dirmo": StrategyKind.DIR_MO,
    "ι": StrategyKind.DIRREC_MO,
    "i": StrategyKind.DIRREC_MO,
    "iota": StrategyKind.DIRREC_MO,
    "dirrecmo": StrategyKind.DIRREC_MO,
}


def parse_kind(token: str) -> StrategyKind:
    try:
        return _KIND_ALIASES[token.strip().lower()]
    except KeyError:
        raise InvalidParameterisationError(
            f"unknown strategy kind {token!r}; expected one of ρ/δ/ι (or r/d/i)"
        ) from None


@dataclass(frozen=True)
class AtomicSpec:
    """One multi-output strategy: a kind plus a block size for a horizon.

    ``sigma`` must divide ``horizon``.  At ``sigma == horizon`` all three
    kinds denote the same single-model strategy; :meth:`canonical` maps
    that case to ``DIR_MO`` so equivalent parameterisations compare equal
    after canonicalisation.
    """

    kind: StrategyKind
    sigma: int
    horizon: int

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise InvalidHorizonError(f"horizon must be >= 1, got {self.horizon}")
        if self.sigma < 1 or self.horizon % self.sigma != 0:
            divisors = divisor_set(self.horizon)
            raise InvalidParameterisationError(
                f"sigma={self.sigma} does not divide horizon {self.horizon}; "
                f"valid values: {list(divisors)}"
            )

    @property
    def percent(self) -> float:
        return sigma_to_percent(self.sigma, self.horizon)

    @property
    def segments(self) -> int:
        """Number of horizon segments (models for the direct families)."""
        return self.horizon // self.sigma

    @property
    def model_count(self) -> int:
        spec = self.canonical()
        return 1 if spec.kind is StrategyKind.REC_MO else spec.segments

    def canonical(self) -> "AtomicSpec":
        if self.sigma == self.horizon and self.kind is not StrategyKind.DIR_MO:
            return AtomicSpec(StrategyKind.DIR_MO, self.sigma, self.horizon)
        return self

    @property
    def strategy_id(self) -> str:
        return f"{self.kind.symbol}:{_format_percent(self.percent)}"

    def __str__(self) -> str:
        return self.strategy_id


@dataclass(frozen=True)
class ComposedSpec:
    """A base strategy plus an optional residual-correcting rectifier.

    When ``rectifier`` is absent the spec denotes the atomic base
    strategy alone.  Base and rectifier must share the same horizon.
    """

    base: AtomicSpec
    rectifier: AtomicSpec | None = None

    def __post_init__(self) -> None:
        if self.rectifier is not None and self.rectifier.horizon != self.base.horizon:
            raise InvalidParameterisationError(
                f"base horizon {self.base.horizon} != rectifier horizon {self.rectifier.horizon}"
            )

    @property
    def horizon(self) -> int:
        return self.base.horizon

    def canonical(self) -> "ComposedSpec":
        rect = self.rectifier.canonical() if self.rectifier is not None else None
        return ComposedSpec(self.base.canonical(), rect)

    @property
    def strategy_id(self) -> str:
        if self.rectifier is None:
            return self.base.strategy_id
        return f"{self.base.strategy_id}|{self.rectifier.strategy_id}"

    @property
    def model_count(self) -> int:
        count = self.base.model_count
        if self.rectifier is not None:
            count += self.rectifier.model_count
        return count

    def __str__(self) -> str:
        return self.strategy_id


def parse_strategy(text: str, horizon: int) -> ComposedSpec:
    """Parse a strategy identifier like ``ρ:10`` or ``δ:50|δ:10``.

    ASCII kind aliases (``r``/``d``/``i``) are accepted on input;
    emitted identifiers always use the canonical symbols.
    """
    parts = [p.strip() for p in text.strip().split("|")]
    if not 1 <= len(parts) <= 2 or any(not p for p in parts):
        raise InvalidParameterisationError(
            f"cannot parse strategy {text!r}: expected '<kind>:<pct>' or "
            f"'<kind>:<pct>|<kind>:<pct>'"
        )
    atoms = []
    for part in parts:
        if ":" not in part:
            raise InvalidParameterisationError(
                f"cannot parse strategy token {part!r}: expected '<kind>:<pct>'"
            )
        kind_token, pct_token = part.split(":", 1)
        kind = parse_kind(kind_token)
        try:
            pct = float(pct_token.rstrip("%"))
        except ValueError:
            raise InvalidParameterisationError(
                f"cannot parse percentage {pct_token!r} in strategy {text!r}"
            ) from None
        atoms.append(AtomicSpec(kind, percent_to_sigma(pct, horizon), horizon))
    return ComposedSpec(atoms[0], atoms[1] if len(atoms) == 2 else None)


@dataclass(frozen=True)
class WindowDataset:
    """Supervised windows carved from a series.

    ``inputs`` holds one window per row, oldest value first (newest
    last); row ``i`` of ``targets`` holds the values immediately
    following window ``i``.  Both arrays are read-only.
    """

    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self) -> None:
        inputs = np.ascontiguousarray(self.inputs, dtype=np.float64)
        targets = np.ascontiguousarray(self.targets, dtype=np.float64)
        if inputs.ndim != 2 or targets.ndim != 2:
            raise DataError("inputs and targets must be 2-dimensional")
        if inputs.shape[0] != targets.shape[0]:
            raise DataError(
                f"row mismatch: {inputs.shape[0]} input rows vs {targets.shape[0]} target rows"
            )
        if not (np.all(np.isfinite(inputs)) and np.all(np.isfinite(targets))):
            raise DataError("window dataset contains non-finite values")
        inputs.flags.writeable = False
        targets.flags.writeable = False
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "targets", targets)

    @property
    def n(self) -> int:
        return int(self.inputs.shape[0])

    @property
    def window(self) -> int:
        return int(self.inputs.shape[1])

    @property
    def horizon(self) -> int:
        return int(self.targets.shape[1])


def make_windows(series: TimeSeries, spec: HorizonSpec) -> WindowDataset:
    """Slide a ``(window, horizon)`` frame over a series.

    Produces ``len(series) - window - horizon + 1`` aligned rows; windows
    are contiguous slices in time order, never shuffled.

    Raises
    ------
    EmptyDatasetError
        If the series is shorter than ``window + horizon``.
    """
    w, h = spec.window, spec.horizon
    t = len(series)
    if t < w + h:
        raise EmptyDatasetError(
            f"series {series.name!r} has {t} observations but window={w}, "
            f"horizon={h} requires at least {w + h}"
        )
    frames = np.lib.stride_tricks.sliding_window_view(series.values, w + h)
    return WindowDataset(frames[:, :w], frames[:, w:])


def strategy_set(horizon: int) -> list[AtomicSpec]:
    """The raw multi-output strategy set for a horizon, before
    deduplication: all three kinds over every divisor (``3 * d(horizon)``
    entries, where the three ``sigma == horizon`` entries denote the same
    strategy)."""
    divisors = divisor_set(horizon)
    return [AtomicSpec(kind, s, horizon) for kind in KIND_ORDER for s in divisors]


def _canonical_atoms(horizon: int) -> list[AtomicSpec]:
    seen: set[AtomicSpec] = set()
    atoms: list[AtomicSpec] = []
    for spec in (s.canonical() for s in strategy_set(horizon)):
        if spec not in seen:
            seen.add(spec)
            atoms.append(spec)
    # Reorder so each kind block lists sigma ascending with the single
    # canonical whole-horizon entry in the DIR_MO block.
    atoms.sort(key=lambda s: (KIND_ORDER.index(s.kind), s.sigma))
    return atoms


def enumerate_strategy_space(horizon: int, include_rectifiers: bool = False) -> list[ComposedSpec]:
    """Every distinct strategy for a horizon, deterministically ordered.

    The atomic layer has ``3*d - 2`` members for ``d`` divisors (the
    whole-horizon entries of the three kinds collapse to one).  With
    ``include_rectifiers`` the full grid follows: every atomic base
    paired with every atomic rectifier, after the base-only entries.
    """
    atoms = _canonical_atoms(horizon)
    specs = [ComposedSpec(a) for a in atoms]
    if include_rectifiers:
        specs.extend(ComposedSpec(b, r) for b in atoms for r in atoms)
    return specs


def derive_seed(*parts: object) -> int:
    """Derive a stable 63-bit seed from arbitrary labelled parts.

    Used to give every (strategy, task, model) cell its own reproducible
    random stream: adding strategies to a sweep never perturbs the seeds
    of existing cells.
    """
    digest = hashlib.sha256("|".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:8], "big") % (2**63)

"""Training and forecasting for atomic strategies and base+rectifier
compositions.

An atomic strategy covers the horizon in blocks of ``sigma`` steps:

* ``REC_MO`` fits one model on (window -> next sigma values) and iterates
  it, appending each prediction to the window and dropping the oldest
  entries (constant window width).
* ``DIR_MO`` fits one independent model per block, all reading the
  original window.
* ``DIRREC_MO`` fits one model per block on windows shifted forward by
  the preceding blocks.  Training inputs use the true series values in
  the shifted positions (teacher forcing); at forecast time the model's
  own predictions fill them, with the same constant-width window update
  as ``REC_MO``.

A composed strategy trains a base, computes its in-sample residuals on
the training windows, trains a rectifier on (window -> residual vector),
and forecasts the element-wise sum of the two.

Recursive-family strategies (``REC_MO``/``DIRREC_MO`` with sigma below
the horizon) require ``window >= horizon`` so that at least one observed
value remains in the most-shifted input.
"""

from __future__ import annotations

import gzip
import json
import time
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from . import learners
from .core import (
    AtomicSpec,
    ComposedSpec,
    StrategyKind,
    WindowDataset,
    derive_seed,
    divisor_set,
)
from .errors import AliasError, InvalidParameterisationError, ShapeError
from .learners import FittedLearner, LearnerConfig

FITTED_FORMAT_VERSION = 1

__all__ = [
    "FittedAtomicStrategy",
    "FittedComposedStrategy",
    "train_atomic",
    "forecast_atomic",
    "forecast_atomic_matrix",
    "train_composed",
    "forecast_composed",
    "forecast_composed_matrix",
    "classic_aliases",
    "build_alias",
    "is_existing_strategy",
    "save_fitted",
    "load_fitted",
    "shifted_training_inputs",
]


@dataclass
class FittedAtomicStrategy:
    """Trained learners bound to an atomic spec (one for ``REC_MO``,
    ``horizon // sigma`` otherwise)."""

    spec: AtomicSpec
    models: list[FittedLearner]
    learner_config: LearnerConfig
    train_seconds: float

    @property
    def window(self) -> int:
        return self.models[0].input_dim

    @property
    def n_models(self) -> int:
        return len(self.models)


@dataclass
class FittedComposedStrategy:
    """A fitted base plus an optional fitted rectifier."""

    spec: ComposedSpec
    base: FittedAtomicStrategy
    rectifier: FittedAtomicStrategy | None
    train_seconds: float

    @property
    def n_models(self) -> int:
        count = self.base.n_models
        if self.rectifier is not None:
            count += self.rectifier.n_models
        return count


def _check_geometry(spec: AtomicSpec, data: WindowDataset) -> None:
    if data.horizon != spec.horizon:
        raise ShapeError(
            f"dataset horizon {data.horizon} does not match strategy horizon {spec.horizon}"
        )


def check_window_covers_horizon(specs, horizon: int, window: int) -> None:
    """Run-level precondition: recursive-family strategies below the
    whole-horizon block need ``window >= horizon`` so the most-shifted
    forecast input still contains at least one observed value.

    The low-level train/forecast mechanics stay well-defined for any
    window, so this is enforced at run preparation, not in the library.
    """
    for spec in specs:
        atoms = [spec.base] if spec.rectifier is None else [spec.base, spec.rectifier]
        for a in (x.canonical() for x in atoms):
            if (
                a.kind in (StrategyKind.REC_MO, StrategyKind.DIRREC_MO)
                and a.sigma < a.horizon
                and window < horizon
            ):
                raise InvalidParameterisationError(
                    f"strategy {spec.strategy_id} iterates on its own predictions "
                    f"and needs window >= horizon, got window={window} < horizon={horizon}"
                )


def shifted_training_inputs(data: WindowDataset, sigma: int, index: int) -> np.ndarray:
    """Training inputs for the ``index``-th (0-based) chained model:
    windows advanced by ``index * sigma`` steps using true target values."""
    if index == 0:
        return data.inputs
    extended = np.hstack([data.inputs, data.targets])
    shift = index * sigma
    return np.ascontiguousarray(extended[:, shift : shift + data.window])


def train_atomic(
    spec: AtomicSpec, config: LearnerConfig, data: WindowDataset
) -> FittedAtomicStrategy:
    """Fit all models an atomic strategy needs on a window dataset.

    The spec is canonicalised first, so the three whole-horizon
    parameterisations share one code path.  Model ``i`` trains with a
    seed derived from ``(config.seed, i)``.
    """
    spec = spec.canonical()
    _check_geometry(spec, data)
    start = time.process_time()
    models: list[FittedLearner] = []
    sigma = spec.sigma
    if spec.kind is StrategyKind.REC_MO:
        cfg = config.with_seed(derive_seed(config.seed, 0))
        models.append(learners.fit(cfg, data.inputs, data.targets[:, :sigma]))
    elif spec.kind is StrategyKind.DIR_MO:
        for i in range(spec.segments):
            cfg = config.with_seed(derive_seed(config.seed, i))
            block = data.targets[:, i * sigma : (i + 1) * sigma]
            models.append(learners.fit(cfg, data.inputs, block))
    else:  # DIRREC_MO
        for i in range(spec.segments):
            cfg = config.with_seed(derive_seed(config.seed, i))
            block = data.targets[:, i * sigma : (i + 1) * sigma]
            models.append(learners.fit(cfg, shifted_training_inputs(data, sigma, i), block))
    return FittedAtomicStrategy(spec, models, config, time.process_time() - start)


def forecast_atomic_matrix(fitted: FittedAtomicStrategy, X: np.ndarray) -> np.ndarray:
    """Forecast full horizons for a batch of windows (one per row)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != fitted.window:
        raise ShapeError(f"expected windows of length {fitted.window}, got shape {X.shape}")
    spec = fitted.spec
    if spec.kind is StrategyKind.DIR_MO:
        return np.hstack([model.predict_matrix(X) for model in fitted.models])
    # Recursive families share the window update; DIRREC_MO swaps models.
    window = X
    blocks = []
    for step in range(spec.segments):
        model = fitted.models[0 if spec.kind is StrategyKind.REC_MO else step]
        pred = model.predict_matrix(window)
        blocks.append(pred)
        window = np.hstack([window, pred])[:, -fitted.window :]
    return np.hstack(blocks)


def forecast_atomic(fitted: FittedAtomicStrategy, x: np.ndarray) -> np.ndarray:
    """Forecast one full horizon from one window."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError(f"expected a 1-D window, got shape {x.shape}")
    return forecast_atomic_matrix(fitted, x[np.newaxis, :])[0]


def train_composed(
    spec: ComposedSpec,
    config: LearnerConfig,
    data: WindowDataset,
    rectifier_config: LearnerConfig | None = None,
) -> FittedComposedStrategy:
    """Fit a base strategy and, if requested, a rectifier on the base's
    in-sample residuals.

    The base is trained on the full dataset and its residuals are taken
    on the same windows, one residual vector per (window, horizon offset)
    pair, so base and rectifier read identical inputs.
    """
    start = time.process_time()
    base = train_atomic(spec.base, config, data)
    rectifier = None
    if spec.rectifier is not None:
        base_forecasts = forecast_atomic_matrix(base, data.inputs)
        residuals = data.targets - base_forecasts
        rect_data = WindowDataset(data.inputs, residuals)
        rectifier = train_atomic(spec.rectifier, rectifier_config or config, rect_data)
    return FittedComposedStrategy(spec, base, rectifier, time.process_time() - start)


def forecast_composed_matrix(fitted: FittedComposedStrategy, X: np.ndarray) -> np.ndarray:
    forecast = forecast_atomic_matrix(fitted.base, X)
    if fitted.rectifier is not None:
        forecast = forecast + forecast_atomic_matrix(fitted.rectifier, X)
    return forecast


def forecast_composed(fitted: FittedComposedStrategy, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError(f"expected a 1-D window, got shape {x.shape}")
    return forecast_composed_matrix(fitted, x[np.newaxis, :])[0]


def _atom(kind: StrategyKind, sigma: int, horizon: int) -> AtomicSpec:
    return AtomicSpec(kind, sigma, horizon)


def classic_aliases() -> dict[str, Callable[..., ComposedSpec]]:
    """Constructors for the named strategies from the literature.

    Parameterless aliases take only a horizon; the ``*mo`` aliases also
    take ``sigma``.
    """

    def recursive(h: int) -> ComposedSpec:
        return ComposedSpec(_atom(StrategyKind.REC_MO, 1, h))

    def direct(h: int) -> ComposedSpec:
        return ComposedSpec(_atom(StrategyKind.DIR_MO, 1, h))

    def dirrec(h: int) -> ComposedSpec:
        return ComposedSpec(_atom(StrategyKind.DIRREC_MO, 1, h))

    def mimo(h: int) -> ComposedSpec:
        return ComposedSpec(_atom(StrategyKind.DIR_MO, h, h))

    def rectify(h: int) -> ComposedSpec:
        return ComposedSpec(
            _atom(StrategyKind.REC_MO, 1, h), _atom(StrategyKind.DIR_MO, 1, h)
        )

    def recmo(h: int, sigma: int) -> ComposedSpec:
        return ComposedSpec(_atom(StrategyKind.REC_MO, sigma, h).canonical())

    def dirmo(h: int, sigma: int) -> ComposedSpec:
        return ComposedSpec(_atom(StrategyKind.DIR_MO, sigma, h))

    def dirrecmo(h: int, sigma: int) -> ComposedSpec:
        return ComposedSpec(_atom(StrategyKind.DIRREC_MO, sigma, h).canonical())

    def rectifymo(h: int, sigma: int) -> ComposedSpec:
        return ComposedSpec(
            _atom(StrategyKind.REC_MO, sigma, h), _atom(StrategyKind.DIR_MO, sigma, h)
        )

    return {
        "recursive": recursive,
        "direct": direct,
        "dirrec": dirrec,
        "mimo": mimo,
        "rectify": rectify,
        "recmo": recmo,
        "dirmo": dirmo,
        "dirrecmo": dirrecmo,
        "rectifymo": rectifymo,
    }


_PARAMETERISED_ALIASES = {"recmo", "dirmo", "dirrecmo", "rectifymo"}


def build_alias(name: str, horizon: int, sigma: int | None = None) -> ComposedSpec:
    """Resolve an alias name (e.g. ``"rectify"``, ``"dirmo"``) to a spec."""
    aliases = classic_aliases()
    key = name.strip().lower()
    if key not in aliases:
        raise AliasError(f"unknown strategy alias {name!r}; known: {sorted(aliases)}")
    if key in _PARAMETERISED_ALIASES:
        if sigma is None:
            raise AliasError(f"alias {name!r} requires a sigma parameter")
        if sigma not in divisor_set(horizon):
            raise InvalidParameterisationError(
                f"sigma={sigma} does not divide horizon {horizon}"
            )
        return aliases[key](horizon, sigma)
    if sigma is not None:
        raise AliasError(f"alias {name!r} takes no sigma parameter")
    return aliases[key](horizon)


def is_existing_strategy(spec: ComposedSpec) -> bool:
    """Whether a spec reproduces a strategy already named in the
    literature (anything atomic, or a recursive base rectified by a
    direct rectifier with the same block size); every other composition
    is novel."""
    spec = spec.canonical()
    if spec.rectifier is None:
        return True
    base, rect = spec.base, spec.rectifier
    if base.sigma == rect.sigma:
        if base.kind is StrategyKind.REC_MO and rect.kind is StrategyKind.DIR_MO:
            return True
        if base.sigma == base.horizon:  # both collapse to the single-model strategy
            return True
    return False


def _atomic_to_dict(fitted: FittedAtomicStrategy) -> dict:
    return {
        "strategy": fitted.spec.strategy_id,
        "learner": {
            "family": fitted.learner_config.family,
            "seed": fitted.learner_config.seed,
            "hyperparameters": dict(fitted.learner_config.hyperparameters),
        },
        "train_seconds": fitted.train_seconds,
        "models": [learners.learner_to_dict(m) for m in fitted.models],
    }


def _atomic_from_dict(blob: dict, horizon: int) -> FittedAtomicStrategy:
    from .core import parse_strategy

    spec = parse_strategy(blob["strategy"], horizon).base
    config = LearnerConfig(
        family=blob["learner"]["family"],
        seed=blob["learner"]["seed"],
        hyperparameters=dict(blob["learner"]["hyperparameters"]),
    )
    models = [learners.learner_from_dict(m) for m in blob["models"]]
    return FittedAtomicStrategy(spec, models, config, blob["train_seconds"])


def save_fitted(fitted: FittedComposedStrategy, path: str) -> None:
    """Write a fitted strategy as a versioned gzip-compressed JSON
    artifact (spec string, learner configs, opaque parameter blobs)."""
    blob = {
        "format_version": FITTED_FORMAT_VERSION,
        "strategy": fitted.spec.strategy_id,
        "horizon": fitted.spec.horizon,
        "train_seconds": fitted.train_seconds,
        "base": _atomic_to_dict(fitted.base),
        "rectifier": None if fitted.rectifier is None else _atomic_to_dict(fitted.rectifier),
    }
    with gzip.open(path, "wt", encoding="utf-8") as fh:
        json.dump(blob, fh)


def load_fitted(path: str) -> FittedComposedStrategy:
    from .core import parse_strategy

    with gzip.open(path, "rt", encoding="utf-8") as fh:
        blob = json.load(fh)
    if blob.get("format_version") != FITTED_FORMAT_VERSION:
        raise ShapeError(
            f"unsupported fitted-strategy format version {blob.get('format_version')!r}"
        )
    horizon = blob["horizon"]
    spec = parse_strategy(blob["strategy"], horizon)
    base = _atomic_from_dict(blob["base"], horizon)
    rectifier = None if blob["rectifier"] is None else _atomic_from_dict(blob["rectifier"], horizon)
    return FittedComposedStrategy(spec, base, rectifier, blob["train_seconds"])

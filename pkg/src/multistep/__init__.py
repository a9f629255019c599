"""multistep: a library and CLI for multi-step time series forecasting
strategies.

The strategy space pairs any multi-output base strategy (recursive,
direct, or chained direct, each parameterised by an output-block size
that divides the horizon) with an optional rectifier of the same shape
trained on the base's residuals.  The package ships deterministic
built-in learners, dataset tooling (CSV ingestion and a chaotic
generator), and a rank-based evaluation pipeline with Friedman/Nemenyi
significance testing and plane heatmaps.
"""

from ._backend import BACKEND
from .core import (
    AtomicSpec,
    ComposedSpec,
    HorizonSpec,
    StrategyKind,
    TimeSeries,
    WindowDataset,
    divisor_set,
    enumerate_strategy_space,
    make_windows,
    parse_strategy,
)
from .learners import LearnerConfig, fit, predict
from .strategies import (
    FittedComposedStrategy,
    build_alias,
    classic_aliases,
    forecast_atomic,
    forecast_composed,
    is_existing_strategy,
    train_atomic,
    train_composed,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "TimeSeries",
    "HorizonSpec",
    "StrategyKind",
    "AtomicSpec",
    "ComposedSpec",
    "WindowDataset",
    "divisor_set",
    "enumerate_strategy_space",
    "make_windows",
    "parse_strategy",
    "LearnerConfig",
    "fit",
    "predict",
    "train_atomic",
    "forecast_atomic",
    "train_composed",
    "forecast_composed",
    "FittedComposedStrategy",
    "classic_aliases",
    "build_alias",
    "is_existing_strategy",
    "__version__",
]

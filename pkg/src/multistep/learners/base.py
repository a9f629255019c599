"""Learner configuration and the fitted-model interface.

Every learner maps a fixed-length input vector to a fixed-length output
vector.  Fits are deterministic: the same config (including seed) on the
same data reproduces bit-identical predictions.
"""

from __future__ import annotations

import base64
from dataclasses import dataclass, field, replace
from typing import Any, Mapping

import numpy as np

from ..errors import ConfigError, DataError, ShapeError

FAMILIES = ("ridge", "knn", "mlp", "forest", "persistence")

DEFAULT_HYPERPARAMETERS: dict[str, dict[str, Any]] = {
    "ridge": {"lam": 1e-6},
    "knn": {"k": 5},
    "mlp": {
        "hidden_units": 100,
        "hidden_layers": 2,
        "epochs": 1000,
        "learning_rate": 0.01,
        "batch_size": 1024,
        "activation": "relu",
    },
    # max_depth 0 means unlimited; max_features "third" means d // 3.
    "forest": {
        "trees": 100,
        "bootstrap": True,
        "max_features": "third",
        "min_leaf": 1,
        "max_depth": 0,
    },
    "persistence": {},
}


@dataclass(frozen=True)
class LearnerConfig:
    """A learner family, its hyperparameters, and a seed.

    Unset hyperparameters take the family defaults; unknown keys are
    rejected at fit time.
    """

    family: str
    seed: int = 0
    hyperparameters: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown learner family {self.family!r}; expected one of {FAMILIES}")

    def with_seed(self, seed: int) -> "LearnerConfig":
        return replace(self, seed=seed)

    def resolved(self) -> dict[str, Any]:
        """Family defaults overridden by the explicit hyperparameters."""
        merged = dict(DEFAULT_HYPERPARAMETERS[self.family])
        for key, value in self.hyperparameters.items():
            if key not in merged:
                raise ConfigError(
                    f"unknown hyperparameter {key!r} for family {self.family!r}; "
                    f"valid keys: {sorted(merged)}"
                )
            merged[key] = value
        return merged


def _format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def _parse_value(text: str) -> Any:
    lowered = text.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def config_to_text(config: LearnerConfig) -> str:
    """Serialise a config to ``key = value`` lines (family, seed, then
    hyperparameters in sorted order)."""
    lines = [f"family = {config.family}", f"seed = {config.seed}"]
    for key in sorted(config.hyperparameters):
        lines.append(f"{key} = {_format_value(config.hyperparameters[key])}")
    return "\n".join(lines) + "\n"


def config_from_text(text: str) -> LearnerConfig:
    """Parse the ``key = value`` form emitted by :func:`config_to_text`."""
    family = None
    seed = 0
    hyper: dict[str, Any] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"cannot parse learner config line {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key == "family":
            family = value
        elif key == "seed":
            seed = int(value)
        else:
            hyper[key] = _parse_value(value)
    if family is None:
        raise ConfigError("learner config is missing the 'family' key")
    return LearnerConfig(family=family, seed=seed, hyperparameters=hyper)


def encode_array(arr: np.ndarray) -> dict[str, Any]:
    arr = np.ascontiguousarray(arr)
    return {
        "dtype": str(arr.dtype),
        "shape": list(arr.shape),
        "data": base64.b64encode(arr.tobytes()).decode("ascii"),
    }


def decode_array(blob: Mapping[str, Any]) -> np.ndarray:
    raw = base64.b64decode(blob["data"])
    arr = np.frombuffer(raw, dtype=np.dtype(blob["dtype"])).reshape(blob["shape"])
    return arr.copy()


class FittedLearner:
    """A trained model mapping ``input_dim``-vectors to
    ``output_dim``-vectors.

    Immutable after construction; ``predict`` is reentrant.
    """

    family: str = ""

    def __init__(
        self,
        config: LearnerConfig,
        input_dim: int,
        output_dim: int,
        train_seconds: float = 0.0,
        metadata: dict[str, Any] | None = None,
    ) -> None:
        self.config = config
        self.input_dim = int(input_dim)
        self.output_dim = int(output_dim)
        self.train_seconds = float(train_seconds)
        self.metadata = dict(metadata or {})

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Predict for a single input vector of length ``input_dim``."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1 or x.shape[0] != self.input_dim:
            raise ShapeError(
                f"{self.family} learner expects a vector of length {self.input_dim}, "
                f"got shape {x.shape}"
            )
        if not np.all(np.isfinite(x)):
            raise DataError("prediction input contains non-finite values")
        return self.predict_matrix(x[np.newaxis, :])[0]

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        """Predict one row per input row; the batched form of ``predict``."""
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.input_dim:
            raise ShapeError(
                f"{self.family} learner expects rows of length {self.input_dim}, "
                f"got shape {X.shape}"
            )
        return self._predict(X)

    def _predict(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def state(self) -> dict[str, Any]:
        """Opaque parameter blob for serialisation."""
        raise NotImplementedError

    @classmethod
    def from_state(
        cls, config: LearnerConfig, input_dim: int, output_dim: int, state: Mapping[str, Any]
    ) -> "FittedLearner":
        raise NotImplementedError

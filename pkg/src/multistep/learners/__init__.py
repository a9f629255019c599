"""Uniform multi-output regressors behind a single fit/predict surface.

Built-in families: ``ridge`` (closed form), ``knn``, ``mlp`` (Adam),
``forest`` (multi-output leaves), ``persistence`` (test oracle).  All
fits are seeded and deterministic; refitting the same config on the same
data reproduces bit-identical predictions.
"""

from __future__ import annotations

import time
from typing import Any, Mapping

import numpy as np

from ..errors import DataError, EmptyTrainingSetError, ShapeError
from .base import (
    DEFAULT_HYPERPARAMETERS,
    FAMILIES,
    FittedLearner,
    LearnerConfig,
    config_from_text,
    config_to_text,
)
from .forest import ForestLearner, fit_forest
from .mlp import MLPLearner, fit_mlp, forward, init_parameters, loss_and_gradients
from .neighbors import KNNLearner, fit_knn
from .persistence import PersistenceLearner, fit_persistence
from .ridge import RidgeLearner, fit_ridge, ridge_closed_form

__all__ = [
    "LearnerConfig",
    "FittedLearner",
    "FAMILIES",
    "DEFAULT_HYPERPARAMETERS",
    "fit",
    "predict",
    "ridge_closed_form",
    "config_to_text",
    "config_from_text",
    "learner_to_dict",
    "learner_from_dict",
    "RidgeLearner",
    "KNNLearner",
    "MLPLearner",
    "ForestLearner",
    "PersistenceLearner",
]

_FIT = {
    "ridge": fit_ridge,
    "knn": fit_knn,
    "mlp": fit_mlp,
    "forest": fit_forest,
    "persistence": fit_persistence,
}

_CLASSES: dict[str, type[FittedLearner]] = {
    "ridge": RidgeLearner,
    "knn": KNNLearner,
    "mlp": MLPLearner,
    "forest": ForestLearner,
    "persistence": PersistenceLearner,
}


def fit(config: LearnerConfig, inputs: np.ndarray, targets: np.ndarray) -> FittedLearner:
    """Train a learner of ``config.family`` on ``(inputs, targets)``.

    ``inputs`` is ``(n, d)``; ``targets`` is ``(n, m)`` (a 1-D target is
    treated as one output column).  Training is single-threaded and
    seeded from the config.
    """
    inputs = np.ascontiguousarray(inputs, dtype=np.float64)
    targets = np.ascontiguousarray(targets, dtype=np.float64)
    if targets.ndim == 1:
        targets = targets[:, np.newaxis]
    if inputs.ndim != 2 or targets.ndim != 2:
        raise ShapeError(
            f"expected 2-D inputs and targets, got shapes {inputs.shape} and {targets.shape}"
        )
    if inputs.shape[0] == 0:
        raise EmptyTrainingSetError("cannot fit on an empty training set")
    if inputs.shape[0] != targets.shape[0]:
        raise ShapeError(
            f"row mismatch: {inputs.shape[0]} input rows vs {targets.shape[0]} target rows"
        )
    if not (np.all(np.isfinite(inputs)) and np.all(np.isfinite(targets))):
        raise DataError("training data contains non-finite values")

    hyper = config.resolved()
    start = time.process_time()
    model = _FIT[config.family](config, inputs, targets, hyper)
    model.train_seconds = time.process_time() - start
    return model


def predict(model: FittedLearner, x: np.ndarray) -> np.ndarray:
    """Predict a single output vector from a single input vector."""
    return model.predict(x)


def learner_to_dict(model: FittedLearner) -> dict[str, Any]:
    return {
        "family": model.family,
        "seed": model.config.seed,
        "hyperparameters": dict(model.config.hyperparameters),
        "input_dim": model.input_dim,
        "output_dim": model.output_dim,
        "state": model.state(),
    }


def learner_from_dict(blob: Mapping[str, Any]) -> FittedLearner:
    config = LearnerConfig(
        family=blob["family"],
        seed=blob["seed"],
        hyperparameters=dict(blob["hyperparameters"]),
    )
    cls = _CLASSES[config.family]
    return cls.from_state(config, blob["input_dim"], blob["output_dim"], blob["state"])

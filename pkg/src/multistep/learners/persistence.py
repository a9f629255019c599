"""Last-value carry-forward baseline.

Not a competitive forecaster; it exists because its behaviour is exactly
traceable by hand, which makes strategy-composition tests transparent.
"""

from __future__ import annotations

from typing import Any, Mapping

import numpy as np

from .base import FittedLearner, LearnerConfig


class PersistenceLearner(FittedLearner):
    family = "persistence"

    def _predict(self, X: np.ndarray) -> np.ndarray:
        return np.repeat(X[:, -1:], self.output_dim, axis=1)

    def state(self) -> dict[str, Any]:
        return {}

    @classmethod
    def from_state(cls, config, input_dim, output_dim, state: Mapping[str, Any]):
        return cls(config, input_dim, output_dim)


def fit_persistence(
    config: LearnerConfig, inputs: np.ndarray, targets: np.ndarray, hyper: dict
) -> PersistenceLearner:
    # Targets are ignored apart from fixing the output width.
    return PersistenceLearner(config, inputs.shape[1], targets.shape[1])

"""k-nearest-neighbour regression (uniform weights, Euclidean metric)."""

from __future__ import annotations

from typing import Any, Mapping

import numpy as np

from .base import FittedLearner, LearnerConfig, decode_array, encode_array


class KNNLearner(FittedLearner):
    family = "knn"

    def __init__(
        self, config, input_dim, output_dim, train_inputs, train_targets, k, train_seconds=0.0
    ):
        super().__init__(config, input_dim, output_dim, train_seconds)
        self.train_inputs = train_inputs
        self.train_targets = train_targets
        self.k = int(k)

    def _predict(self, X: np.ndarray) -> np.ndarray:
        # ||a-b||^2 expanded; monotone in the true distance, so ranking is
        # unaffected.  Stable argsort keeps tie-breaking deterministic.
        sq = (
            (X * X).sum(axis=1)[:, None]
            - 2.0 * (X @ self.train_inputs.T)
            + (self.train_inputs * self.train_inputs).sum(axis=1)[None, :]
        )
        neighbours = np.argsort(sq, axis=1, kind="stable")[:, : self.k]
        return self.train_targets[neighbours].mean(axis=1)

    def state(self) -> dict[str, Any]:
        return {
            "train_inputs": encode_array(self.train_inputs),
            "train_targets": encode_array(self.train_targets),
            "k": self.k,
        }

    @classmethod
    def from_state(cls, config, input_dim, output_dim, state: Mapping[str, Any]) -> "KNNLearner":
        return cls(
            config,
            input_dim,
            output_dim,
            decode_array(state["train_inputs"]),
            decode_array(state["train_targets"]),
            state["k"],
        )


def fit_knn(
    config: LearnerConfig, inputs: np.ndarray, targets: np.ndarray, hyper: dict
) -> KNNLearner:
    k = min(int(hyper["k"]), inputs.shape[0])
    return KNNLearner(config, inputs.shape[1], targets.shape[1], inputs.copy(), targets.copy(), k)

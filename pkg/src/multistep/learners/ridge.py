"""Closed-form ridge regression with an unpenalised bias column."""

from __future__ import annotations

from typing import Any, Mapping

import numpy as np
import scipy.linalg

from .base import FittedLearner, LearnerConfig, decode_array, encode_array


def ridge_closed_form(
    inputs: np.ndarray, targets: np.ndarray, lam: float
) -> tuple[np.ndarray, bool]:
    """Solve ``(X^T X + Lambda) W = X^T Y`` for the bias-augmented design.

    The bias column (appended last) is excluded from the penalty.  With
    ``lam > 0`` the system is symmetric positive definite and solved by
    Cholesky factorisation; at ``lam = 0`` (or if factorisation fails)
    the minimum-norm least-squares solution is used instead and the
    returned flag is True when the system was rank-deficient.

    Returns
    -------
    (weights, fallback)
        ``weights`` has shape ``(d + 1, m)`` with the bias row last.
    """
    X = np.asarray(inputs, dtype=np.float64)
    Y = np.asarray(targets, dtype=np.float64)
    n, d = X.shape
    design = np.hstack([X, np.ones((n, 1))])
    if lam > 0.0:
        gram = design.T @ design
        gram[np.diag_indices(d)] += lam  # bias row unpenalised
        rhs = design.T @ Y
        try:
            factor = scipy.linalg.cho_factor(gram)
            return scipy.linalg.cho_solve(factor, rhs), False
        except scipy.linalg.LinAlgError:
            pass
    weights, _, rank, _ = np.linalg.lstsq(design, Y, rcond=None)
    return weights, rank < d + 1


class RidgeLearner(FittedLearner):
    family = "ridge"

    def __init__(self, config, input_dim, output_dim, weights, train_seconds=0.0, metadata=None):
        super().__init__(config, input_dim, output_dim, train_seconds, metadata)
        self.weights = weights

    def _predict(self, X: np.ndarray) -> np.ndarray:
        return X @ self.weights[:-1] + self.weights[-1]

    def state(self) -> dict[str, Any]:
        return {"weights": encode_array(self.weights)}

    @classmethod
    def from_state(cls, config, input_dim, output_dim, state: Mapping[str, Any]) -> "RidgeLearner":
        return cls(config, input_dim, output_dim, decode_array(state["weights"]))


def fit_ridge(
    config: LearnerConfig, inputs: np.ndarray, targets: np.ndarray, hyper: dict
) -> RidgeLearner:
    weights, fallback = ridge_closed_form(inputs, targets, float(hyper["lam"]))
    metadata = {"minimum_norm_fallback": fallback}
    return RidgeLearner(
        config, inputs.shape[1], targets.shape[1], weights, metadata=metadata
    )

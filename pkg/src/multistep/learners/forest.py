"""Random forest regression with joint multi-output leaves.

One forest is fitted for all outputs: splits minimise the pooled squared
error across output columns and each leaf stores the mean target vector
of its rows.  Trees are stored as flat arrays so prediction is a
vectorised descent.  The split search runs through the kernel backend
(compiled when available, numpy otherwise).
"""

from __future__ import annotations

from typing import Any, Mapping

import numpy as np

from .. import _backend
from ..errors import ConfigError
from .base import FittedLearner, LearnerConfig, decode_array, encode_array


class Tree:
    """Flat-array binary tree: ``feature[i] < 0`` marks node i a leaf."""

    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self, feature, threshold, left, right, value):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right
        self.value = value

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = np.flatnonzero(self.feature[node] >= 0)
        while active.size:
            current = node[active]
            go_left = X[active, self.feature[current]] <= self.threshold[current]
            node[active] = np.where(go_left, self.left[current], self.right[current])
            active = active[self.feature[node[active]] >= 0]
        return self.value[node]


def _resolve_max_features(setting: Any, d: int) -> int:
    if setting == "third":
        return max(1, d // 3)
    if setting == "all":
        return d
    if isinstance(setting, int) and setting >= 1:
        return min(setting, d)
    raise ConfigError(f"invalid max_features {setting!r}; expected 'third', 'all' or a positive int")


def _build_tree(
    X: np.ndarray,
    Y: np.ndarray,
    rng: np.random.Generator,
    max_features: int,
    min_leaf: int,
    max_depth: int,
) -> Tree:
    n, d = X.shape
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[np.ndarray] = []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(np.empty(0))
        return len(feature) - 1

    root = new_node()
    stack = [(np.arange(n), 0, root)]
    while stack:
        rows, depth, node = stack.pop()
        Ysub = Y[rows]
        value[node] = Ysub.mean(axis=0)
        if rows.size < 2 * min_leaf or (max_depth and depth >= max_depth):
            continue
        if np.all(Ysub == Ysub[0]):
            continue

        best_score = -np.inf
        best = None
        inspected = 0
        # Constant features do not count towards max_features, so a
        # separating feature is found whenever one exists.
        for f in rng.permutation(d):
            xf = X[rows, f]
            order = np.argsort(xf, kind="stable")
            xs = xf[order]
            if xs[0] == xs[-1]:
                continue
            score, pos = _backend.best_split(xs, np.ascontiguousarray(Ysub[order]), min_leaf)
            if pos and score > best_score:
                best_score = score
                best = (int(f), order, pos, xs[pos - 1], xs[pos])
            inspected += 1
            if inspected >= max_features:
                break
        if best is None:
            continue

        f, order, pos, lo, hi = best
        mid = lo + (hi - lo) / 2.0
        if mid >= hi:  # guard against rounding to the right edge
            mid = lo
        feature[node] = f
        threshold[node] = float(mid)
        left_child = new_node()
        right_child = new_node()
        left[node] = left_child
        right[node] = right_child
        stack.append((rows[order[pos:]], depth + 1, right_child))
        stack.append((rows[order[:pos]], depth + 1, left_child))

    return Tree(
        np.asarray(feature, dtype=np.int64),
        np.asarray(threshold, dtype=np.float64),
        np.asarray(left, dtype=np.int64),
        np.asarray(right, dtype=np.int64),
        np.vstack(value),
    )


class ForestLearner(FittedLearner):
    family = "forest"

    def __init__(self, config, input_dim, output_dim, trees, train_seconds=0.0):
        super().__init__(config, input_dim, output_dim, train_seconds)
        self.trees = trees

    def _predict(self, X: np.ndarray) -> np.ndarray:
        total = np.zeros((X.shape[0], self.output_dim))
        for tree in self.trees:
            total += tree.predict(X)
        return total / len(self.trees)

    def state(self) -> dict[str, Any]:
        return {
            "trees": [
                {
                    "feature": encode_array(t.feature),
                    "threshold": encode_array(t.threshold),
                    "left": encode_array(t.left),
                    "right": encode_array(t.right),
                    "value": encode_array(t.value),
                }
                for t in self.trees
            ]
        }

    @classmethod
    def from_state(cls, config, input_dim, output_dim, state: Mapping[str, Any]) -> "ForestLearner":
        trees = [
            Tree(
                decode_array(blob["feature"]),
                decode_array(blob["threshold"]),
                decode_array(blob["left"]),
                decode_array(blob["right"]),
                decode_array(blob["value"]),
            )
            for blob in state["trees"]
        ]
        return cls(config, input_dim, output_dim, trees)


def fit_forest(
    config: LearnerConfig, inputs: np.ndarray, targets: np.ndarray, hyper: dict
) -> ForestLearner:
    n, d = inputs.shape
    n_trees = int(hyper["trees"])
    bootstrap = bool(hyper["bootstrap"])
    max_features = _resolve_max_features(hyper["max_features"], d)
    min_leaf = int(hyper["min_leaf"])
    max_depth = int(hyper["max_depth"])

    master = np.random.default_rng(config.seed)
    tree_seeds = master.integers(0, 2**63, size=n_trees)
    trees = []
    for seed in tree_seeds:
        rng = np.random.default_rng(int(seed))
        if bootstrap:
            rows = rng.integers(0, n, size=n)
            X, Y = inputs[rows], targets[rows]
        else:
            X, Y = inputs, targets
        trees.append(_build_tree(X, Y, rng, max_features, min_leaf, max_depth))
    return ForestLearner(config, d, targets.shape[1], trees)

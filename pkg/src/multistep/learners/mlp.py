"""Fully-connected feed-forward network trained with Adam.

Single-threaded numpy training loop; fixed epoch count, no early
stopping.  Weight initialisation is uniform with fan-in scaling from the
config seed, so refits are bit-identical.
"""

from __future__ import annotations

from typing import Any, Callable, Mapping

import numpy as np

from ..errors import ConfigError
from .base import FittedLearner, LearnerConfig, decode_array, encode_array

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


def _activation(name: str) -> tuple[Callable, Callable]:
    """Returns (forward, derivative-given-preactivation)."""
    if name == "relu":
        return (lambda z: np.maximum(z, 0.0), lambda z: (z > 0.0).astype(np.float64))
    if name == "tanh":
        return (np.tanh, lambda z: 1.0 - np.tanh(z) ** 2)
    raise ConfigError(f"unknown activation {name!r}; expected 'relu' or 'tanh'")


def init_parameters(
    dims: list[int], rng: np.random.Generator
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return weights, biases


def forward(
    weights: list[np.ndarray], biases: list[np.ndarray], X: np.ndarray, activation: str
) -> np.ndarray:
    act, _ = _activation(activation)
    h = X
    for W, b in zip(weights[:-1], biases[:-1]):
        h = act(h @ W + b)
    return h @ weights[-1] + biases[-1]


def loss_and_gradients(
    weights: list[np.ndarray],
    biases: list[np.ndarray],
    X: np.ndarray,
    Y: np.ndarray,
    activation: str,
) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Mean squared error over all outputs, with its exact gradients.

    This is the function the training loop descends; tests compare the
    returned gradients against central finite differences.
    """
    act, act_grad = _activation(activation)
    pre: list[np.ndarray] = []
    post = [X]
    h = X
    for W, b in zip(weights[:-1], biases[:-1]):
        z = h @ W + b
        pre.append(z)
        h = act(z)
        post.append(h)
    out = h @ weights[-1] + biases[-1]

    diff = out - Y
    loss = float(np.mean(diff * diff))
    grad_out = 2.0 * diff / diff.size

    grad_w = [np.empty(0)] * len(weights)
    grad_b = [np.empty(0)] * len(biases)
    delta = grad_out
    for layer in range(len(weights) - 1, -1, -1):
        grad_w[layer] = post[layer].T @ delta
        grad_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ weights[layer].T) * act_grad(pre[layer - 1])
    return loss, grad_w, grad_b


class MLPLearner(FittedLearner):
    family = "mlp"

    def __init__(
        self, config, input_dim, output_dim, weights, biases, activation, train_seconds=0.0
    ):
        super().__init__(config, input_dim, output_dim, train_seconds)
        self.weights = weights
        self.biases = biases
        self.activation = activation

    def _predict(self, X: np.ndarray) -> np.ndarray:
        return forward(self.weights, self.biases, X, self.activation)

    def state(self) -> dict[str, Any]:
        return {
            "weights": [encode_array(W) for W in self.weights],
            "biases": [encode_array(b) for b in self.biases],
            "activation": self.activation,
        }

    @classmethod
    def from_state(cls, config, input_dim, output_dim, state: Mapping[str, Any]) -> "MLPLearner":
        return cls(
            config,
            input_dim,
            output_dim,
            [decode_array(blob) for blob in state["weights"]],
            [decode_array(blob) for blob in state["biases"]],
            state["activation"],
        )


def fit_mlp(
    config: LearnerConfig, inputs: np.ndarray, targets: np.ndarray, hyper: dict
) -> MLPLearner:
    n, d = inputs.shape
    m = targets.shape[1]
    dims = [d] + [int(hyper["hidden_units"])] * int(hyper["hidden_layers"]) + [m]
    activation = str(hyper["activation"])
    epochs = int(hyper["epochs"])
    lr = float(hyper["learning_rate"])
    batch = min(int(hyper["batch_size"]), n)

    rng = np.random.default_rng(config.seed)
    weights, biases = init_parameters(dims, rng)
    params = weights + biases
    adam_m = [np.zeros_like(p) for p in params]
    adam_v = [np.zeros_like(p) for p in params]
    step = 0

    for _ in range(epochs):
        perm = rng.permutation(n)
        for start in range(0, n, batch):
            idx = perm[start : start + batch]
            _, grad_w, grad_b = loss_and_gradients(
                weights, biases, inputs[idx], targets[idx], activation
            )
            grads = grad_w + grad_b
            step += 1
            corr1 = 1.0 - ADAM_BETA1**step
            corr2 = 1.0 - ADAM_BETA2**step
            for p, g, m1, v1 in zip(params, grads, adam_m, adam_v):
                m1 *= ADAM_BETA1
                m1 += (1.0 - ADAM_BETA1) * g
                v1 *= ADAM_BETA2
                v1 += (1.0 - ADAM_BETA2) * g * g
                p -= lr * (m1 / corr1) / (np.sqrt(v1 / corr2) + ADAM_EPS)

    return MLPLearner(config, d, m, weights, biases, activation)

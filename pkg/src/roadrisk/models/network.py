"""Small feed-forward network: ReLU hidden layers, sigmoid output, Adam updates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..domain import FeatureSchema, Standardizer
from .base import TrainedModel, bce_loss, register_family, sigmoid

_ADAM_BETA1 = 0.9
_ADAM_BETA2 = 0.999
_ADAM_EPS = 1e-8


@dataclass(frozen=True)
class NetworkParams:
    hidden_sizes: tuple[int, ...] = (10,)
    learning_rate: float = 0.001
    epochs: int = 30
    batch_size: int = 256

    def __post_init__(self):
        sizes = tuple(int(h) for h in self.hidden_sizes)
        if not sizes or any(h < 1 for h in sizes):
            raise ValueError(f"hidden_sizes must be positive integers, got {self.hidden_sizes!r}")
        object.__setattr__(self, "hidden_sizes", sizes)
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if not isinstance(self.epochs, int) or self.epochs < 1:
            raise ValueError(f"epochs must be an integer >= 1, got {self.epochs!r}")
        if not isinstance(self.batch_size, int) or self.batch_size < 1:
            raise ValueError(f"batch_size must be an integer >= 1, got {self.batch_size!r}")


def glorot_init(layer_sizes: list[int], rng: np.random.Generator):
    """Uniform(-limit, limit) weights with limit = sqrt(6 / (fan_in + fan_out))."""
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out, dtype=np.float64))
    return weights, biases


def forward(weights, biases, X: np.ndarray):
    """Returns (pre_activations, activations, output probabilities)."""
    zs, activations = [], [X]
    a = X
    for W, b in zip(weights[:-1], biases[:-1]):
        z = a @ W + b
        zs.append(z)
        a = np.maximum(z, 0.0)
        activations.append(a)
    z_out = a @ weights[-1] + biases[-1]
    zs.append(z_out)
    return zs, activations, sigmoid(z_out[:, 0])


def loss_and_gradients(weights, biases, X: np.ndarray, y: np.ndarray):
    """Mean BCE and its exact gradients for the given parameters."""
    m = X.shape[0]
    zs, activations, p = forward(weights, biases, X)
    loss = bce_loss(y, p)
    grad_w = [None] * len(weights)
    grad_b = [None] * len(biases)
    delta = ((p - y) / m)[:, None]
    for layer in range(len(weights) - 1, -1, -1):
        grad_w[layer] = activations[layer].T @ delta
        grad_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ weights[layer].T) * (zs[layer - 1] > 0.0)
    return loss, grad_w, grad_b


class NetworkModel(TrainedModel):
    family = "network"

    def __init__(self, weights, biases, hyperparams: NetworkParams, *,
                 schema_fingerprint: str, n_features: int,
                 standardizer: Standardizer | None,
                 training_loss: list[float] | None = None):
        super().__init__(schema_fingerprint=schema_fingerprint, n_features=n_features,
                         standardizer=standardizer, hyperparams=hyperparams)
        self.weights = [np.asarray(W, dtype=np.float64) for W in weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]
        self.training_loss = list(training_loss or [])

    def _score(self, X: np.ndarray) -> np.ndarray:
        _, _, p = forward(self.weights, self.biases, X)
        return p

    def _params_to_dict(self) -> dict:
        return {
            "weights": [W.tolist() for W in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def _from_params(cls, params, hyperparams, *, schema_fingerprint, n_features, standardizer):
        return cls(params["weights"], params["biases"], hyperparams,
                   schema_fingerprint=schema_fingerprint, n_features=n_features,
                   standardizer=standardizer)


class _AdamState:
    def __init__(self, shapes):
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]

    def step(self, params, grads, lr: float, t: int):
        for i, g in enumerate(grads):
            self.m[i] = _ADAM_BETA1 * self.m[i] + (1.0 - _ADAM_BETA1) * g
            self.v[i] = _ADAM_BETA2 * self.v[i] + (1.0 - _ADAM_BETA2) * g * g
            m_hat = self.m[i] / (1.0 - _ADAM_BETA1 ** t)
            v_hat = self.v[i] / (1.0 - _ADAM_BETA2 ** t)
            params[i] -= lr * m_hat / (np.sqrt(v_hat) + _ADAM_EPS)


def fit_network(X: np.ndarray, y: np.ndarray, params: NetworkParams, *, seed: int,
                schema: FeatureSchema, schema_fingerprint: str) -> NetworkModel:
    standardizer = Standardizer.fit(X, schema)
    Xs = standardizer.transform(X)
    yf = y.astype(np.float64)
    n, n_feat = Xs.shape
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(0,))))
    sizes = [n_feat, *params.hidden_sizes, 1]
    weights, biases = glorot_init(sizes, rng)
    adam_w = _AdamState([W.shape for W in weights])
    adam_b = _AdamState([b.shape for b in biases])
    t = 0
    losses = []
    for _ in range(params.epochs):
        order = rng.permutation(n)
        for start in range(0, n, params.batch_size):
            rows = order[start:start + params.batch_size]
            _, grad_w, grad_b = loss_and_gradients(weights, biases, Xs[rows], yf[rows])
            t += 1
            adam_w.step(weights, grad_w, params.learning_rate, t)
            adam_b.step(biases, grad_b, params.learning_rate, t)
        _, _, p = forward(weights, biases, Xs)
        losses.append(bce_loss(yf, p))
    return NetworkModel(weights, biases, params, schema_fingerprint=schema_fingerprint,
                        n_features=n_feat, standardizer=standardizer, training_loss=losses)


register_family(NetworkModel, NetworkParams)

"""Regularized logistic regression fit by full-batch gradient descent."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..domain import FeatureSchema, Standardizer
from .base import TrainedModel, bce_loss, register_family, sigmoid


@dataclass(frozen=True)
class LogisticParams:
    learning_rate: float = 0.1
    epochs: int = 300
    l2: float = 1e-4

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if not isinstance(self.epochs, int) or self.epochs < 1:
            raise ValueError(f"epochs must be an integer >= 1, got {self.epochs!r}")
        if self.l2 < 0:
            raise ValueError(f"l2 must be non-negative, got {self.l2}")


class LogisticModel(TrainedModel):
    family = "logistic"

    def __init__(self, weights: np.ndarray, bias: float, hyperparams: LogisticParams, *,
                 schema_fingerprint: str, n_features: int,
                 standardizer: Standardizer | None,
                 training_loss: list[float] | None = None):
        super().__init__(schema_fingerprint=schema_fingerprint, n_features=n_features,
                         standardizer=standardizer, hyperparams=hyperparams)
        self.weights = np.asarray(weights, dtype=np.float64)
        self.bias = float(bias)
        self.training_loss = list(training_loss or [])

    def _score(self, X: np.ndarray) -> np.ndarray:
        return sigmoid(X @ self.weights + self.bias)

    def _params_to_dict(self) -> dict:
        return {"weights": self.weights.tolist(), "bias": self.bias}

    @classmethod
    def _from_params(cls, params, hyperparams, *, schema_fingerprint, n_features, standardizer):
        return cls(np.asarray(params["weights"], dtype=np.float64), float(params["bias"]),
                   hyperparams, schema_fingerprint=schema_fingerprint,
                   n_features=n_features, standardizer=standardizer)


def regularized_loss(Xs: np.ndarray, y: np.ndarray, w: np.ndarray, b: float, l2: float) -> float:
    p = sigmoid(Xs @ w + b)
    return bce_loss(y, p) + 0.5 * l2 * float(w @ w)


def fit_logistic(X: np.ndarray, y: np.ndarray, params: LogisticParams, *,
                 schema: FeatureSchema, schema_fingerprint: str) -> LogisticModel:
    standardizer = Standardizer.fit(X, schema)
    Xs = standardizer.transform(X)
    yf = y.astype(np.float64)
    n, n_feat = Xs.shape
    w = np.zeros(n_feat, dtype=np.float64)
    b = 0.0
    losses = []
    for _ in range(params.epochs):
        p = sigmoid(Xs @ w + b)
        losses.append(bce_loss(yf, p) + 0.5 * params.l2 * float(w @ w))
        err = p - yf
        grad_w = Xs.T @ err / n + params.l2 * w
        grad_b = float(err.mean())
        w -= params.learning_rate * grad_w
        b -= params.learning_rate * grad_b
    return LogisticModel(w, b, params, schema_fingerprint=schema_fingerprint,
                         n_features=n_feat, standardizer=standardizer,
                         training_loss=losses)


register_family(LogisticModel, LogisticParams)

"""Shared classifier contract: probability scoring, thresholding, serialization."""

from __future__ import annotations

import abc
import dataclasses
import json
from pathlib import Path
from typing import ClassVar

import numpy as np

from ..domain import FeatureSchema, Standardizer

MODEL_FORMAT = "roadrisk-model"
MODEL_FORMAT_VERSION = 1

_P_EPS = 1e-12


class ModelFileError(ValueError):
    """Raised for unreadable or corrupt model files."""


class ModelVersionError(ModelFileError):
    """Raised when a model file declares an unsupported format version."""


class SchemaMismatchError(ValueError):
    """Raised when a model is scored against vectors from a different schema."""


def sigmoid(z):
    """Numerically stable logistic function, elementwise on arrays."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return float(out) if out.ndim == 0 else out


def bce_loss(y, p) -> float:
    """Mean binary cross-entropy with probabilities clamped at 1e-12."""
    y = np.asarray(y, dtype=float)
    p = np.asarray(p, dtype=float)
    if y.shape != p.shape:
        raise ValueError(f"label/probability length mismatch: {y.shape} vs {p.shape}")
    p = np.clip(p, _P_EPS, 1.0 - _P_EPS)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


class TrainedModel(abc.ABC):
    """A fitted classifier scored through one probability contract.

    Subclasses own their parameters and apply their own standardization;
    callers always pass raw (unstandardized) feature vectors.
    """

    family: ClassVar[str]

    def __init__(self, *, schema_fingerprint: str, n_features: int,
                 standardizer: Standardizer | None, hyperparams):
        self.schema_fingerprint = schema_fingerprint
        self.n_features = n_features
        self.standardizer = standardizer
        self.hyperparams = hyperparams

    def predict_proba(self, X, schema: FeatureSchema | None = None):
        """Probability of the positive class; float for a single vector."""
        if schema is not None and schema.fingerprint() != self.schema_fingerprint:
            raise SchemaMismatchError(
                f"model was trained on schema {self.schema_fingerprint}, "
                f"input encoded with {schema.fingerprint()}"
            )
        arr = np.asarray(X, dtype=float)
        single = arr.ndim == 1
        arr = np.atleast_2d(arr)
        if arr.shape[1] != self.n_features:
            raise SchemaMismatchError(
                f"model expects {self.n_features} slots, got {arr.shape[1]}"
            )
        if self.standardizer is not None:
            arr = self.standardizer.transform(arr)
        p = np.clip(self._score(arr), 0.0, 1.0)
        return float(p[0]) if single else p

    @abc.abstractmethod
    def _score(self, X: np.ndarray) -> np.ndarray:
        """Probabilities for preprocessed rows."""

    @abc.abstractmethod
    def _params_to_dict(self) -> dict:
        """JSON-serializable model parameters."""

    @classmethod
    @abc.abstractmethod
    def _from_params(cls, params: dict, hyperparams, *, schema_fingerprint: str,
                     n_features: int, standardizer: Standardizer | None) -> "TrainedModel":
        ...


def classify(model: TrainedModel, x, threshold: float, schema: FeatureSchema | None = None):
    """True where predicted probability reaches the threshold (inclusive)."""
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    p = model.predict_proba(x, schema=schema)
    if isinstance(p, float):
        return p >= threshold
    return p >= threshold


_REGISTRY: dict[str, type[TrainedModel]] = {}
_HP_REGISTRY: dict[str, type] = {}


def register_family(model_cls: type[TrainedModel], hp_cls: type):
    _REGISTRY[model_cls.family] = model_cls
    _HP_REGISTRY[model_cls.family] = hp_cls


def known_families() -> tuple[str, ...]:
    return tuple(sorted(_REGISTRY))


def hyperparams_class(family: str) -> type:
    if family not in _HP_REGISTRY:
        raise ValueError(f"unknown model family {family!r}, expected one of {known_families()}")
    return _HP_REGISTRY[family]


def save_model(model: TrainedModel, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {
        "format": MODEL_FORMAT,
        "format_version": MODEL_FORMAT_VERSION,
        "family": model.family,
        "schema_fingerprint": model.schema_fingerprint,
        "n_features": model.n_features,
        "standardization": model.standardizer.to_dict() if model.standardizer else None,
        "hyperparams": dataclasses.asdict(model.hyperparams),
        "params": model._params_to_dict(),
    }
    with path.open("w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
    return path


def load_model(path) -> TrainedModel:
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelFileError(f"cannot read model file {path}: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != MODEL_FORMAT:
        raise ModelFileError(f"{path} is not a {MODEL_FORMAT} file")
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ModelVersionError(
            f"{path} has format version {version}, this build reads {MODEL_FORMAT_VERSION}"
        )
    family = doc.get("family")
    if family not in _REGISTRY:
        raise ModelFileError(f"{path} names unknown family {family!r}")
    try:
        hp = _HP_REGISTRY[family](**doc["hyperparams"])
        std = doc.get("standardization")
        standardizer = Standardizer.from_dict(std) if std else None
        return _REGISTRY[family]._from_params(
            doc["params"], hp,
            schema_fingerprint=doc["schema_fingerprint"],
            n_features=int(doc["n_features"]),
            standardizer=standardizer,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFileError(f"malformed model file {path}: {exc}") from exc

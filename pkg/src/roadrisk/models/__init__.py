"""Four classifier families behind one probability-scoring contract."""

from __future__ import annotations

import numpy as np

from ..domain import DEFAULT_SCHEMA, FeatureSchema
from .base import (
    MODEL_FORMAT,
    MODEL_FORMAT_VERSION,
    ModelFileError,
    ModelVersionError,
    SchemaMismatchError,
    TrainedModel,
    bce_loss,
    classify,
    hyperparams_class,
    known_families,
    load_model,
    save_model,
    sigmoid,
)
from .forest import ForestParams, RandomForestModel, fit_forest
from .logistic import LogisticModel, LogisticParams, fit_logistic
from .network import NetworkModel, NetworkParams, fit_network, glorot_init, loss_and_gradients
from .tree import DecisionTreeModel, TreeParams, fit_tree, gini, grow_tree

FAMILY_ALIASES = {
    "lr": "logistic",
    "dt": "tree",
    "rf": "forest",
    "nn": "network",
}


def canonical_family(name: str) -> str:
    family = FAMILY_ALIASES.get(name.lower(), name.lower())
    if family not in known_families():
        raise ValueError(f"unknown model family {name!r}, expected one of {known_families()}")
    return family


def default_hyperparams(family: str):
    return hyperparams_class(canonical_family(family))()


def fit(family: str, X, y, hyperparams=None, *, seed: int = 0,
        schema: FeatureSchema = DEFAULT_SCHEMA) -> TrainedModel:
    """Train one model family on labeled raw vectors."""
    family = canonical_family(family)
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("training data must be a non-empty 2-D array")
    if y.shape != (X.shape[0],):
        raise ValueError(f"labels must be one per row, got {y.shape} for {X.shape[0]} rows")
    y = (y != 0).astype(np.uint8)
    if int(y.min()) == int(y.max()):
        raise ValueError("training data must contain both classes")
    if hyperparams is None:
        hyperparams = hyperparams_class(family)()
    elif not isinstance(hyperparams, hyperparams_class(family)):
        raise TypeError(
            f"hyperparams for {family} must be {hyperparams_class(family).__name__}, "
            f"got {type(hyperparams).__name__}"
        )
    fingerprint = schema.fingerprint()
    if family == "logistic":
        return fit_logistic(X, y, hyperparams, schema=schema, schema_fingerprint=fingerprint)
    if family == "tree":
        return fit_tree(X, y, hyperparams, schema_fingerprint=fingerprint)
    if family == "forest":
        return fit_forest(X, y, hyperparams, seed=seed, schema_fingerprint=fingerprint)
    return fit_network(X, y, hyperparams, seed=seed, schema=schema,
                       schema_fingerprint=fingerprint)


__all__ = [
    "MODEL_FORMAT",
    "MODEL_FORMAT_VERSION",
    "DecisionTreeModel",
    "ForestParams",
    "LogisticModel",
    "LogisticParams",
    "ModelFileError",
    "ModelVersionError",
    "NetworkModel",
    "NetworkParams",
    "RandomForestModel",
    "SchemaMismatchError",
    "TrainedModel",
    "TreeParams",
    "bce_loss",
    "canonical_family",
    "classify",
    "default_hyperparams",
    "fit",
    "fit_forest",
    "fit_logistic",
    "fit_network",
    "fit_tree",
    "gini",
    "glorot_init",
    "grow_tree",
    "known_families",
    "load_model",
    "loss_and_gradients",
    "save_model",
    "sigmoid",
]

"""Bootstrap ensemble of classification trees with per-split feature draws."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..domain import Standardizer
from .base import TrainedModel, register_family
from .tree import TreeParams, grow_tree, tree_scores


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 25
    max_depth: int = 341
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    features_per_split: int | str = "sqrt"
    bootstrap: bool = True

    def __post_init__(self):
        for name in ("n_trees", "max_depth", "min_samples_split", "min_samples_leaf"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ValueError(f"{name} must be an integer >= 1, got {v!r}")
        fps = self.features_per_split
        if isinstance(fps, str):
            if fps not in ("sqrt", "all"):
                raise ValueError(f"features_per_split must be 'sqrt', 'all', or an int, got {fps!r}")
        elif not isinstance(fps, int) or fps < 1:
            raise ValueError(f"features_per_split must be 'sqrt', 'all', or an int >= 1, got {fps!r}")

    def tree_params(self) -> TreeParams:
        return TreeParams(max_depth=self.max_depth,
                          min_samples_split=self.min_samples_split,
                          min_samples_leaf=self.min_samples_leaf)

    def resolve_features(self, n_feat: int) -> int:
        if self.features_per_split == "sqrt":
            return max(1, int(math.floor(math.sqrt(n_feat))))
        if self.features_per_split == "all":
            return n_feat
        return min(self.features_per_split, n_feat)


class RandomForestModel(TrainedModel):
    family = "forest"

    def __init__(self, trees: list[dict[str, np.ndarray]], hyperparams: ForestParams, *,
                 schema_fingerprint: str, n_features: int,
                 standardizer: Standardizer | None = None):
        super().__init__(schema_fingerprint=schema_fingerprint, n_features=n_features,
                         standardizer=standardizer, hyperparams=hyperparams)
        self.trees = trees

    def _score(self, X: np.ndarray) -> np.ndarray:
        acc = np.zeros(X.shape[0], dtype=np.float64)
        for arrays in self.trees:
            acc += tree_scores(arrays, X)
        return acc / len(self.trees)

    def _params_to_dict(self) -> dict:
        return {"trees": [{k: v.tolist() for k, v in t.items()} for t in self.trees]}

    @classmethod
    def _from_params(cls, params, hyperparams, *, schema_fingerprint, n_features, standardizer):
        trees = []
        for t in params["trees"]:
            trees.append({
                "feature": np.asarray(t["feature"], dtype=np.int32),
                "threshold": np.asarray(t["threshold"], dtype=np.float64),
                "left": np.asarray(t["left"], dtype=np.int32),
                "right": np.asarray(t["right"], dtype=np.int32),
                "value": np.asarray(t["value"], dtype=np.float64),
                "count": np.asarray(t["count"], dtype=np.int64),
            })
        return cls(trees, hyperparams, schema_fingerprint=schema_fingerprint,
                   n_features=n_features, standardizer=standardizer)


def fit_forest(X: np.ndarray, y: np.ndarray, params: ForestParams, *, seed: int,
               schema_fingerprint: str) -> RandomForestModel:
    n, n_feat = X.shape
    k = params.resolve_features(n_feat)
    tree_params = params.tree_params()
    fps = None if k >= n_feat else k
    trees = []
    for t in range(params.n_trees):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(t,))))
        if params.bootstrap:
            rows = rng.integers(0, n, size=n)
            Xb, yb = X[rows], y[rows]
        else:
            Xb, yb = X, y
        trees.append(grow_tree(Xb, yb, tree_params, feature_rng=rng, features_per_split=fps))
    return RandomForestModel(trees, params, schema_fingerprint=schema_fingerprint, n_features=n_feat)


register_family(RandomForestModel, ForestParams)

"""Binary classification tree grown by exhaustive threshold search."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from ..domain import Standardizer
from .base import TrainedModel, register_family

_LEAF = -1


def gini(labels) -> float:
    """Gini impurity of a boolean label multiset."""
    arr = np.asarray(labels)
    if arr.size == 0:
        raise ValueError("gini is undefined for an empty label set")
    p = float(np.count_nonzero(arr)) / arr.size
    return 1.0 - p * p - (1.0 - p) * (1.0 - p)


@dataclass(frozen=True)
class TreeParams:
    max_depth: int = 341
    min_samples_split: int = 2
    min_samples_leaf: int = 1

    def __post_init__(self):
        for name in ("max_depth", "min_samples_split", "min_samples_leaf"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ValueError(f"{name} must be an integer >= 1, got {v!r}")


class _Nodes:
    """Flat node arrays built up during growth."""

    def __init__(self):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []
        self.count: list[int] = []

    def add(self, feature: int, threshold: float, value: float, count: int) -> int:
        self.feature.append(feature)
        self.threshold.append(threshold)
        self.left.append(_LEAF)
        self.right.append(_LEAF)
        self.value.append(value)
        self.count.append(count)
        return len(self.feature) - 1

    def freeze(self) -> dict[str, np.ndarray]:
        return {
            "feature": np.asarray(self.feature, dtype=np.int32),
            "threshold": np.asarray(self.threshold, dtype=np.float64),
            "left": np.asarray(self.left, dtype=np.int32),
            "right": np.asarray(self.right, dtype=np.int32),
            "value": np.asarray(self.value, dtype=np.float64),
            "count": np.asarray(self.count, dtype=np.int64),
        }


def _best_split(X: np.ndarray, y_node: np.ndarray, idx: np.ndarray,
                feats: np.ndarray, min_leaf: int):
    """Best (feature, threshold, left_mask) over candidate features.

    Children purity score sum_(child) (pos^2 + neg^2) / n is maximized; within a
    feature the first (lowest-threshold) argmax wins, across features a later
    feature must be strictly better to replace an earlier one.
    """
    m = idx.size
    pos_total = int(y_node.sum())
    best = None  # (score, feature, threshold)
    n_l = np.arange(1, m, dtype=np.int64)
    n_r = m - n_l
    for f in feats:
        v = X[idx, f]
        order = np.argsort(v, kind="stable")
        vs = v[order]
        if vs[0] == vs[-1]:
            continue
        ys = y_node[order]
        pos_l = np.cumsum(ys, dtype=np.int64)[:-1]
        valid = (vs[1:] != vs[:-1]) & (n_l >= min_leaf) & (n_r >= min_leaf)
        if not valid.any():
            continue
        neg_l = n_l - pos_l
        pos_r = pos_total - pos_l
        neg_r = n_r - pos_r
        score = (pos_l * pos_l + neg_l * neg_l) / n_l + (pos_r * pos_r + neg_r * neg_r) / n_r
        score[~valid] = -np.inf
        j = int(np.argmax(score))
        if best is None or score[j] > best[0]:
            a = float(vs[j])
            b = float(vs[j + 1])
            thr = 0.5 * (a + b)
            if thr >= b:  # midpoint rounded up to the right value; fall back left
                thr = a
            best = (float(score[j]), int(f), thr)
    if best is None:
        return None
    _, f, thr = best
    return f, thr, X[idx, f] <= thr


def grow_tree(X: np.ndarray, y: np.ndarray, params: TreeParams,
              feature_rng: np.random.Generator | None = None,
              features_per_split: int | None = None) -> dict[str, np.ndarray]:
    """Grow node arrays on the given rows; shared by the single tree and the forest."""
    n, n_feat = X.shape
    k = n_feat if features_per_split is None else min(features_per_split, n_feat)
    nodes = _Nodes()
    root = nodes.add(_LEAF, 0.0, float(y.mean()), n)
    queue = deque([(root, np.arange(n, dtype=np.intp), 0)])
    while queue:
        node_id, idx, depth = queue.popleft()
        m = idx.size
        y_node = y[idx]
        pos = int(y_node.sum())
        if pos == 0 or pos == m or depth >= params.max_depth or m < params.min_samples_split:
            continue
        if k < n_feat:
            feats = np.sort(feature_rng.choice(n_feat, size=k, replace=False))
        else:
            feats = np.arange(n_feat)
        found = _best_split(X, y_node, idx, feats, params.min_samples_leaf)
        if found is None:
            continue
        f, thr, left_mask = found
        left_idx = idx[left_mask]
        right_idx = idx[~left_mask]
        left_id = nodes.add(_LEAF, 0.0, float(y[left_idx].mean()), left_idx.size)
        right_id = nodes.add(_LEAF, 0.0, float(y[right_idx].mean()), right_idx.size)
        nodes.feature[node_id] = f
        nodes.threshold[node_id] = thr
        nodes.left[node_id] = left_id
        nodes.right[node_id] = right_id
        queue.append((left_id, left_idx, depth + 1))
        queue.append((right_id, right_idx, depth + 1))
    return nodes.freeze()


def tree_scores(arrays: dict[str, np.ndarray], X: np.ndarray) -> np.ndarray:
    """Leaf positive fraction for each row, walking all rows level by level."""
    feature = arrays["feature"]
    threshold = arrays["threshold"]
    left = arrays["left"]
    right = arrays["right"]
    node = np.zeros(X.shape[0], dtype=np.int32)
    active = np.nonzero(feature[node] != _LEAF)[0]
    while active.size:
        cur = node[active]
        go_left = X[active, feature[cur]] <= threshold[cur]
        node[active] = np.where(go_left, left[cur], right[cur])
        active = active[feature[node[active]] != _LEAF]
    return arrays["value"][node]


class DecisionTreeModel(TrainedModel):
    family = "tree"

    def __init__(self, arrays: dict[str, np.ndarray], hyperparams: TreeParams, *,
                 schema_fingerprint: str, n_features: int,
                 standardizer: Standardizer | None = None):
        super().__init__(schema_fingerprint=schema_fingerprint, n_features=n_features,
                         standardizer=standardizer, hyperparams=hyperparams)
        self.arrays = arrays

    def _score(self, X: np.ndarray) -> np.ndarray:
        return tree_scores(self.arrays, X)

    @property
    def n_nodes(self) -> int:
        return int(self.arrays["feature"].size)

    @property
    def depth(self) -> int:
        feature = self.arrays["feature"]
        depth = np.zeros(feature.size, dtype=np.int64)
        best = 0
        for i in range(feature.size):
            if feature[i] != _LEAF:
                d = depth[i] + 1
                depth[self.arrays["left"][i]] = d
                depth[self.arrays["right"][i]] = d
            else:
                best = max(best, int(depth[i]))
        return best

    def decision_path(self, x) -> list[tuple[int, str, float]]:
        """(slot, comparator, threshold) triples from root to the leaf for one vector."""
        v = np.asarray(x, dtype=float)
        if v.ndim != 1 or v.size != self.n_features:
            raise ValueError(f"expected a single vector of {self.n_features} slots")
        a = self.arrays
        steps: list[tuple[int, str, float]] = []
        node = 0
        while a["feature"][node] != _LEAF:
            f = int(a["feature"][node])
            thr = float(a["threshold"][node])
            if v[f] <= thr:
                steps.append((f, "<=", thr))
                node = int(a["left"][node])
            else:
                steps.append((f, ">", thr))
                node = int(a["right"][node])
        return steps

    def _params_to_dict(self) -> dict:
        return {k: v.tolist() for k, v in self.arrays.items()}

    @classmethod
    def _from_params(cls, params, hyperparams, *, schema_fingerprint, n_features, standardizer):
        arrays = {
            "feature": np.asarray(params["feature"], dtype=np.int32),
            "threshold": np.asarray(params["threshold"], dtype=np.float64),
            "left": np.asarray(params["left"], dtype=np.int32),
            "right": np.asarray(params["right"], dtype=np.int32),
            "value": np.asarray(params["value"], dtype=np.float64),
            "count": np.asarray(params["count"], dtype=np.int64),
        }
        return cls(arrays, hyperparams, schema_fingerprint=schema_fingerprint,
                   n_features=n_features, standardizer=standardizer)


def fit_tree(X: np.ndarray, y: np.ndarray, params: TreeParams, *,
             schema_fingerprint: str) -> DecisionTreeModel:
    arrays = grow_tree(X, y, params)
    return DecisionTreeModel(arrays, params, schema_fingerprint=schema_fingerprint,
                             n_features=X.shape[1])


register_family(DecisionTreeModel, TreeParams)

"""Decision tree growth, splitting rules, and traversal."""

import numpy as np
import pytest

from roadrisk.models import fit, load_model, save_model
from roadrisk.models.tree import DecisionTreeModel, TreeParams, fit_tree, gini, grow_tree

FP = "x" * 16  # fingerprint value is opaque to the tree itself


# --- impurity ------------------------------------------------------------------

def test_gini_known_values():
    assert gini([True, True, False]) == pytest.approx(4.0 / 9.0, abs=1e-15)
    assert gini([True, False]) == 0.5
    assert gini([True, True, True]) == 0.0
    assert gini([False]) == 0.0


def test_gini_empty_rejected():
    with pytest.raises(ValueError):
        gini([])


# --- hyperparameter validation ---------------------------------------------------

def test_tree_params_validation():
    TreeParams(max_depth=1, min_samples_split=2, min_samples_leaf=1)
    with pytest.raises(ValueError):
        TreeParams(max_depth=0)
    with pytest.raises(ValueError):
        TreeParams(min_samples_split=0)
    with pytest.raises(ValueError):
        TreeParams(min_samples_leaf=-1)
    with pytest.raises(ValueError):
        TreeParams(max_depth=2.5)


# --- growth rules ---------------------------------------------------------------

def test_constant_features_make_single_leaf():
    X = np.ones((4, 2))
    y = np.array([1, 1, 1, 0], dtype=np.uint8)
    tree = fit_tree(X, y, TreeParams(), schema_fingerprint=FP)
    assert tree.n_nodes == 1
    assert tree.depth == 0
    assert tree.predict_proba(np.ones(2)) == pytest.approx(0.75)


def test_pure_node_stops_immediately():
    X = np.arange(8, dtype=float).reshape(4, 2)
    y = np.ones(4, dtype=np.uint8)
    tree = fit_tree(X, y, TreeParams(), schema_fingerprint=FP)
    assert tree.n_nodes == 1
    assert tree.predict_proba(X[0]) == 1.0


def test_midpoint_threshold():
    X = np.array([[1.0], [3.0]])
    y = np.array([0, 1], dtype=np.uint8)
    tree = fit_tree(X, y, TreeParams(), schema_fingerprint=FP)
    assert tree.decision_path([1.0]) == [(0, "<=", 2.0)]
    assert tree.decision_path([3.0]) == [(0, ">", 2.0)]


def test_midpoint_guard_on_adjacent_floats():
    # if the midpoint of two adjacent floats rounds up to the right value,
    # the threshold falls back to the left value so the split stays real
    a = 1.0
    b = np.nextafter(1.0, 2.0)
    X = np.array([[a], [b]])
    y = np.array([0, 1], dtype=np.uint8)
    tree = fit_tree(X, y, TreeParams(), schema_fingerprint=FP)
    assert tree.n_nodes == 3
    assert tree.predict_proba(np.array([a])) == 0.0
    assert tree.predict_proba(np.array([b])) == 1.0


def test_zero_gain_splits_still_run():
    # XOR: no single split reduces impurity, yet depth 2 memorizes it exactly
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    y = np.array([0, 1, 1, 0], dtype=np.uint8)
    tree = fit_tree(X, y, TreeParams(), schema_fingerprint=FP)
    assert np.array_equal(tree.predict_proba(X), y.astype(float))
    assert tree.depth == 2
    assert tree.n_nodes == 7


def test_max_depth_caps_growth():
    rng = np.random.Generator(np.random.PCG64(51))
    X = rng.normal(size=(200, 5))
    y = (X[:, 2] + 0.3 * rng.normal(size=200) > 0).astype(np.uint8)
    stump = fit_tree(X, y, TreeParams(max_depth=1), schema_fingerprint=FP)
    assert stump.depth == 1 and stump.n_nodes == 3
    deep = fit_tree(X, y, TreeParams(max_depth=4), schema_fingerprint=FP)
    assert deep.depth <= 4


def test_min_samples_split_blocks_small_nodes():
    X = np.arange(4, dtype=float).reshape(4, 1)
    y = np.array([0, 1, 0, 1], dtype=np.uint8)
    tree = fit_tree(X, y, TreeParams(min_samples_split=5), schema_fingerprint=FP)
    assert tree.n_nodes == 1
    assert tree.predict_proba(np.array([0.0])) == 0.5


def test_min_samples_leaf_constrains_thresholds():
    X = np.arange(4, dtype=float).reshape(4, 1)
    y = np.array([0, 0, 0, 1], dtype=np.uint8)
    tree = fit_tree(X, y, TreeParams(min_samples_leaf=2), schema_fingerprint=FP)
    # the only legal split leaves two rows per side; the right leaf stays mixed
    assert tree.depth == 1
    assert tree.predict_proba(np.array([3.0])) == 0.5
    assert tree.predict_proba(np.array([0.0])) == 0.0


def test_first_feature_wins_score_ties():
    # both features split [0,1] perfectly; the earlier slot must be chosen
    X = np.array([[0.0, 0.0], [1.0, 1.0]])
    y = np.array([0, 1], dtype=np.uint8)
    tree = fit_tree(X, y, TreeParams(), schema_fingerprint=FP)
    assert tree.decision_path([0.0, 0.0])[0][0] == 0


def test_lowest_threshold_wins_within_feature():
    # splitting [0 | 1 1] and [0 1 | 1] both isolate the classes equally well
    X = np.array([[0.0], [1.0], [1.0]])
    y = np.array([0, 1, 1], dtype=np.uint8)
    tree = fit_tree(X, y, TreeParams(), schema_fingerprint=FP)
    assert tree.decision_path([0.0]) == [(0, "<=", 0.5)]


def test_separable_data_fits_exactly():
    rng = np.random.Generator(np.random.PCG64(52))
    X = rng.normal(size=(300, 4))
    y = (X[:, 1] > 0.37).astype(np.uint8)
    tree = fit_tree(X, y, TreeParams(), schema_fingerprint=FP)
    assert np.array_equal(tree.predict_proba(X), y.astype(float))


def test_scores_match_decision_paths():
    rng = np.random.Generator(np.random.PCG64(53))
    X = rng.normal(size=(150, 6))
    y = (X[:, 0] * X[:, 3] > 0).astype(np.uint8)
    tree = fit_tree(X, y, TreeParams(max_depth=5), schema_fingerprint=FP)
    scores = tree.predict_proba(X)
    for i in range(len(X)):
        node = 0
        a = tree.arrays
        for slot, op, thr in tree.decision_path(X[i]):
            assert a["feature"][node] == slot
            node = int(a["left"][node] if op == "<=" else a["right"][node])
        assert scores[i] == a["value"][node]


def test_feature_subsampling_is_seeded():
    rng_a = np.random.Generator(np.random.PCG64(54))
    rng_b = np.random.Generator(np.random.PCG64(54))
    rng = np.random.Generator(np.random.PCG64(55))
    X = rng.normal(size=(100, 8))
    y = (X[:, 5] > 0).astype(np.uint8)
    arrays_a = grow_tree(X, y, TreeParams(), feature_rng=rng_a, features_per_split=2)
    arrays_b = grow_tree(X, y, TreeParams(), feature_rng=rng_b, features_per_split=2)
    for key in arrays_a:
        assert np.array_equal(arrays_a[key], arrays_b[key])


def test_tree_fit_is_deterministic():
    rng = np.random.Generator(np.random.PCG64(56))
    X = rng.normal(size=(120, 5))
    y = (X[:, 2] > 0.1).astype(np.uint8)
    t1 = fit("dt", X, y)
    t2 = fit("tree", X, y)
    assert np.array_equal(t1.predict_proba(X), t2.predict_proba(X))
    assert isinstance(t1, DecisionTreeModel)


def test_tree_round_trips_through_file(tmp_path):
    rng = np.random.Generator(np.random.PCG64(57))
    X = rng.normal(size=(80, 4))
    y = (X[:, 0] > 0).astype(np.uint8)
    tree = fit("tree", X, y, TreeParams(max_depth=3))
    clone = load_model(save_model(tree, tmp_path / "t.json"))
    assert np.array_equal(clone.predict_proba(X), tree.predict_proba(X))
    assert clone.hyperparams == tree.hyperparams


def test_decision_path_rejects_bad_shapes():
    X = np.array([[0.0], [1.0]])
    y = np.array([0, 1], dtype=np.uint8)
    tree = fit_tree(X, y, TreeParams(), schema_fingerprint=FP)
    with pytest.raises(ValueError):
        tree.decision_path([[0.0]])
    with pytest.raises(ValueError):
        tree.decision_path([0.0, 1.0])

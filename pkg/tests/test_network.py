"""Feed-forward network: initialization, backprop gradients, Adam, training."""

import numpy as np
import pytest

from roadrisk.models import fit, load_model, save_model
from roadrisk.models.network import (
    NetworkModel,
    NetworkParams,
    _AdamState,
    forward,
    glorot_init,
    loss_and_gradients,
)


def _flat_check_gradients(layer_sizes, n_samples, seed, h=1e-6):
    """Central-difference comparison against the analytic gradients."""
    rng = np.random.Generator(np.random.PCG64(seed))
    weights, biases = glorot_init(layer_sizes, rng)
    for b in biases:  # non-zero biases exercise every term
        b += rng.normal(scale=0.1, size=b.shape)
    X = rng.normal(size=(n_samples, layer_sizes[0]))
    y = (rng.uniform(size=n_samples) < 0.5).astype(np.float64)

    _, grad_w, grad_b = loss_and_gradients(weights, biases, X, y)

    def loss_at():
        _, _, p = forward(weights, biases, X)
        return -np.mean(y * np.log(p) + (1 - y) * np.log(1 - p))

    worst = 0.0
    for params, grads in ((weights, grad_w), (biases, grad_b)):
        for P, G in zip(params, grads):
            it = np.nditer(P, flags=["multi_index"])
            for _ in it:
                ix = it.multi_index
                keep = P[ix]
                P[ix] = keep + h
                up = loss_at()
                P[ix] = keep - h
                down = loss_at()
                P[ix] = keep
                num = (up - down) / (2 * h)
                denom = max(abs(num), abs(G[ix]), 1e-8)
                worst = max(worst, abs(num - G[ix]) / denom)
    return worst


def test_params_validation_and_coercion():
    p = NetworkParams(hidden_sizes=[8, 4])
    assert p.hidden_sizes == (8, 4)
    with pytest.raises(ValueError):
        NetworkParams(hidden_sizes=())
    with pytest.raises(ValueError):
        NetworkParams(hidden_sizes=(0,))
    with pytest.raises(ValueError):
        NetworkParams(learning_rate=0.0)
    with pytest.raises(ValueError):
        NetworkParams(epochs=0)
    with pytest.raises(ValueError):
        NetworkParams(batch_size=0)


def test_glorot_bounds_and_shapes():
    rng = np.random.Generator(np.random.PCG64(71))
    weights, biases = glorot_init([23, 10, 1], rng)
    assert [W.shape for W in weights] == [(23, 10), (10, 1)]
    assert [b.shape for b in biases] == [(10,), (1,)]
    for W in weights:
        limit = np.sqrt(6.0 / sum(W.shape))
        assert np.abs(W).max() <= limit
    for b in biases:
        assert not b.any()


def test_forward_shapes_and_range():
    rng = np.random.Generator(np.random.PCG64(72))
    weights, biases = glorot_init([5, 4, 1], rng)
    X = rng.normal(size=(12, 5))
    zs, activations, p = forward(weights, biases, X)
    assert len(zs) == 2 and len(activations) == 2
    assert zs[0].shape == (12, 4)
    assert (activations[1] >= 0).all()  # ReLU output
    assert p.shape == (12,)
    assert ((p > 0) & (p < 1)).all()


def test_gradients_match_finite_differences():
    worst = _flat_check_gradients([5, 4, 1], n_samples=32, seed=73)
    assert worst < 1e-4


def test_gradients_match_on_deeper_net():
    worst = _flat_check_gradients([6, 5, 3, 1], n_samples=16, seed=74)
    assert worst < 1e-4


def test_adam_first_step_is_signed_learning_rate():
    # at t=1 the bias-corrected moments cancel to g / (|g| + eps)
    state = _AdamState([(2,)])
    params = [np.array([1.0, -1.0])]
    grads = [np.array([0.5, -0.25])]
    state.step(params, grads, lr=0.01, t=1)
    assert params[0][0] == pytest.approx(1.0 - 0.01, abs=1e-9)
    assert params[0][1] == pytest.approx(-1.0 + 0.01, abs=1e-9)


def test_adam_zero_gradient_is_noop():
    state = _AdamState([(3,)])
    params = [np.ones(3)]
    state.step(params, [np.zeros(3)], lr=0.1, t=1)
    assert np.array_equal(params[0], np.ones(3))


def test_fit_deterministic_per_seed():
    rng = np.random.Generator(np.random.PCG64(75))
    X = rng.normal(size=(200, 23))
    y = (X[:, 0] > 0).astype(np.uint8)
    hp = NetworkParams(hidden_sizes=(6,), epochs=5, batch_size=64)
    a = fit("nn", X, y, hp, seed=11)
    b = fit("nn", X, y, hp, seed=11)
    for Wa, Wb in zip(a.weights, b.weights):
        assert np.array_equal(Wa, Wb)
    c = fit("nn", X, y, hp, seed=12)
    assert not np.array_equal(a.weights[0], c.weights[0])


def test_training_loss_decreases():
    rng = np.random.Generator(np.random.PCG64(76))
    X = rng.normal(size=(400, 23))
    y = (X[:, 1] - X[:, 7] > 0).astype(np.uint8)
    model = fit("nn", X, y, NetworkParams(hidden_sizes=(8,), epochs=40, learning_rate=0.01),
                seed=0)
    assert len(model.training_loss) == 40
    assert model.training_loss[-1] < 0.5 * model.training_loss[0]


def test_learns_nonlinear_boundary():
    rng = np.random.Generator(np.random.PCG64(77))
    X = np.zeros((600, 23))
    X[:, :2] = rng.uniform(-1, 1, size=(600, 2))
    y = ((X[:, 0] * X[:, 1]) > 0).astype(np.uint8)  # XOR-style quadrants
    model = fit("network", X, y,
                NetworkParams(hidden_sizes=(16,), epochs=300, learning_rate=0.01, batch_size=64),
                seed=3)
    acc = float(((model.predict_proba(X) >= 0.5) == y).mean())
    assert acc > 0.9


def test_network_round_trips_through_file(tmp_path):
    rng = np.random.Generator(np.random.PCG64(78))
    X = rng.normal(size=(100, 23))
    y = (X[:, 2] > 0).astype(np.uint8)
    model = fit("nn", X, y, NetworkParams(hidden_sizes=(5, 3), epochs=3), seed=1)
    clone = load_model(save_model(model, tmp_path / "n.json"))
    assert isinstance(clone, NetworkModel)
    assert clone.hyperparams.hidden_sizes == (5, 3)
    assert np.array_equal(clone.predict_proba(X), model.predict_proba(X))

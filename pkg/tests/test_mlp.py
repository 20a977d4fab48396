import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from imputelab import mlp
from imputelab.data import gen_synthetic
from imputelab.errors import DimensionMismatch, InvalidConfig, NonFiniteLoss


def numeric_grad(model, X, T, eps=1e-5):
    theta = model.params()
    g = np.empty_like(theta)
    for k in range(theta.size):
        up, down = theta.copy(), theta.copy()
        up[k] += eps
        down[k] -= eps
        lu, _ = mlp.loss_and_gradients(model.with_params(up), X, T)
        ld, _ = mlp.loss_and_gradients(model.with_params(down), X, T)
        g[k] = (lu - ld) / (2 * eps)
    return g


def rel_error(a, b):
    return np.max(np.abs(a - b)) / max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-12)


def random_net(seed, d=5, h=3, **kw):
    cfg = mlp.MlpConfig(n_inputs=d, n_hidden=h, seed=seed, **kw)
    return mlp.init(cfg)


def test_init_shapes_and_determinism():
    cfg = mlp.autoencoder_config(5)
    m = mlp.init(cfg)
    assert m.W1.shape == (4, 5) and m.W2.shape == (5, 4)
    assert np.all(m.b1 == 0) and np.all(m.b2 == 0)
    assert np.all(np.abs(m.W1) <= 1 / math.sqrt(5))
    assert mlp.init(cfg) == m
    assert mlp.init(replace(cfg, seed=1)) != m


def test_zero_hidden_is_invalid():
    with pytest.raises(InvalidConfig):
        mlp.init(mlp.MlpConfig(n_inputs=5, n_hidden=0))


@pytest.mark.parametrize("field,value", [
    ("hidden_activation", "relu"), ("output_activation", "tanh"), ("optimizer", "adam"),
    ("epochs", -1), ("learning_rate", 0.0), ("weight_decay", -1.0),
])
def test_config_validation(field, value):
    with pytest.raises(InvalidConfig):
        replace(mlp.MlpConfig(n_inputs=3, n_hidden=2), **{field: value}).validate()


def hand_model(W1, b1, W2, b2, hidden="tanh", out="linear"):
    W1 = np.atleast_2d(W1)
    W2 = np.atleast_2d(W2)
    cfg = mlp.MlpConfig(W1.shape[1], W1.shape[0], hidden, out, n_outputs=W2.shape[0])
    return mlp.MlpModel(W1, b1, W2, b2, cfg)


def test_forward_zero_weights():
    m = hand_model(np.zeros((3, 4)), np.zeros(3), np.zeros((4, 3)), np.zeros(4))
    assert mlp.forward(m, np.ones(4)).tolist() == [0.0] * 4


def test_forward_tanh_oracle():
    m = hand_model([[1.0]], [0.0], [[1.0]], [0.0])
    y = mlp.forward(m, [0.5])
    assert y[0] == pytest.approx(0.46211715726000974, abs=1e-12)


def test_sigmoid_output_in_unit_interval():
    m = random_net(0, output_activation="sigmoid")
    y = mlp.forward(m, np.random.default_rng(0).normal(size=(50, 5)) * 10)
    assert np.all((y > 0) & (y < 1))


def test_forward_dimension_check():
    with pytest.raises(DimensionMismatch):
        mlp.forward(random_net(0), np.ones(4))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_linearized_forward_is_affine(seed):
    rng = np.random.default_rng(seed)
    W1, b1 = rng.normal(size=(3, 5)), rng.normal(size=3)
    W2, b2 = rng.normal(size=(5, 3)), rng.normal(size=5)
    m = hand_model(W1, b1, W2, b2, hidden="linear", out="linear")
    x = rng.normal(size=5)
    assert np.array_equal(mlp.forward(m, x), (x @ W1.T + b1) @ W2.T + b2)


def test_forward_batch_matches_rows():
    m = random_net(3)
    X = np.random.default_rng(1).random((6, 5))
    batch = mlp.forward(m, X)
    for i in range(6):
        assert np.allclose(batch[i], mlp.forward(m, X[i]), rtol=0, atol=1e-15)


@pytest.mark.parametrize("hidden", ["tanh", "sigmoid", "linear"])
@pytest.mark.parametrize("out", ["sigmoid", "linear"])
def test_gradient_check(hidden, out):
    rng = np.random.default_rng(7)
    m = random_net(11, hidden_activation=hidden, output_activation=out, weight_decay=1e-3)
    m = m.with_params(m.params() + rng.normal(scale=0.3, size=m.params().size))
    X = rng.random((8, 5))
    T = rng.random((8, 5))
    _, g = mlp.loss_and_gradients(m, X, T)
    assert rel_error(g, numeric_grad(m, X, T)) < 1e-4


def test_params_roundtrip():
    m = random_net(2)
    assert m.with_params(m.params()) == m
    with pytest.raises(DimensionMismatch):
        m.with_params(np.zeros(3))


def test_zero_epochs_is_identity():
    m = random_net(0)
    X = np.random.default_rng(0).random((5, 5))
    for opt in ("gd", "lbfgs"):
        mm = mlp.init(replace(m.config, epochs=0, optimizer=opt))
        out, hist = mlp.train(mm, X)
        assert out == mm and hist.size == 0


def test_history_length_and_training_determinism():
    X = gen_synthetic("nonlinear", 200, seed=0).values
    m = mlp.init(mlp.autoencoder_config(5, epochs=37))
    a, ha = mlp.train(m, X)
    b, hb = mlp.train(m, X)
    assert ha.size == 37
    assert a == b and np.array_equal(ha, hb)
    assert ha[-1] <= ha[0]


def test_single_row_is_memorized():
    row = np.tile([0.2, 0.8, 0.5, 0.3, 0.6], (10, 1))
    m = mlp.init(mlp.autoencoder_config(5, output_activation="linear"))
    trained, _ = mlp.train(m, row)
    assert mlp.mse(trained, row) < 1e-3


def test_divergence_raises():
    X = np.random.default_rng(0).random((20, 5))
    m = mlp.init(mlp.autoencoder_config(5, output_activation="linear", learning_rate=1e6))
    with pytest.raises(NonFiniteLoss):
        mlp.train(m, X)


def test_train_shape_checks():
    m = random_net(0)
    with pytest.raises(DimensionMismatch):
        mlp.train(m, np.zeros((3, 4)))
    with pytest.raises(DimensionMismatch):
        mlp.train(m, np.zeros((3, 5)), np.zeros((2, 5)))


@pytest.mark.xfail(strict=True, reason="plain full-batch GD at lr 0.1 cuts MSE by only ~15% in 200 epochs")
def test_gd_halves_mse_in_200_epochs():
    X = gen_synthetic("nonlinear", 2000, seed=0).values
    m = mlp.init(mlp.autoencoder_config(5, epochs=200, learning_rate=0.1))
    before = mlp.mse(m, X)
    trained, _ = mlp.train(m, X)
    assert mlp.mse(trained, X) <= 0.5 * before


def test_lbfgs_halves_mse_in_200_iterations():
    X = gen_synthetic("nonlinear", 2000, seed=0).values
    m = mlp.init(mlp.autoencoder_config(5, epochs=200, optimizer="lbfgs"))
    before = mlp.mse(m, X)
    trained, hist = mlp.train(m, X)
    assert mlp.mse(trained, X) <= 0.5 * before
    assert hist.size <= 200


def test_mse_examples():
    X = np.ones((4, 3))
    zero = hand_model(np.zeros((2, 3)), np.zeros(2), np.zeros((3, 2)), np.zeros(3))
    assert mlp.mse(zero, X) == 1.0
    ident = hand_model(np.eye(3), np.zeros(3), np.eye(3), np.zeros(3), hidden="linear")
    assert mlp.mse(ident, np.random.default_rng(0).random((5, 3))) == pytest.approx(0.0, abs=1e-30)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 1000), st.integers(1, 20))
def test_mse_nonnegative(seed, n):
    X = np.random.default_rng(seed).normal(size=(n, 5))
    assert mlp.mse(random_net(seed, h=4, n_outputs=None), X) >= 0.0


def test_text_roundtrip_is_exact():
    X = gen_synthetic("nonlinear", 100, seed=1).values
    m, _ = mlp.train(mlp.init(mlp.autoencoder_config(5, epochs=5, weight_decay=1e-4, seed=9)), X)
    assert mlp.from_text(mlp.to_text(m)) == m
    nonauto = random_net(0, h=2, n_outputs=3)
    assert mlp.from_text(mlp.to_text(nonauto)) == nonauto

"""Single-hidden-layer perceptron used as an autoencoder.

The training loss is the mean squared reconstruction error plus optional L2
weight decay on the weight matrices (biases are not decayed). It is minimised
full-batch, either by plain gradient descent or by L-BFGS with ``epochs`` as
the iteration budget.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit

from .errors import DimensionMismatch, InvalidConfig, NonFiniteLoss

HIDDEN_ACTIVATIONS = ("tanh", "sigmoid", "linear")
OUTPUT_ACTIVATIONS = ("linear", "sigmoid")
OPTIMIZERS = ("gd", "lbfgs")


@dataclass(frozen=True)
class MlpConfig:
    n_inputs: int
    n_hidden: int
    hidden_activation: str = "tanh"
    output_activation: str = "sigmoid"
    epochs: int = 200
    learning_rate: float = 0.1
    weight_decay: float = 0.0
    seed: int = 0
    n_outputs: int | None = None  # None: autoencoder, same width as input
    optimizer: str = "gd"

    @property
    def width_out(self) -> int:
        return self.n_inputs if self.n_outputs is None else self.n_outputs

    def validate(self) -> None:
        if self.n_inputs < 1 or self.width_out < 1:
            raise InvalidConfig("n_inputs and n_outputs must be positive")
        if self.n_hidden < 1:
            raise InvalidConfig("n_hidden must be at least 1")
        if self.hidden_activation not in HIDDEN_ACTIVATIONS:
            raise InvalidConfig(f"hidden_activation must be one of {HIDDEN_ACTIVATIONS}")
        if self.output_activation not in OUTPUT_ACTIVATIONS:
            raise InvalidConfig(f"output_activation must be one of {OUTPUT_ACTIVATIONS}")
        if self.optimizer not in OPTIMIZERS:
            raise InvalidConfig(f"optimizer must be one of {OPTIMIZERS}")
        if self.epochs < 0:
            raise InvalidConfig("epochs must be non-negative")
        if not self.learning_rate > 0:
            raise InvalidConfig("learning_rate must be positive")
        if self.weight_decay < 0:
            raise InvalidConfig("weight_decay must be non-negative")


@dataclass(frozen=True)
class MlpModel:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    config: MlpConfig

    def __post_init__(self):
        for name in ("W1", "b1", "W2", "b2"):
            a = np.array(getattr(self, name), dtype=np.float64)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        h, d = self.W1.shape
        m = self.W2.shape[0]
        if self.b1.shape != (h,) or self.W2.shape != (m, h) or self.b2.shape != (m,):
            raise DimensionMismatch("inconsistent layer shapes")

    @property
    def n_inputs(self) -> int:
        return self.W1.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.W2.shape[0]

    def params(self) -> np.ndarray:
        """All weights and biases as one flat vector (W1, b1, W2, b2 order)."""
        return np.concatenate([self.W1.ravel(), self.b1, self.W2.ravel(), self.b2])

    def with_params(self, flat) -> "MlpModel":
        flat = np.asarray(flat, dtype=np.float64)
        h, d = self.W1.shape
        m = self.W2.shape[0]
        sizes = np.cumsum([h * d, h, m * h])
        if flat.shape != (sizes[-1] + m,):
            raise DimensionMismatch("flat parameter vector has the wrong length")
        W1, b1, W2, b2 = np.split(flat, sizes)
        return MlpModel(W1.reshape(h, d), b1, W2.reshape(m, h), b2, self.config)

    def __eq__(self, other):
        if not isinstance(other, MlpModel):
            return NotImplemented
        return self.config == other.config and all(
            np.array_equal(getattr(self, k), getattr(other, k))
            for k in ("W1", "b1", "W2", "b2")
        )

    __hash__ = None


def init(config: MlpConfig) -> MlpModel:
    config.validate()
    rng = np.random.default_rng(config.seed)
    d, h, m = config.n_inputs, config.n_hidden, config.width_out
    W1 = rng.uniform(-1.0, 1.0, size=(h, d)) / np.sqrt(d)
    W2 = rng.uniform(-1.0, 1.0, size=(m, h)) / np.sqrt(h)
    return MlpModel(W1, np.zeros(h), W2, np.zeros(m), config)


def _act(name, a):
    if name == "tanh":
        return np.tanh(a)
    if name == "sigmoid":
        return expit(a)
    return a


def _act_grad(name, out):
    # derivative written in terms of the activation's output
    if name == "tanh":
        return 1.0 - out * out
    if name == "sigmoid":
        return out * (1.0 - out)
    return np.ones_like(out)


def _forward(model, X):
    cfg = model.config
    H = _act(cfg.hidden_activation, X @ model.W1.T + model.b1)
    Y = _act(cfg.output_activation, H @ model.W2.T + model.b2)
    return H, Y


def forward(model: MlpModel, x) -> np.ndarray:
    """Evaluate the network on one vector or on each row of a matrix."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.n_inputs:
        raise DimensionMismatch(f"expected {model.n_inputs} inputs, got {x.shape[-1]}")
    return _forward(model, x)[1]


def _check_matrix(model, data, targets):
    data = np.atleast_2d(np.asarray(data, dtype=np.float64))
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    if data.shape[1] != model.n_inputs:
        raise DimensionMismatch(f"data has {data.shape[1]} columns, model takes {model.n_inputs}")
    if targets.shape != (data.shape[0], model.n_outputs):
        raise DimensionMismatch(f"targets shape {targets.shape} does not match")
    if not (np.isfinite(data).all() and np.isfinite(targets).all()):
        raise ValueError("training rows must be complete")
    return data, targets


def loss_and_gradients(model: MlpModel, data, targets):
    """Regularised MSE and its gradient as a flat vector ordered like ``params()``."""
    X, T = _check_matrix(model, data, targets)
    cfg = model.config
    wd = cfg.weight_decay
    # overflow surfaces as a non-finite loss, which the trainer reports
    with np.errstate(over="ignore", invalid="ignore"):
        H, Y = _forward(model, X)
        R = Y - T
        loss = np.mean(R * R) + wd * (np.sum(model.W1**2) + np.sum(model.W2**2))

        dZ2 = (2.0 / R.size) * R * _act_grad(cfg.output_activation, Y)
        gW2 = dZ2.T @ H + 2.0 * wd * model.W2
        gb2 = dZ2.sum(axis=0)
        dA1 = (dZ2 @ model.W2) * _act_grad(cfg.hidden_activation, H)
        gW1 = dA1.T @ X + 2.0 * wd * model.W1
        gb1 = dA1.sum(axis=0)
    return float(loss), np.concatenate([gW1.ravel(), gb1, gW2.ravel(), gb2])


def train(model: MlpModel, data, targets=None):
    """Fit the network for ``config.epochs`` full-batch steps.

    ``targets`` defaults to ``data`` (autoencoder). Returns the trained model
    and the loss at the start of each step. Gradient descent always runs every
    epoch; L-BFGS may stop early once the loss stops improving, so its history
    can be shorter.
    """
    if targets is None:
        targets = data
    X, T = _check_matrix(model, data, targets)
    if model.config.optimizer == "lbfgs":
        return _train_lbfgs(model, X, T)
    lr = model.config.learning_rate
    theta = model.params()
    history = np.empty(model.config.epochs)
    current = model
    for epoch in range(model.config.epochs):
        loss, grad = loss_and_gradients(current, X, T)
        if not np.isfinite(loss):
            raise NonFiniteLoss(f"loss became {loss} at epoch {epoch}")
        history[epoch] = loss
        theta = theta - lr * grad
        if not np.isfinite(theta).all():
            raise NonFiniteLoss(f"weights diverged at epoch {epoch}")
        current = current.with_params(theta)
    return current, history


def _train_lbfgs(model, X, T):
    if model.config.epochs == 0:
        return model, np.empty(0)
    history = []

    def fun(theta):
        loss, grad = loss_and_gradients(model.with_params(theta), X, T)
        if not np.isfinite(loss):
            raise NonFiniteLoss(f"loss became {loss}")
        return loss, grad

    def record(theta):
        history.append(fun(theta)[0])

    history.append(fun(model.params())[0])
    res = minimize(
        fun,
        model.params(),
        jac=True,
        method="L-BFGS-B",
        callback=record,
        options={"maxiter": model.config.epochs, "gtol": 0.0, "ftol": 0.0},
    )
    # callback records the loss after each iteration; keep the pre-step convention
    return model.with_params(res.x), np.array(history[: model.config.epochs])


def mse(model: MlpModel, data) -> float:
    X, _ = _check_matrix(model, data, np.zeros((np.atleast_2d(data).shape[0], model.n_outputs)))
    if model.n_outputs != model.n_inputs:
        raise DimensionMismatch("mse needs an autoencoder (n_outputs == n_inputs)")
    R = X - forward(model, X)
    return float(np.mean(R * R))


# --------------------------------------------------------------------------
# text serialization


def _fmt(a) -> str:
    return " ".join(repr(float(v)) for v in np.ravel(a))


def to_text(model: MlpModel) -> str:
    cfg = model.config
    h, d = model.W1.shape
    m = model.n_outputs
    lines = [
        "imputelab-mlp 1",
        f"dims {d} {h} {m}",
        f"activations {cfg.hidden_activation} {cfg.output_activation}",
        f"training {cfg.epochs} {cfg.learning_rate!r} {cfg.weight_decay!r} {cfg.seed}",
        f"autoencoder {int(cfg.n_outputs is None)}",
        f"optimizer {cfg.optimizer}",
    ]
    lines.append("W1")
    lines.extend(_fmt(row) for row in model.W1)
    lines.append("b1")
    lines.append(_fmt(model.b1))
    lines.append("W2")
    lines.extend(_fmt(row) for row in model.W2)
    lines.append("b2")
    lines.append(_fmt(model.b2))
    return "\n".join(lines) + "\n"


def from_text(text: str) -> MlpModel:
    lines = [ln.strip() for ln in text.strip().splitlines()]
    if not lines or lines[0] != "imputelab-mlp 1":
        raise ValueError("not an imputelab MLP file")
    d, h, m = (int(v) for v in lines[1].split()[1:])
    hidden_act, out_act = lines[2].split()[1:]
    epochs, lr, wd, seed = lines[3].split()[1:]
    auto = lines[4].split()[1] == "1"
    optimizer = lines[5].split()[1]
    cfg = MlpConfig(
        n_inputs=d,
        n_hidden=h,
        hidden_activation=hidden_act,
        output_activation=out_act,
        epochs=int(epochs),
        learning_rate=float(lr),
        weight_decay=float(wd),
        seed=int(seed),
        n_outputs=None if auto else m,
        optimizer=optimizer,
    )

    def rows(start, count):
        return np.array([[float(v) for v in ln.split()] for ln in lines[start : start + count]])

    i = 6
    if lines[i] != "W1":
        raise ValueError("malformed MLP file")
    W1 = rows(i + 1, h).reshape(h, d)
    i += 1 + h
    b1 = rows(i + 1, 1).reshape(h)
    i += 2
    W2 = rows(i + 1, m).reshape(m, h)
    i += 1 + m
    b2 = rows(i + 1, 1).reshape(m)
    return MlpModel(W1, b1, W2, b2, cfg)


def autoencoder_config(n_inputs: int, **kwargs) -> MlpConfig:
    """Config with the default bottleneck of ``n_inputs - 1`` hidden units."""
    kwargs.setdefault("n_hidden", max(1, n_inputs - 1))
    return replace(MlpConfig(n_inputs=n_inputs, n_hidden=1), **kwargs)

"""Minimal fully-connected classifier for initialization-phase studies.

A plain-numpy multilayer perceptron — six tanh hidden layers and a
10-unit linear head by default — trained with seeded mini-batch SGD and
no regularization.  The point is not benchmark accuracy but controlled
comparisons: the same training run repeated across ordered, critical,
and chaotic initializations, and against halved data, width, or batch
size, to see which initialization keeps its performance when resources
shrink.

The classifier follows the fit/predict/score estimator convention with
``get_params``/``set_params``, so experiment variants are parameter
clones rather than bespoke code paths.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .data import Dataset
from .meanfield import Activation, HyperParams, tanh_activation
from .propagator import PHASE_PRESETS, NetworkArchitecture

__all__ = [
    "TrainConfig",
    "AccuracyCurve",
    "TanhMLPClassifier",
    "train",
    "gradient",
    "phase_comparison",
    "resize_training_experiment",
    "TRAINING_PHASES",
]

# the chaotic training phase is the disordered propagation phase
TRAINING_PHASES: dict[str, HyperParams] = {
    "ordered": PHASE_PRESETS["ordered"],
    "critical": PHASE_PRESETS["critical"],
    "chaotic": PHASE_PRESETS["disordered"],
}

LOSSES = ("cross-entropy", "sum-of-squares")


@dataclass(frozen=True)
class TrainConfig:
    """Everything that determines a training run, seed included."""

    arch: NetworkArchitecture
    hp: HyperParams
    loss: str = "cross-entropy"
    learning_rate: float = 0.1
    batch_size: int = 32
    epochs: int = 20
    train_size: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if self.loss not in LOSSES:
            raise ValueError(f"loss must be one of {LOSSES}, got {self.loss!r}")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not 1 <= self.batch_size <= self.train_size:
            raise ValueError(
                f"batch_size {self.batch_size} must lie in 1..{self.train_size}"
            )


@dataclass(frozen=True)
class AccuracyCurve:
    """Per-epoch validation accuracy of one training run."""

    accuracies: tuple          # floats in [0, 1], one per epoch
    config: TrainConfig
    wall_times: tuple          # seconds per epoch; informational only

    @property
    def final(self) -> float:
        return self.accuracies[-1]


def default_arch(
    input_dim: int = 784, hidden_width: int = 50, hidden_layers: int = 6
) -> NetworkArchitecture:
    """Input → six tanh hidden layers → 10-class linear head."""
    widths = (input_dim,) + (hidden_width,) * hidden_layers + (10,)
    return NetworkArchitecture(layer_widths=widths, activation=tanh_activation())


# ---------------------------------------------------------------------------
# parameter initialization and the forward/backward core


def _init_params(config: TrainConfig, rng: np.random.Generator):
    """Layer-major parameter draw; weights before the layer's biases."""
    widths = config.arch.layer_widths
    params = []
    for n_in, n_out in zip(widths[:-1], widths[1:]):
        w = rng.normal(0.0, config.hp.sigma_w / np.sqrt(n_in), size=(n_in, n_out))
        b = rng.normal(0.0, config.hp.sigma_b, size=n_out)
        params.append((w, b))
    return params


def _forward_full(params, act: Activation, x: np.ndarray):
    """All pre-activations; hidden layers activated, head left linear."""
    hs = []
    a = x
    last = len(params) - 1
    for i, (w, b) in enumerate(params):
        h = a @ w + b
        hs.append(h)
        a = act.phi(h) if i < last else h
    return hs


def _logits(params, act: Activation, x: np.ndarray) -> np.ndarray:
    return _forward_full(params, act, x)[-1]


def _loss_and_output_grad(logits: np.ndarray, labels: np.ndarray, loss: str):
    m = len(labels)
    onehot = np.zeros_like(logits)
    onehot[np.arange(m), labels] = 1.0
    if loss == "cross-entropy":
        shifted = logits - logits.max(axis=1, keepdims=True)
        log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        log_p = shifted - log_z
        value = float(-(onehot * log_p).sum() / m)
        grad = (np.exp(log_p) - onehot) / m
    else:  # sum-of-squares on the linear head
        r = logits - onehot
        value = float(0.5 * (r * r).sum() / m)
        grad = r / m
    return value, grad


def _backward(params, act: Activation, x: np.ndarray, hs, out_grad: np.ndarray):
    """Gradients for every (w, b), given d(loss)/d(logits)."""
    grads = [None] * len(params)
    g = out_grad
    for i in range(len(params) - 1, -1, -1):
        a_prev = x if i == 0 else act.phi(hs[i - 1])
        grads[i] = (a_prev.T @ g, g.sum(axis=0))
        if i > 0:
            g = (g @ params[i][0].T) * act.dphi(hs[i - 1])
    return grads


def gradient(config: TrainConfig, params, batch):
    """Analytic loss gradients at the given parameters on one batch.

    ``batch`` is (inputs, labels).  Returned structure mirrors
    ``params``: a list of (dW, db) pairs.  Exactness relative to
    central finite differences is part of the test contract.
    """
    x, y = batch
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.int64)
    act = config.arch.activation
    hs = _forward_full(params, act, x)
    _, out_grad = _loss_and_output_grad(hs[-1], y, config.loss)
    return _backward(params, act, x, hs, out_grad)


def _accuracy(params, act: Activation, x: np.ndarray, y: np.ndarray) -> float:
    # np.argmax resolves ties toward the lowest class index
    pred = np.argmax(_logits(params, act, x), axis=1)
    return float((pred == y).mean())


def _sgd_run(config: TrainConfig, x, y, val_x, val_y):
    """The seeded SGD loop; returns (params, accuracies, wall_times)."""
    act = config.arch.activation
    rng = np.random.default_rng(config.seed)
    params = _init_params(config, rng)
    n = len(y)
    lr = config.learning_rate

    accuracies, wall_times = [], []
    for epoch in range(config.epochs):
        t0 = time.perf_counter()
        perm = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = perm[start : start + config.batch_size]
            xb, yb = x[idx], y[idx]
            hs = _forward_full(params, act, xb)
            value, out_grad = _loss_and_output_grad(hs[-1], yb, config.loss)
            if not np.isfinite(value):
                raise ArithmeticError(
                    f"non-finite loss at epoch {epoch}, batch {start // config.batch_size}"
                )
            grads = _backward(params, act, xb, hs, out_grad)
            params = [
                (w - lr * dw, b - lr * db)
                for (w, b), (dw, db) in zip(params, grads)
            ]
        accuracies.append(_accuracy(params, act, val_x, val_y))
        wall_times.append(time.perf_counter() - t0)
    return params, accuracies, wall_times


def train(
    config: TrainConfig, train_data: Dataset, validation_data: Dataset
) -> AccuracyCurve:
    """Mini-batch SGD with backpropagation; fully seeded, no regularizer.

    The seed fixes initialization and every epoch's shuffle, so a
    config determines its accuracy curve exactly.  Raises on label
    range violations and on non-finite loss (reporting epoch/batch), a
    symptom of a divergent learning rate.
    """
    x = train_data.inputs[: config.train_size]
    y = train_data.labels[: config.train_size]
    if x.shape[1] != config.arch.layer_widths[0]:
        raise ValueError(
            f"input dimension {x.shape[1]} does not match architecture "
            f"input width {config.arch.layer_widths[0]}"
        )
    if y.min() < 0 or y.max() > 9:
        raise ValueError(f"labels outside 0..9: range {y.min()}..{y.max()}")

    _, accuracies, wall_times = _sgd_run(
        config, x, y, validation_data.inputs, validation_data.labels
    )
    return AccuracyCurve(
        accuracies=tuple(accuracies), config=config, wall_times=tuple(wall_times)
    )


# ---------------------------------------------------------------------------
# estimator-style interface


class TanhMLPClassifier:
    """Fit/predict wrapper around :func:`train` with cloneable params.

    Parameters mirror TrainConfig; ``fit(X, y)`` trains on the given
    arrays and stores the learned parameters, ``predict`` returns class
    indices, ``score`` the mean accuracy.  When a validation set is
    passed to ``fit`` the per-epoch curve is kept on
    ``validation_curve_``.
    """

    def __init__(
        self,
        hidden_width: int = 50,
        hidden_layers: int = 6,
        sigma_w: float = 1.39,
        sigma_b: float = 0.3,
        loss: str = "cross-entropy",
        learning_rate: float = 0.1,
        batch_size: int = 32,
        epochs: int = 20,
        seed: int = 0,
    ):
        self.hidden_width = hidden_width
        self.hidden_layers = hidden_layers
        self.sigma_w = sigma_w
        self.sigma_b = sigma_b
        self.loss = loss
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.epochs = epochs
        self.seed = seed

    _PARAM_NAMES = (
        "hidden_width", "hidden_layers", "sigma_w", "sigma_b", "loss",
        "learning_rate", "batch_size", "epochs", "seed",
    )

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._PARAM_NAMES}

    def set_params(self, **params) -> "TanhMLPClassifier":
        for name, value in params.items():
            if name not in self._PARAM_NAMES:
                raise ValueError(
                    f"invalid parameter {name!r} for TanhMLPClassifier"
                )
            setattr(self, name, value)
        return self

    def _config(self, input_dim: int, train_size: int) -> TrainConfig:
        return TrainConfig(
            arch=default_arch(input_dim, self.hidden_width, self.hidden_layers),
            hp=HyperParams(sigma_w=self.sigma_w, sigma_b=self.sigma_b),
            loss=self.loss,
            learning_rate=self.learning_rate,
            batch_size=min(self.batch_size, train_size),
            epochs=self.epochs,
            train_size=train_size,
            seed=self.seed,
        )

    def fit(self, X, y, validation: Dataset | None = None) -> "TanhMLPClassifier":
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        y = np.asarray(y, dtype=np.int64)
        if len(X) != len(y):
            raise ValueError(f"X has {len(X)} rows but y has {len(y)} labels")
        config = self._config(X.shape[1], len(X))
        val = validation if validation is not None else Dataset(X, y, "fit")
        params, accuracies, wall_times = _sgd_run(
            config, X, y, val.inputs, val.labels
        )
        self.config_ = config
        self.params_ = params
        self.validation_curve_ = AccuracyCurve(
            accuracies=tuple(accuracies), config=config, wall_times=tuple(wall_times)
        )
        return self

    def _check_fitted(self):
        if not hasattr(self, "params_"):
            raise RuntimeError("this TanhMLPClassifier instance is not fitted yet")

    def predict(self, X) -> np.ndarray:
        self._check_fitted()
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return np.argmax(_logits(self.params_, self.config_.arch.activation, X), axis=1)

    def score(self, X, y) -> float:
        y = np.asarray(y, dtype=np.int64)
        return float((self.predict(X) == y).mean())


# ---------------------------------------------------------------------------
# comparative experiments


def phase_comparison(
    base: TrainConfig, phases: dict[str, HyperParams], data
) -> dict[str, AccuracyCurve]:
    """One training run per phase, identical data order via shared seed."""
    if not phases:
        raise ValueError("phases must be non-empty")
    train_ds, val_ds = data
    return {
        name: train(replace(base, hp=hp), train_ds, val_ds)
        for name, hp in phases.items()
    }


def _halved(base: TrainConfig, variant: str) -> TrainConfig:
    if variant == "half-data":
        return replace(base, train_size=base.train_size // 2)
    if variant == "half-width":
        widths = base.arch.layer_widths
        hidden = tuple(max(1, w // 2) for w in widths[1:-1])
        arch = NetworkArchitecture(
            layer_widths=(widths[0],) + hidden + (widths[-1],),
            activation=base.arch.activation,
        )
        return replace(base, arch=arch)
    if variant == "half-batch":
        return replace(base, batch_size=max(1, base.batch_size // 2))
    raise ValueError(
        f"unknown variant {variant!r}; expected half-data, half-width or half-batch"
    )


def resize_training_experiment(
    base: TrainConfig, variant: str, data
) -> dict[str, dict]:
    """Baseline vs halved-variant accuracy per initialization phase.

    For each of the ordered/critical/chaotic phases, trains the
    baseline config and the halved variant (same seed and data order)
    and reports the final-epoch degradation.  Half-data uses the
    leading half of the training examples, keeping the natural order.
    """
    train_ds, val_ds = data
    if variant == "half-data" and base.train_size < 2 * base.batch_size:
        raise ValueError("train_size must be at least twice batch_size to halve")
    out = {}
    for name, hp in TRAINING_PHASES.items():
        phase_base = replace(base, hp=hp)
        baseline = train(phase_base, train_ds, val_ds)
        varied = train(_halved(phase_base, variant), train_ds, val_ds)
        out[name] = {
            "baseline": baseline,
            "variant": varied,
            "degradation": baseline.final - varied.final,
        }
    return out

"""T-learner baselines: one outcome classifier per treatment group.

Both variants predict P(y=1 | x) separately for treated and control
rows and difference the two probabilities to estimate the individual
treatment effect. T-LR is a logistic regression trained by full-batch
gradient descent; T-MLPC is a small relu network with a sigmoid head,
shaped like the autoencoder's encoder for a fair comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset, require_overlap
from .exceptions import ConfigurationError
from .nn import AdamState, Network, NetworkSpec, adam_update

T_LEARNER_KINDS = ("t_lr", "t_mlpc")


def sigmoid(v: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    v = np.asarray(v, dtype=np.float64)
    out = np.empty_like(v)
    pos = v >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-v[pos]))
    ev = np.exp(v[~pos])
    out[~pos] = ev / (1.0 + ev)
    return out


def _binary_cross_entropy(p: np.ndarray, y: np.ndarray) -> float:
    p = np.clip(p, 1e-12, 1.0 - 1e-12)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


@dataclass(frozen=True)
class LogisticConfig:
    epochs: int = 500
    learning_rate: float = 0.1
    l2: float = 1e-4
    seed: int = 0


@dataclass(frozen=True)
class MlpConfig:
    epochs: int = 200
    batch_size: int = 64
    learning_rate: float = 1e-3
    seed: int = 0


class LogisticModel:
    """Logistic regression with intercept and a small L2 penalty."""

    def __init__(self, net: Network, epoch_losses: list[float]):
        self.net = net
        self.epoch_losses = epoch_losses

    @property
    def weights(self) -> np.ndarray:
        return self.net.layers[0].weights[0]

    @property
    def intercept(self) -> float:
        return float(self.net.layers[0].bias[0])

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        logits = self.net.forward(features, train=False).output[:, 0]
        return sigmoid(logits)


class MlpClassifier:
    """Two hidden relu layers (batch-normed) with a sigmoid output."""

    def __init__(self, net: Network, epoch_losses: list[float]):
        self.net = net
        self.epoch_losses = epoch_losses

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        logits = self.net.forward(features, train=False).output[:, 0]
        return sigmoid(logits)


def _fit_logistic(
    features: np.ndarray, y: np.ndarray, config: LogisticConfig, seed
) -> LogisticModel:
    d = features.shape[1]
    spec = NetworkSpec(layer_sizes=(d, 1), activations=("identity",), batch_norm=(False,))
    net = Network(spec, np.random.default_rng(seed))
    layer = net.layers[0]
    n = len(y)
    losses: list[float] = []
    for _ in range(config.epochs):
        fp = net.forward(features, train=True)
        p = sigmoid(fp.output[:, 0])
        losses.append(_binary_cross_entropy(p, y))
        grads, _ = net.backward(fp, ((p - y) / n)[:, None])
        grads[0] += config.l2 * layer.weights  # penalize weights, not the intercept
        layer.weights -= config.learning_rate * grads[0]
        layer.bias -= config.learning_rate * grads[1]
    return LogisticModel(net, losses)


def _fit_mlp(
    features: np.ndarray, y: np.ndarray, config: MlpConfig, seed: list[int]
) -> MlpClassifier:
    d = features.shape[1]
    hidden = (math.ceil(d / 2), math.ceil(d / 4))
    spec = NetworkSpec(
        layer_sizes=(d, *hidden, 1),
        activations=("relu", "relu", "identity"),
        batch_norm=(True, True, False),
    )
    net = Network(spec, np.random.default_rng(seed))
    params = net.parameters()
    state = AdamState.for_params(params, lr=config.learning_rate)
    shuffle_rng = np.random.default_rng(list(seed) + [1])
    n = len(y)
    losses: list[float] = []
    for _ in range(config.epochs):
        perm = shuffle_rng.permutation(n)
        total = 0.0
        seen = 0
        for start in range(0, n, config.batch_size):
            idx = perm[start : start + config.batch_size]
            if len(idx) < 2 and n > 1:
                continue  # batch norm needs at least two samples
            fp = net.forward(features[idx], train=True)
            p = sigmoid(fp.output[:, 0])
            grads, _ = net.backward(fp, ((p - y[idx]) / len(idx))[:, None])
            adam_update(params, grads, state)
            total += _binary_cross_entropy(p, y[idx]) * len(idx)
            seen += len(idx)
        losses.append(total / seen)
    return MlpClassifier(net, losses)


@dataclass
class TLearner:
    """Per-group outcome models fit on disjoint treated/control rows."""

    kind: str
    model_treated: LogisticModel | MlpClassifier
    model_control: LogisticModel | MlpClassifier
    config: LogisticConfig | MlpConfig


def train_t_learner(
    kind: str, dataset: Dataset, config: LogisticConfig | MlpConfig | None = None
) -> TLearner:
    """Fit the treated-group and control-group classifiers.

    Raises an evaluation error if either group is empty.
    """
    if kind not in T_LEARNER_KINDS:
        raise ConfigurationError(f"unknown T-learner kind {kind!r}")
    require_overlap(dataset)
    treated = dataset.treatment == 1
    x1, y1 = dataset.features[treated], dataset.y_obs[treated].astype(np.float64)
    x0, y0 = dataset.features[~treated], dataset.y_obs[~treated].astype(np.float64)
    if kind == "t_lr":
        cfg = config if config is not None else LogisticConfig()
        m1 = _fit_logistic(x1, y1, cfg, [int(cfg.seed), 0])
        m0 = _fit_logistic(x0, y0, cfg, [int(cfg.seed), 1])
    else:
        cfg = config if config is not None else MlpConfig()
        m1 = _fit_mlp(x1, y1, cfg, [int(cfg.seed), 0])
        m0 = _fit_mlp(x0, y0, cfg, [int(cfg.seed), 1])
    return TLearner(kind=kind, model_treated=m1, model_control=m0, config=cfg)


def predict_ite(learner: TLearner, x: np.ndarray) -> np.ndarray | float:
    """Estimated effect p1(x) - p0(x); accepts a vector or a matrix."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    features = x[None, :] if single else x
    ite = learner.model_treated.predict_proba(features) - learner.model_control.predict_proba(features)
    return float(ite[0]) if single else ite


def predict_counterfactual(learner: TLearner, x: np.ndarray, t: int) -> int:
    """Unobserved outcome estimate: the other group's probability at 0.5."""
    t = int(t)
    if t not in (0, 1):
        raise ConfigurationError("t must be binary")
    x = np.asarray(x, dtype=np.float64)[None, :]
    other = learner.model_control if t == 1 else learner.model_treated
    return int(other.predict_proba(x)[0] >= 0.5)

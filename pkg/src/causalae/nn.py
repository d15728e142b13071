"""Dense-network numerics: layers, batch norm, MSE, backprop, Adam.

Small fully-connected networks on float64 numpy arrays, with no ML
framework behind them. Every forward pass keeps the intermediates needed
by the matching backward pass, so analytic gradients can be checked
against ``finite_difference_gradient`` to tight tolerances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError

ACTIVATIONS = ("relu", "softmax", "identity")

BN_EPSILON = 1e-5
BN_MOMENTUM = 0.9


def softmax(v: np.ndarray) -> np.ndarray:
    """Softmax over the last axis, stabilized by max subtraction."""
    v = np.asarray(v, dtype=np.float64)
    shifted = v - np.max(v, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=-1, keepdims=True)


def relu(v: np.ndarray) -> np.ndarray:
    return np.maximum(v, 0.0)


def mse_loss(x_hat: np.ndarray, x: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean over the batch of the squared L2 reconstruction error.

    Returns ``(loss, gradient wrt x_hat)`` where the gradient is
    ``2 (x_hat - x) / batch_size``.
    """
    x_hat = np.asarray(x_hat, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if x_hat.shape != x.shape:
        raise ConfigurationError(
            f"mse_loss shape mismatch: {x_hat.shape} vs {x.shape}"
        )
    n = x_hat.shape[0] if x_hat.ndim > 1 else 1
    diff = x_hat - x
    loss = float(np.sum(diff * diff) / n)
    return loss, 2.0 * diff / n


@dataclass(frozen=True)
class NetworkSpec:
    """Shape of a dense network.

    ``layer_sizes[0]`` is the input width; each later entry defines one
    layer, with a matching activation (one of ``ACTIVATIONS``) and a
    batch-norm switch. Softmax is only allowed on the final layer.
    """

    layer_sizes: tuple[int, ...]
    activations: tuple[str, ...]
    batch_norm: tuple[bool, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "layer_sizes", tuple(int(s) for s in self.layer_sizes))
        object.__setattr__(self, "activations", tuple(self.activations))
        object.__setattr__(self, "batch_norm", tuple(bool(b) for b in self.batch_norm))
        if len(self.layer_sizes) < 2:
            raise ConfigurationError("a network needs at least one layer")
        if any(s < 1 for s in self.layer_sizes):
            raise ConfigurationError(f"layer sizes must be positive: {self.layer_sizes}")
        n = self.n_layers
        if len(self.activations) != n or len(self.batch_norm) != n:
            raise ConfigurationError(
                "activations and batch_norm must have one entry per layer"
            )
        for act in self.activations:
            if act not in ACTIVATIONS:
                raise ConfigurationError(f"unknown activation {act!r}")
        if "softmax" in self.activations[:-1]:
            raise ConfigurationError("softmax is only allowed as the final activation")

    @property
    def n_layers(self) -> int:
        return len(self.layer_sizes) - 1

    @property
    def input_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_dim(self) -> int:
        return self.layer_sizes[-1]


class DenseLayer:
    """Affine layer ``u = x W^T + b`` with weights of shape (out, in).

    Weights start symmetric uniform with limit 1/sqrt(fan_in); biases zero.
    """

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator):
        limit = 1.0 / np.sqrt(in_dim)
        self.weights = rng.uniform(-limit, limit, size=(out_dim, in_dim))
        self.bias = np.zeros(out_dim, dtype=np.float64)


class BatchNorm:
    """Per-feature batch normalization state (pre-activation placement)."""

    def __init__(self, dim: int, momentum: float = BN_MOMENTUM, epsilon: float = BN_EPSILON):
        self.gamma = np.ones(dim, dtype=np.float64)
        self.beta = np.zeros(dim, dtype=np.float64)
        self.running_mean = np.zeros(dim, dtype=np.float64)
        self.running_var = np.ones(dim, dtype=np.float64)
        self.momentum = momentum
        self.epsilon = epsilon


@dataclass
class LayerCache:
    """Intermediates of one layer's forward pass, kept for backward."""

    x: np.ndarray                      # layer input
    pre_norm: np.ndarray               # x W^T + b
    normalized: np.ndarray | None      # (u - mean) * inv_std, None without BN
    inv_std: np.ndarray | None         # 1/sqrt(var + eps), None without BN
    pre_act: np.ndarray                # value fed to the activation
    out: np.ndarray


@dataclass
class ForwardPass:
    """All per-layer activations of one forward call."""

    caches: list[LayerCache]
    train: bool

    @property
    def output(self) -> np.ndarray:
        return self.caches[-1].out


class Network:
    """A dense network instantiated from a :class:`NetworkSpec`.

    ``parameters()`` returns the live arrays in a stable order
    (weights, bias, then gamma/beta per batch-normed layer); gradients
    from :meth:`backward` follow the same order.
    """

    def __init__(self, spec: NetworkSpec, rng: np.random.Generator | int):
        rng = np.random.default_rng(rng)
        self.spec = spec
        self.layers: list[DenseLayer] = []
        self.norms: list[BatchNorm | None] = []
        sizes = spec.layer_sizes
        for i in range(spec.n_layers):
            self.layers.append(DenseLayer(sizes[i], sizes[i + 1], rng))
            self.norms.append(BatchNorm(sizes[i + 1]) if spec.batch_norm[i] else None)

    def parameters(self) -> list[np.ndarray]:
        params: list[np.ndarray] = []
        for lin, bn in zip(self.layers, self.norms):
            params.append(lin.weights)
            params.append(lin.bias)
            if bn is not None:
                params.append(bn.gamma)
                params.append(bn.beta)
        return params

    def forward(self, batch: np.ndarray, train: bool) -> ForwardPass:
        """Run the network, returning every intermediate activation.

        In train mode batch norm uses batch statistics and updates the
        running ones; in infer mode it reads the running statistics.
        """
        x = np.asarray(batch, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.spec.input_dim:
            raise ConfigurationError(
                f"expected batch of shape (n, {self.spec.input_dim}), got {x.shape}"
            )
        caches: list[LayerCache] = []
        for i, (lin, bn) in enumerate(zip(self.layers, self.norms)):
            u = x @ lin.weights.T + lin.bias
            if bn is not None:
                if train:
                    mean = u.mean(axis=0)
                    var = u.var(axis=0)
                    inv_std = 1.0 / np.sqrt(var + bn.epsilon)
                    normalized = (u - mean) * inv_std
                    m = bn.momentum
                    bn.running_mean = m * bn.running_mean + (1.0 - m) * mean
                    bn.running_var = m * bn.running_var + (1.0 - m) * var
                else:
                    inv_std = 1.0 / np.sqrt(bn.running_var + bn.epsilon)
                    normalized = (u - bn.running_mean) * inv_std
                pre_act = bn.gamma * normalized + bn.beta
            else:
                normalized = None
                inv_std = None
                pre_act = u
            act = self.spec.activations[i]
            if act == "relu":
                out = relu(pre_act)
            elif act == "softmax":
                out = softmax(pre_act)
            else:
                out = pre_act
            caches.append(LayerCache(x, u, normalized, inv_std, pre_act, out))
            x = out
        return ForwardPass(caches, train)

    def backward(
        self, fp: ForwardPass, grad_output: np.ndarray
    ) -> tuple[list[np.ndarray], np.ndarray]:
        """Backpropagate ``grad_output`` (dL/d output) through ``fp``.

        Returns ``(parameter gradients in parameters() order, dL/d input)``.
        """
        if not fp.train:
            raise ConfigurationError("backward requires a train-mode forward pass")
        g = np.asarray(grad_output, dtype=np.float64)
        if g.shape != fp.output.shape:
            raise ConfigurationError(
                f"grad shape {g.shape} does not match output {fp.output.shape}"
            )
        grads_per_layer: list[list[np.ndarray]] = []
        for i in range(self.spec.n_layers - 1, -1, -1):
            cache = fp.caches[i]
            lin = self.layers[i]
            bn = self.norms[i]
            act = self.spec.activations[i]
            if act == "relu":
                g = g * (cache.pre_act > 0)
            elif act == "softmax":
                s = cache.out
                g = s * (g - np.sum(g * s, axis=-1, keepdims=True))
            layer_grads: list[np.ndarray] = []
            if bn is not None:
                dgamma = np.sum(g * cache.normalized, axis=0)
                dbeta = np.sum(g, axis=0)
                gxn = g * bn.gamma
                n = g.shape[0]
                g = (cache.inv_std / n) * (
                    n * gxn
                    - np.sum(gxn, axis=0)
                    - cache.normalized * np.sum(gxn * cache.normalized, axis=0)
                )
                layer_grads = [dgamma, dbeta]
            dw = g.T @ cache.x
            db = np.sum(g, axis=0)
            g = g @ lin.weights
            grads_per_layer.append([dw, db] + layer_grads)
        grads: list[np.ndarray] = []
        for layer_grads in reversed(grads_per_layer):
            grads.extend(layer_grads)
        return grads, g


@dataclass
class AdamState:
    """Adam moment estimates for a fixed list of parameter arrays."""

    first_moment: list[np.ndarray]
    second_moment: list[np.ndarray]
    step_count: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_params(
        cls,
        params: list[np.ndarray],
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epsilon: float = 1e-8,
    ) -> "AdamState":
        if not (0.0 <= beta1 < 1.0 and 0.0 <= beta2 < 1.0):
            raise ConfigurationError("Adam betas must lie in [0, 1)")
        return cls(
            first_moment=[np.zeros_like(p) for p in params],
            second_moment=[np.zeros_like(p) for p in params],
            lr=lr,
            beta1=beta1,
            beta2=beta2,
            epsilon=epsilon,
        )


def adam_update(
    params: list[np.ndarray], grads: list[np.ndarray], state: AdamState
) -> tuple[list[np.ndarray], AdamState]:
    """One bias-corrected Adam step, applied to ``params`` in place."""
    if len(params) != len(grads) or len(params) != len(state.first_moment):
        raise ConfigurationError("params, grads and Adam state lengths differ")
    state.step_count += 1
    t = state.step_count
    bias1 = 1.0 - state.beta1 ** t
    bias2 = 1.0 - state.beta2 ** t
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.lr * (m / bias1) / (np.sqrt(v / bias2) + state.epsilon)
    return params, state


def finite_difference_gradient(loss_fn, params: list[np.ndarray], eps: float = 1e-5) -> list[np.ndarray]:
    """Central-difference gradient of ``loss_fn()`` wrt each scalar in ``params``.

    Probes each entry in place (restoring it afterwards), so ``loss_fn``
    must read the same live arrays.
    """
    if eps <= 0:
        raise ConfigurationError("eps must be positive")
    grads = []
    for arr in params:
        g = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            orig = arr[idx]
            arr[idx] = orig + eps
            f_plus = loss_fn()
            arr[idx] = orig - eps
            f_minus = loss_fn()
            arr[idx] = orig
            g[idx] = (f_plus - f_minus) / (2.0 * eps)
        grads.append(g)
    return grads

"""The causal autoencoder: encoder -> softmax latent -> gate -> decoder.

The encoder compresses covariates into a softmax latent whose units are
assigned to the four causal populations (plus optional free info
nodes). During training, the gates built from each sample's observed
(treatment, outcome) zero out the two population blocks that
observation rules out, and the decoder must reconstruct the covariates
from what survives; the gates are constants and receive no gradient.

Prediction never uses the gates: the encoder alone yields the
population distribution, from which population membership, the
counterfactual outcome, and the treatment-effect estimate follow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .exceptions import ConfigurationError
from .nn import AdamState, Network, NetworkSpec, adam_update, mse_loss
from .populations import (
    N_POPULATIONS,
    POPULATION_ORDER,
    CausalPopulation,
    LatentLayout,
    admissible_populations,
    build_mask_matrix,
)


@dataclass(frozen=True)
class CaeConfig:
    """Latent structure plus training hyperparameters.

    ``encoder_hidden_sizes=None`` derives the widths from the feature
    dimension at init time: ceil(d/2) then ceil(d/4), with the decoder
    mirroring them in reverse.
    """

    nodes_per_population: int = 1
    info_nodes: int = 0
    encoder_hidden_sizes: tuple[int, ...] | None = None
    batch_norm: bool = False
    epochs: int = 200
    batch_size: int = 64
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_epsilon: float = 1e-8
    seed: int = 0

    def __post_init__(self) -> None:
        if self.nodes_per_population < 1:
            raise ConfigurationError("nodes_per_population must be >= 1")
        if self.info_nodes < 0:
            raise ConfigurationError("info_nodes must be >= 0")
        if self.epochs < 1:
            raise ConfigurationError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ConfigurationError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ConfigurationError("learning_rate must be positive")
        if self.encoder_hidden_sizes is not None:
            sizes = tuple(int(s) for s in self.encoder_hidden_sizes)
            if any(s < 1 for s in sizes):
                raise ConfigurationError("encoder_hidden_sizes must be positive")
            object.__setattr__(self, "encoder_hidden_sizes", sizes)


@dataclass
class TrainReport:
    """Per-epoch reconstruction losses of one training run."""

    epoch_losses: list[float]
    epochs: int
    seed: int

    @property
    def final_loss(self) -> float:
        return self.epoch_losses[-1]

    def to_dict(self) -> dict:
        return {
            "epoch_losses": self.epoch_losses,
            "final_loss": self.final_loss,
            "epochs": self.epochs,
            "seed": self.seed,
        }


class CausalAutoencoder:
    """Encoder/decoder pair with a population-structured softmax latent."""

    def __init__(
        self,
        encoder: Network,
        decoder: Network,
        layout: LatentLayout,
        config: CaeConfig,
    ):
        if encoder.spec.output_dim != layout.latent_size:
            raise ConfigurationError("encoder output does not match the latent size")
        if decoder.spec.input_dim != layout.latent_size:
            raise ConfigurationError("decoder input does not match the latent size")
        self.encoder = encoder
        self.decoder = decoder
        self.layout = layout
        self.config = config

    def parameters(self) -> list[np.ndarray]:
        return self.encoder.parameters() + self.decoder.parameters()


def hidden_sizes_for(d: int) -> tuple[int, int]:
    """Default halving widths between the features and the latent layer."""
    return (math.ceil(d / 2), math.ceil(d / 4))


def init_model(config: CaeConfig, d: int, seed: int | None = None) -> CausalAutoencoder:
    """Build a freshly initialized model for ``d``-dimensional features.

    Identical (config, d, seed) always produce identical parameters.
    """
    if d < 1:
        raise ConfigurationError("feature dimension must be >= 1")
    layout = LatentLayout(
        nodes_per_population=config.nodes_per_population,
        info_nodes=config.info_nodes,
        feature_dim=d,
    )
    hidden = config.encoder_hidden_sizes
    if hidden is None:
        hidden = hidden_sizes_for(d)
    p = layout.latent_size
    n_hidden = len(hidden)
    # batch norm is off by default: its batch coupling lets the decoder work
    # around the gates, which scrambles the node-population alignment
    bn = config.batch_norm
    encoder_spec = NetworkSpec(
        layer_sizes=(d, *hidden, p),
        activations=("relu",) * n_hidden + ("softmax",),
        batch_norm=(bn,) * n_hidden + (False,),
    )
    decoder_spec = NetworkSpec(
        layer_sizes=(p, *reversed(hidden), d),
        activations=("relu",) * n_hidden + ("identity",),
        batch_norm=(bn,) * n_hidden + (False,),
    )
    rng = np.random.default_rng(config.seed if seed is None else seed)
    encoder = Network(encoder_spec, rng)
    decoder = Network(decoder_spec, rng)
    return CausalAutoencoder(encoder, decoder, layout, config)


def _check_dataset(model: CausalAutoencoder, dataset: Dataset) -> None:
    if dataset.n == 0:
        raise ConfigurationError("cannot train on an empty dataset")
    if dataset.feature_dim != model.layout.feature_dim:
        raise ConfigurationError(
            f"dataset has {dataset.feature_dim} features, model expects "
            f"{model.layout.feature_dim}"
        )


def masked_reconstruction_loss(model: CausalAutoencoder, dataset: Dataset) -> float:
    """Training-objective value on a dataset, without updating anything.

    Uses batch statistics over the whole dataset, matching a single
    full-batch training step.
    """
    _check_dataset(model, dataset)
    gates = build_mask_matrix(dataset.treatment, dataset.y_obs, model.layout)
    z = model.encoder.forward(dataset.features, train=True).output
    x_hat = model.decoder.forward(z * gates, train=True).output
    loss, _ = mse_loss(x_hat, dataset.features)
    return loss


def train(
    model: CausalAutoencoder,
    dataset: Dataset,
    config: CaeConfig | None = None,
) -> tuple[CausalAutoencoder, TrainReport]:
    """Fit the model in place by minibatch Adam on the gated reconstruction.

    The per-sample gates are fixed by (treatment, observed outcome) and
    act as constants in backpropagation. Returns the model together
    with the per-epoch loss report.
    """
    if config is None:
        config = model.config
    _check_dataset(model, dataset)
    n = dataset.n
    gates = build_mask_matrix(dataset.treatment, dataset.y_obs, model.layout)
    params = model.parameters()
    state = AdamState.for_params(
        params,
        lr=config.learning_rate,
        beta1=config.beta1,
        beta2=config.beta2,
        epsilon=config.adam_epsilon,
    )
    shuffle_rng = np.random.default_rng([config.seed, 1])
    epoch_losses: list[float] = []
    for _ in range(config.epochs):
        perm = shuffle_rng.permutation(n)
        total = 0.0
        seen = 0
        for start in range(0, n, config.batch_size):
            batch_idx = perm[start : start + config.batch_size]
            if len(batch_idx) < 2 and n > 1:
                continue  # batch norm needs at least two samples
            x = dataset.features[batch_idx]
            g = gates[batch_idx]
            enc_fp = model.encoder.forward(x, train=True)
            gated = enc_fp.output * g
            dec_fp = model.decoder.forward(gated, train=True)
            loss, grad_xhat = mse_loss(dec_fp.output, x)
            dec_grads, grad_gated = model.decoder.backward(dec_fp, grad_xhat)
            enc_grads, _ = model.encoder.backward(enc_fp, grad_gated * g)
            adam_update(params, enc_grads + dec_grads, state)
            total += loss * len(batch_idx)
            seen += len(batch_idx)
        epoch_losses.append(total / seen)
    return model, TrainReport(epoch_losses=epoch_losses, epochs=config.epochs, seed=config.seed)


def population_mass(z: np.ndarray, layout: LatentLayout) -> np.ndarray:
    """Reduce latent rows to population probabilities (columns R, D, S, A).

    Each population's r node values are summed and the four sums are
    renormalized by their total, discarding any info-node mass.
    """
    z = np.asarray(z, dtype=np.float64)
    single = z.ndim == 1
    if single:
        z = z[None, :]
    if z.shape[1] != layout.latent_size:
        raise ConfigurationError(
            f"latent width {z.shape[1]} does not match layout size {layout.latent_size}"
        )
    r = layout.nodes_per_population
    block_sums = z[:, : N_POPULATIONS * r].reshape(len(z), N_POPULATIONS, r).sum(axis=2)
    dist = block_sums / block_sums.sum(axis=1, keepdims=True)
    return dist[0] if single else dist


def _encode_batch(model: CausalAutoencoder, features: np.ndarray) -> np.ndarray:
    z = model.encoder.forward(features, train=False).output
    return population_mass(z, model.layout)


def encode_population_distributions(
    model: CausalAutoencoder, features: np.ndarray
) -> np.ndarray:
    """Population probabilities (columns R, D, S, A) for each row.

    The ungated encoder output is summed per population block and
    renormalized by the total population-node mass, so the rows sum to
    one even when free info nodes hold part of the softmax mass.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise ConfigurationError("expected a 2-D feature matrix")
    return _encode_batch(model, features)


def encode_population_distribution(
    model: CausalAutoencoder, x: np.ndarray
) -> np.ndarray:
    """Population probabilities (R, D, S, A) for a single feature vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ConfigurationError("expected a single feature vector")
    return _encode_batch(model, x[None, :])[0]


def predict_populations(model: CausalAutoencoder, features: np.ndarray) -> np.ndarray:
    """Most probable population code per row; ties go to the earlier block."""
    dist = encode_population_distributions(model, features)
    return np.argmax(dist, axis=1)


def predict_population(model: CausalAutoencoder, x: np.ndarray) -> CausalPopulation:
    dist = encode_population_distribution(model, x)
    return POPULATION_ORDER[int(np.argmax(dist))]


def predict_counterfactual(
    model: CausalAutoencoder, x: np.ndarray, t: int, y_obs: int
) -> int:
    """Estimated unobserved outcome y_{1-t} for a sample seen as (t, y_obs).

    The population argmax is restricted to the two populations the
    observation admits; the counterfactual is read off the winner's
    potential-outcome pair.
    """
    t = int(t)
    y_obs = int(y_obs)
    if t not in (0, 1) or y_obs not in (0, 1):
        raise ConfigurationError("t and y_obs must be binary")
    dist = encode_population_distribution(model, x)
    first, second = admissible_populations(t, y_obs)
    winner = first if dist[first.index] >= dist[second.index] else second
    return winner.potential_outcome(1 - t)


def estimate_cates(model: CausalAutoencoder, features: np.ndarray) -> np.ndarray:
    """Treatment-effect estimate per row: responder minus anti-responder mass."""
    dist = encode_population_distributions(model, features)
    return dist[:, 0] - dist[:, 3]


def estimate_cate(model: CausalAutoencoder, x: np.ndarray) -> float:
    dist = encode_population_distribution(model, x)
    return float(dist[0] - dist[3])

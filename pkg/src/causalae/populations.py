"""Causal populations and the latent gates derived from (treatment, outcome).

The four populations are defined by their potential-outcome pair
(y0, y1): responders (0,1), doomed (0,0), survivors (1,1) and
anti-responders (1,0). Observing one outcome under one treatment rules
out exactly two of them, which is what the per-sample mask encodes.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .exceptions import ConfigurationError


class CausalPopulation(Enum):
    """One of the four populations, valued by its (y0, y1) pair."""

    RESPONDER = (0, 1)
    DOOMED = (0, 0)
    SURVIVOR = (1, 1)
    ANTI_RESPONDER = (1, 0)

    @property
    def y0(self) -> int:
        return self.value[0]

    @property
    def y1(self) -> int:
        return self.value[1]

    @property
    def index(self) -> int:
        """Position in the fixed block order R, D, S, A."""
        return POPULATION_ORDER.index(self)

    def potential_outcome(self, t: int) -> int:
        return self.y1 if t == 1 else self.y0

    @classmethod
    def from_outcomes(cls, y0: int, y1: int) -> "CausalPopulation":
        return cls((int(y0), int(y1)))


POPULATION_ORDER: tuple[CausalPopulation, ...] = (
    CausalPopulation.RESPONDER,
    CausalPopulation.DOOMED,
    CausalPopulation.SURVIVOR,
    CausalPopulation.ANTI_RESPONDER,
)

N_POPULATIONS = 4


@dataclass(frozen=True)
class LatentLayout:
    """Latent-layer layout: r nodes per population plus q free info nodes.

    Info nodes carry covariate information without causal gating; their
    count must stay below the feature dimension so the population nodes
    keep part of the signal.
    """

    nodes_per_population: int
    info_nodes: int = 0
    feature_dim: int = 1

    def __post_init__(self) -> None:
        if self.nodes_per_population < 1:
            raise ConfigurationError("nodes_per_population must be >= 1")
        if self.info_nodes < 0:
            raise ConfigurationError("info_nodes must be >= 0")
        if self.feature_dim < 1:
            raise ConfigurationError("feature_dim must be >= 1")
        if self.info_nodes >= self.feature_dim:
            raise ConfigurationError(
                f"info_nodes ({self.info_nodes}) must be smaller than the "
                f"feature dimension ({self.feature_dim})"
            )

    @property
    def latent_size(self) -> int:
        return N_POPULATIONS * self.nodes_per_population + self.info_nodes

    def population_slice(self, index: int) -> slice:
        r = self.nodes_per_population
        return slice(index * r, (index + 1) * r)


@dataclass(frozen=True)
class Mask:
    """Binary gates over the latent layer, ordered (R, D, S, A, info)."""

    gates: np.ndarray

    def __post_init__(self) -> None:
        gates = np.asarray(self.gates, dtype=np.float64)
        if not np.all((gates == 0.0) | (gates == 1.0)):
            raise ConfigurationError("mask gates must be binary")
        object.__setattr__(self, "gates", gates)


def admissible_populations(t: int, y_obs: int) -> tuple[CausalPopulation, CausalPopulation]:
    """The two populations compatible with observing ``y_obs`` under ``t``."""
    pair = tuple(p for p in POPULATION_ORDER if p.potential_outcome(t) == y_obs)
    return pair  # type: ignore[return-value]


def build_mask(t: int, y_obs: int, layout: LatentLayout) -> Mask:
    """Per-sample gate vector from the observed (treatment, outcome) pair.

    Population blocks get (1[t==y], 1-y, y, 1[t!=y]) repeated r times;
    info nodes are always open.
    """
    t = int(t)
    y = int(y_obs)
    r = layout.nodes_per_population
    block = np.array(
        [1.0 if t == y else 0.0, 1.0 - y, float(y), 1.0 if t != y else 0.0]
    )
    gates = np.concatenate([np.repeat(block, r), np.ones(layout.info_nodes)])
    return Mask(gates)


def build_mask_matrix(
    treatment: np.ndarray, y_obs: np.ndarray, layout: LatentLayout
) -> np.ndarray:
    """Stack of per-sample gates, one row per (t, y) pair."""
    t = np.asarray(treatment, dtype=np.float64)
    y = np.asarray(y_obs, dtype=np.float64)
    blocks = np.stack(
        [np.where(t == y, 1.0, 0.0), 1.0 - y, y, np.where(t != y, 1.0, 0.0)],
        axis=1,
    )
    gates = np.repeat(blocks, layout.nodes_per_population, axis=1)
    if layout.info_nodes:
        gates = np.hstack([gates, np.ones((len(t), layout.info_nodes))])
    return gates


def apply_mask(z: np.ndarray, mask: Mask) -> np.ndarray:
    """Gate a latent vector (or a batch of them) elementwise."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape[-1] != mask.gates.shape[0]:
        raise ConfigurationError(
            f"latent length {z.shape[-1]} does not match mask length "
            f"{mask.gates.shape[0]}"
        )
    return z * mask.gates

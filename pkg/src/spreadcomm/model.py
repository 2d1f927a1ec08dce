"""Circular latent space: link functions and log-likelihood/log-posterior."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .graphs import BINARY, COUNT, Graph

TWO_PI = 2.0 * np.pi

# Probabilities are clamped away from {0, 1} so a present edge between
# opposite angles keeps the log-likelihood finite and the chain ergodic.
PROB_EPS = 1e-12

BERNOULLI = "bernoulli"
POISSON = "poisson"

_MODE_FOR_LIKELIHOOD = {BERNOULLI: BINARY, POISSON: COUNT}


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    """Likelihood family, Poisson rate scale, and link sharpness exponent."""

    likelihood: str = BERNOULLI
    lam: float = 1.0
    sharpness_k: int = 1
    prior: str = "uniform"

    def __post_init__(self):
        if self.likelihood not in (BERNOULLI, POISSON):
            raise ModelError(f"unknown likelihood {self.likelihood!r}")
        if self.lam <= 0:
            raise ModelError("lambda must be positive")
        if int(self.sharpness_k) != self.sharpness_k or self.sharpness_k < 1:
            raise ModelError("sharpness_k must be an integer >= 1")
        if self.prior != "uniform":
            raise ModelError(f"unsupported prior {self.prior!r}")

    @property
    def graph_mode(self) -> str:
        return _MODE_FOR_LIKELIHOOD[self.likelihood]


@dataclass(frozen=True)
class LatentState:
    """Angles on [0, 2*pi) for an ordered, duplicate-free vertex subset."""

    vertices: np.ndarray
    angles: np.ndarray

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=np.int64)
        angles = np.mod(np.asarray(self.angles, dtype=np.float64), TWO_PI)
        if verts.ndim != 1 or angles.ndim != 1 or verts.size != angles.size:
            raise ModelError("vertices and angles must be aligned 1-D arrays")
        if len(set(verts.tolist())) != verts.size:
            raise ModelError("duplicate vertices in latent state")
        verts.setflags(write=False)
        angles.setflags(write=False)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "angles", angles)

    def __len__(self) -> int:
        return self.vertices.size

    def angle_of(self, vertex: int) -> float:
        pos = np.nonzero(self.vertices == vertex)[0]
        if pos.size == 0:
            raise ModelError(f"vertex {vertex} not covered by this state")
        return float(self.angles[pos[0]])

    def replaced(self, index: int, angle: float) -> "LatentState":
        angles = self.angles.copy()
        angles[index] = angle
        return LatentState(self.vertices, angles)


def circular_distance(a, b):
    """Shortest angular distance between two angles, in [0, pi]."""
    d = np.mod(np.abs(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)), TWO_PI)
    return np.minimum(d, TWO_PI - d)


def link_h(y):
    """Same-community probability for an angle difference: (cos(y)+1)/2."""
    return np.clip((np.cos(y) + 1.0) / 2.0, 0.0, 1.0)


def link_g(y, k: int):
    """Sharpened link h(y)**k; k=1 reduces to plain h."""
    if int(k) != k or k < 1:
        raise ModelError("sharpness exponent k must be an integer >= 1")
    return link_h(y) ** k


def _check_state(sub: Graph, state: LatentState, cfg: ModelConfig):
    if len(state) != sub.n or set(state.vertices.tolist()) != set(range(sub.n)):
        raise ModelError("state must cover exactly the vertices of the subgraph")
    if sub.mode != cfg.graph_mode:
        raise ModelError(
            f"graph mode {sub.mode!r} does not match likelihood {cfg.likelihood!r}"
        )


def _local_angles(sub: Graph, state: LatentState) -> np.ndarray:
    theta = np.empty(sub.n, dtype=np.float64)
    theta[state.vertices] = state.angles
    return theta


def pair_probabilities(theta: np.ndarray, k: int) -> np.ndarray:
    """Clamped matrix of link probabilities for all angle pairs."""
    diff = theta[:, None] - theta[None, :]
    return np.clip(link_h(diff) ** k, PROB_EPS, 1.0 - PROB_EPS)


def log_likelihood(sub: Graph, state: LatentState, cfg: ModelConfig) -> float:
    """Sum over unordered pairs of the pairwise edge log-density."""
    _check_state(sub, state, cfg)
    theta = _local_angles(sub, state)
    p = pair_probabilities(theta, cfg.sharpness_k)
    iu = np.triu_indices(sub.n, 1)
    a = sub.adjacency[iu].astype(np.float64)
    p = p[iu]
    if cfg.likelihood == BERNOULLI:
        terms = a * np.log(p) + (1.0 - a) * np.log(1.0 - p)
    else:
        rate = cfg.lam * p
        terms = a * np.log(rate) - rate - gammaln(a + 1.0)
    return float(terms.sum())


def log_posterior(sub: Graph, state: LatentState, cfg: ModelConfig) -> float:
    """Log-likelihood plus the uniform-prior constant -n*log(2*pi)."""
    return log_likelihood(sub, state, cfg) - len(state) * np.log(TWO_PI)

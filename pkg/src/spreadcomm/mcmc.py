"""Metropolis sampler over the angles of one spread set.

The sweep kernel is JIT-compiled with numba; all randomness inside it is
seeded per chain so runs are bit-reproducible and chains for different spread
sets can execute on a thread pool without affecting each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .graphs import Graph
from .model import (
    BERNOULLI,
    PROB_EPS,
    TWO_PI,
    LatentState,
    ModelConfig,
    link_g,
    log_likelihood,
)


class McmcError(ValueError):
    pass


@dataclass(frozen=True)
class McmcConfig:
    iterations: int = 3000
    burn_in: int = 1000
    thinning: int = 5
    proposal_step: float = 1.2
    jump_probability: float = 0.2
    seed: int | None = None

    def __post_init__(self):
        if self.iterations < 1:
            raise McmcError("iterations must be >= 1")
        if not 0 <= self.burn_in < self.iterations:
            raise McmcError("burn_in must satisfy 0 <= burn_in < iterations")
        if self.thinning < 1:
            raise McmcError("thinning must be >= 1")
        if self.proposal_step <= 0:
            raise McmcError("proposal_step must be positive")
        if not 0.0 <= self.jump_probability <= 1.0:
            raise McmcError("jump_probability must lie in [0, 1]")


@dataclass(frozen=True)
class ChainResult:
    """Retained post-burn-in, thinned samples plus acceptance diagnostics."""

    vertices: np.ndarray          # original vertex ids, aligned with sample columns
    samples: np.ndarray           # (n_samples, n_vertices)
    acceptance_ratio: float
    jump_acceptance_ratio: float

    def __post_init__(self):
        object.__setattr__(self, "vertices", np.asarray(self.vertices, dtype=np.int64))
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=np.float64))

    def column_of(self, vertex: int) -> int:
        pos = np.nonzero(self.vertices == vertex)[0]
        if pos.size == 0:
            raise McmcError(f"vertex {vertex} not covered by this chain")
        return int(pos[0])


def propose_local(state: LatentState, index: int, step: float,
                  rng: np.random.Generator) -> LatentState:
    """Perturb one angle by a uniform draw on [-step, step], wrapped to [0, 2*pi)."""
    if not 0 <= index < len(state):
        raise McmcError(f"vertex index {index} out of range")
    return state.replaced(index, state.angles[index] + rng.uniform(-step, step))


def jump_candidate_distribution(g: Graph, i: int) -> np.ndarray:
    """Jump target distribution: neighbours get (1 + 1/n)/(d_i + 1), others 1/(n*(d_i+1)).

    Includes j = i (a no-op if drawn), which is what makes the vector sum to 1.
    """
    if not 0 <= i < g.n:
        raise McmcError(f"vertex {i} not in graph")
    linked = (g.adjacency[i] > 0).astype(np.float64)
    d = linked.sum()
    return (linked + 1.0 / g.n) / (d + 1.0)


def jump_move(state: LatentState, g: Graph, cfg: ModelConfig,
              rng: np.random.Generator) -> tuple[LatentState, bool]:
    """One chain-jump: copy the angle of a likely same-community vertex.

    Draws i uniformly and j from the jump candidate distribution, proposes
    theta_i <- theta_j, and accepts with the likelihood ratio.  Returns the
    (possibly unchanged) state and whether the move was accepted.
    """
    i = int(rng.integers(len(state)))
    p = jump_candidate_distribution(g, i)
    j = int(rng.choice(g.n, p=p))
    u = rng.random()
    if j == i:
        return state, True
    proposed = state.replaced(i, state.angles[j])
    delta = log_likelihood(g, proposed, cfg) - log_likelihood(g, state, cfg)
    if math.log(u) < delta:
        return proposed, True
    return state, False


@njit(cache=True, nogil=True)
def _vertex_loglik(adj, theta, v, ang, poisson, lam, k):
    n = adj.shape[0]
    s = 0.0
    for j in range(n):
        if j == v:
            continue
        p = (math.cos(ang - theta[j]) + 1.0) / 2.0
        if k != 1:
            p = p ** k
        if p < PROB_EPS:
            p = PROB_EPS
        elif p > 1.0 - PROB_EPS:
            p = 1.0 - PROB_EPS
        a = adj[v, j]
        if poisson:
            rate = lam * p
            s += a * math.log(rate) - rate - math.lgamma(a + 1.0)
        else:
            s += a * math.log(p) + (1.0 - a) * math.log(1.0 - p)
    return s


@njit(cache=True, nogil=True)
def _chain_kernel(adj, poisson, lam, k, iterations, burn_in, thinning,
                  step, jump_prob, jump_cum, seed, theta0):
    np.random.seed(seed)
    n = adj.shape[0]
    theta = theta0.copy()
    n_samples = (iterations - burn_in + thinning - 1) // thinning
    samples = np.empty((n_samples, n))
    kept = 0
    acc_local = 0
    acc_jump = 0
    tot_jump = 0
    for t in range(iterations):
        order = np.random.permutation(n)
        for s in range(n):
            v = order[s]
            prop = (theta[v] + np.random.uniform(-step, step)) % TWO_PI
            delta = (_vertex_loglik(adj, theta, v, prop, poisson, lam, k)
                     - _vertex_loglik(adj, theta, v, theta[v], poisson, lam, k))
            u = np.random.random()
            if math.log(u) < delta:
                theta[v] = prop
                acc_local += 1
        if np.random.random() < jump_prob:
            tot_jump += 1
            i = np.random.randint(n)
            r = np.random.random()
            j = n - 1
            for c in range(n):
                if r < jump_cum[i, c]:
                    j = c
                    break
            u = np.random.random()
            if j == i:
                acc_jump += 1
            else:
                delta = (_vertex_loglik(adj, theta, i, theta[j], poisson, lam, k)
                         - _vertex_loglik(adj, theta, i, theta[i], poisson, lam, k))
                if math.log(u) < delta:
                    theta[i] = theta[j]
                    acc_jump += 1
        if t >= burn_in and (t - burn_in) % thinning == 0:
            samples[kept] = theta
            kept += 1
    return samples, acc_local, acc_jump, tot_jump


def run_chain(sub: Graph, cfg_model: ModelConfig, cfg_mcmc: McmcConfig,
              seed=None, init_angles=None) -> ChainResult:
    """Run one Metropolis chain on the angles of a (sub)graph.

    Each iteration performs one random-scan sweep of local proposals and,
    with the configured probability, one jump move.  ``seed`` may be an int
    or a numpy SeedSequence; it falls back to the config seed.
    """
    if sub.n < 1:
        raise McmcError("empty graph")
    if sub.mode != cfg_model.graph_mode:
        raise McmcError(
            f"graph mode {sub.mode!r} does not match likelihood {cfg_model.likelihood!r}")
    if seed is None:
        seed = cfg_mcmc.seed
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    rng = np.random.default_rng(ss)
    if init_angles is None:
        init = rng.uniform(0.0, TWO_PI, sub.n)
    else:
        init = np.mod(np.asarray(init_angles, dtype=np.float64), TWO_PI)
        if init.shape != (sub.n,):
            raise McmcError("init_angles must provide one angle per vertex")
    kernel_seed = int(ss.generate_state(1, np.uint32)[0])

    jump_cum = np.cumsum(
        np.stack([jump_candidate_distribution(sub, i) for i in range(sub.n)]), axis=1)
    samples, acc_local, acc_jump, tot_jump = _chain_kernel(
        sub.adjacency.astype(np.float64),
        cfg_model.likelihood != BERNOULLI,
        float(cfg_model.lam),
        int(cfg_model.sharpness_k),
        cfg_mcmc.iterations,
        cfg_mcmc.burn_in,
        cfg_mcmc.thinning,
        float(cfg_mcmc.proposal_step),
        float(cfg_mcmc.jump_probability),
        jump_cum,
        kernel_seed,
        init,
    )
    tot_local = cfg_mcmc.iterations * sub.n
    return ChainResult(
        vertices=np.asarray(sub.origin, dtype=np.int64),
        samples=samples,
        acceptance_ratio=acc_local / tot_local,
        jump_acceptance_ratio=(acc_jump / tot_jump) if tot_jump else 0.0,
    )


def chain_pair_probability(result: ChainResult, j: int, k: int, cfg: ModelConfig,
                           point_estimate: bool = False) -> float:
    """Average over retained samples of the link applied to the angle difference.

    ``point_estimate`` uses only the final retained sample instead of the
    posterior mean.
    """
    cj, ck = result.column_of(j), result.column_of(k)
    if cj == ck:
        return 1.0
    diffs = result.samples[:, cj] - result.samples[:, ck]
    if point_estimate:
        diffs = diffs[-1:]
    return float(np.mean(link_g(diffs, cfg.sharpness_k)))


def chain_pair_probability_matrix(result: ChainResult, cfg: ModelConfig,
                                  point_estimate: bool = False) -> np.ndarray:
    """All pairwise probabilities at once; diagonal is exactly 1."""
    samples = result.samples[-1:] if point_estimate else result.samples
    diffs = samples[:, :, None] - samples[:, None, :]
    mat = np.mean(link_g(diffs, cfg.sharpness_k), axis=0)
    np.fill_diagonal(mat, 1.0)
    return mat

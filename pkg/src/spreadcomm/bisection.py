"""Recursive binary splitting with the sharpened link g = h**k."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .community import Dendrogram, Partition
from .graphs import Graph, induced_subgraph
from .impulses import SpreadConfig, sample_spread_set
from .mcmc import ChainResult, McmcConfig, run_chain
from .model import TWO_PI, ModelConfig


class BisectError(ValueError):
    pass


class NoSeparationError(BisectError):
    pass


@dataclass(frozen=True)
class BisectConfig:
    sharpness_k: int = 4
    max_group_size: int = 8
    mcmc: McmcConfig = field(default_factory=McmcConfig)
    spread: SpreadConfig = field(default_factory=SpreadConfig)
    lam: float = 1.0

    def __post_init__(self):
        if self.max_group_size < 2:
            raise BisectError("max_group_size must be >= 2")
        if self.sharpness_k < 2:
            raise BisectError("sharpness_k must be >= 2 for the splitting link")


def aligned_mean_angles(chain: ChainResult) -> np.ndarray:
    """Circular mean per vertex after removing the rotation/reflection symmetry.

    Each retained sample is aligned to the first retained sample by the
    rotation (and optional reflection) that maximizes the summed cosine
    agreement, the circular analogue of a 1-D Procrustes fit.  Keying the
    alignment to the whole configuration instead of one reference vertex keeps
    it stable when individual angle differences sit near 0 or pi.
    """
    samples = chain.samples
    ref = samples[0]
    z_plus = np.exp(1j * (ref[None, :] - samples)).sum(axis=1)
    z_minus = np.exp(1j * (ref[None, :] + samples)).sum(axis=1)
    use_plus = np.abs(z_plus) >= np.abs(z_minus)
    sign = np.where(use_plus, 1.0, -1.0)
    shift = np.where(use_plus, np.angle(z_plus), np.angle(z_minus))
    aligned = np.mod(sign[:, None] * samples + shift[:, None], TWO_PI)
    mean_sin = np.sin(aligned).mean(axis=0)
    mean_cos = np.cos(aligned).mean(axis=0)
    return np.mod(np.arctan2(mean_sin, mean_cos), TWO_PI)


def split_two(sub: Graph, chain: ChainResult) -> tuple[np.ndarray, np.ndarray]:
    """Split a subgraph's vertices into the two arcs on either side of the
    two largest angular gaps of the aligned mean angles.

    Returns local vertex indices.  Ties on gap size are broken by the smallest
    vertex id leading the arc that the cut opens.
    """
    if sub.n < 2:
        raise BisectError("need at least 2 vertices to split")
    if chain.samples.shape[1] != sub.n:
        raise BisectError("chain does not cover the subgraph")
    angles = aligned_mean_angles(chain)
    order = np.argsort(angles, kind="stable")
    sorted_angles = angles[order]
    m = sub.n
    gaps = np.empty(m)
    for t in range(m - 1):
        gaps[t] = sorted_angles[t + 1] - sorted_angles[t]
    gaps[m - 1] = TWO_PI - (sorted_angles[-1] - sorted_angles[0])
    if m > 2 and np.max(gaps) > TWO_PI - 1e-9:
        raise NoSeparationError("no separation: all mean angles coincide")
    # rank cut positions by (gap desc, leading vertex id asc); a cut after
    # sorted position t opens an arc led by sorted position t+1
    leading_ids = np.array([order[(t + 1) % m] for t in range(m)])
    ranked = sorted(range(m), key=lambda t: (-gaps[t], leading_ids[t]))
    cut_a, cut_b = sorted(ranked[:2])
    arc1 = order[cut_a + 1 : cut_b + 1]
    arc2 = np.concatenate([order[cut_b + 1 :], order[: cut_a + 1]])
    if arc1.size == 0 or arc2.size == 0:
        raise NoSeparationError("degenerate split produced an empty side")
    return np.sort(arc1), np.sort(arc2)


@dataclass(frozen=True)
class BisectOutcome:
    dendrogram: Dendrogram
    partition: Partition       # the leaf groups of the recursion
    n_groups: int


def _largest_component(sub: Graph) -> np.ndarray:
    """Vertex indices of the largest connected component (ties: smallest seed id)."""
    seen = np.zeros(sub.n, dtype=bool)
    best: list[int] = []
    for start in range(sub.n):
        if seen[start]:
            continue
        stack = [start]
        seen[start] = True
        comp = []
        while stack:
            v = stack.pop()
            comp.append(v)
            for u in np.nonzero(sub.adjacency[v] > 0)[0]:
                if not seen[u]:
                    seen[u] = True
                    stack.append(int(u))
        if len(comp) > len(best):
            best = comp
    return np.asarray(sorted(best), dtype=np.int64)


def _attach_unvisited(sub: Graph, sigma: np.ndarray, side_a: set, side_b: set):
    """Assign vertices the spread never reached to the side they link to most."""
    for v in range(sub.n):
        if v in side_a or v in side_b:
            continue
        wa = sum(sub.adjacency[v, u] for u in side_a)
        wb = sum(sub.adjacency[v, u] for u in side_b)
        if wa > wb:
            side_a.add(v)
        elif wb > wa:
            side_b.add(v)
        else:
            (side_a if min(side_a) < min(side_b) else side_b).add(v)


def recursive_bisect(g: Graph, cfg: BisectConfig, seed=None) -> BisectOutcome:
    """Spread -> chain -> split cycle, recursing until groups are small enough.

    Groups at or below ``max_group_size``, edgeless groups, and groups whose
    chains show no angular separation become leaves.  The recursion tree is
    returned as a dendrogram whose split heights decrease with depth
    (normalized to [0, 1]); within-leaf merges sit at height 0.
    """
    if g.n < 1:
        raise BisectError("empty graph")
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    model_cfg = ModelConfig(
        likelihood="bernoulli" if g.mode == "binary" else "poisson",
        lam=cfg.lam, sharpness_k=cfg.sharpness_k)

    def split_group(vertices: np.ndarray):
        """Returns a nested tuple tree of (left, right) pairs with leaf arrays."""
        if vertices.size <= cfg.max_group_size:
            return vertices
        sub = induced_subgraph(g, vertices)
        if sub.n_edges == 0:
            return vertices
        comp = _largest_component(sub)
        if comp.size < sub.n:
            # spreads cannot cross components; peel off the largest one
            rest = np.setdiff1d(np.arange(sub.n), comp)
            return (split_group(vertices[comp]), split_group(vertices[rest]))
        child = ss.spawn(1)[0]
        rng = np.random.default_rng(child)
        spread_cfg = SpreadConfig(
            n_impulses=1,
            target_size=sub.n,
            max_steps=cfg.spread.max_steps if cfg.spread.max_steps is not None else 50 * sub.n,
        )
        sigma = sample_spread_set(sub, spread_cfg, rng)
        chain_sub = induced_subgraph(sub, sigma)
        chain = run_chain(chain_sub, model_cfg, cfg.mcmc, seed=child)
        try:
            arc1, arc2 = split_two(chain_sub, chain)
        except NoSeparationError:
            return vertices
        side_a = {int(sigma[i]) for i in arc1}
        side_b = {int(sigma[i]) for i in arc2}
        _attach_unvisited(sub, sigma, side_a, side_b)
        if not side_a or not side_b:
            return vertices
        left = vertices[sorted(side_a)]
        right = vertices[sorted(side_b)]
        return (split_group(left), split_group(right))

    tree = split_group(np.arange(g.n))
    return _assemble(g.n, tree)


def _tree_depths(tree, depth=0, out=None):
    if out is None:
        out = []
    if isinstance(tree, tuple):
        out.append(depth)
        _tree_depths(tree[0], depth + 1, out)
        _tree_depths(tree[1], depth + 1, out)
    return out


def _assemble(n: int, tree) -> BisectOutcome:
    """Turn the recursion tree into a dendrogram and the leaf-group partition."""
    depths = _tree_depths(tree)
    max_depth = max(depths) if depths else 0
    merges: list[tuple[int, int, float, int]] = []
    labels = np.full(n, -1, dtype=np.int64)
    group_counter = [0]
    next_cluster = [n]

    def chain_merge(a: int, b: int, h: float, size: int) -> int:
        merges.append((a, b, h, size))
        node = next_cluster[0]
        next_cluster[0] += 1
        return node

    def build(node, depth: int) -> tuple[int, int]:
        """Returns (cluster id, size)."""
        if isinstance(node, tuple):
            left, ls = build(node[0], depth + 1)
            right, rs = build(node[1], depth + 1)
            h = (max_depth - depth + 1) / (max_depth + 1)
            return chain_merge(left, right, h, ls + rs), ls + rs
        verts = node
        labels[verts] = group_counter[0]
        group_counter[0] += 1
        cluster = int(verts[0])
        size = 1
        for v in verts[1:]:
            cluster = chain_merge(cluster, int(v), 0.0, size + 1)
            size += 1
        return cluster, size

    build(tree, 0)
    # merges were emitted bottom-up per branch; sort by height (stable) so the
    # dendrogram invariant (non-decreasing heights) holds, ties keep emit order
    order = sorted(range(len(merges)), key=lambda i: merges[i][2])
    remap = {}
    fixed = []
    for new_idx, old_idx in enumerate(order):
        a, b, h, s = merges[old_idx]
        a = remap.get(a, a)
        b = remap.get(b, b)
        fixed.append((min(a, b), max(a, b), h, s))
        remap[n + old_idx] = n + new_idx
    dend = Dendrogram(n_leaves=n, merges=np.asarray(fixed, dtype=np.float64).reshape(-1, 4)
                      if fixed else np.zeros((0, 4)))
    partition = Partition.from_labels(labels.tolist())
    return BisectOutcome(dendrogram=dend, partition=partition,
                         n_groups=group_counter[0])

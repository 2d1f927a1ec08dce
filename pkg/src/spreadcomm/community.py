"""Aggregation of pairwise probabilities, dendrogram construction, modularity."""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .graphs import Graph, GraphError
from .mcmc import ChainResult, chain_pair_probability_matrix
from .model import ModelConfig

CONDITIONAL_MEAN = "conditional_mean"
WEIGHTED_SUM = "weighted_sum"  # the literal sum-of-products aggregation


class CommunityError(ValueError):
    pass


@dataclass
class PairProbabilityMatrix:
    """Accumulator of same-community probability estimates across impulses.

    ``prob_sum[j, k]`` sums the per-impulse conditional probabilities for
    impulses whose spread set contained both vertices; ``co_count[j, k]``
    counts those impulses.  The diagonal of ``co_count`` is kept equal to the
    number of accumulated impulses.
    """

    n: int
    prob_sum: np.ndarray = field(default=None)  # type: ignore[assignment]
    co_count: np.ndarray = field(default=None)  # type: ignore[assignment]
    n_impulses: int = 0

    def __post_init__(self):
        if self.prob_sum is None:
            self.prob_sum = np.zeros((self.n, self.n))
        if self.co_count is None:
            self.co_count = np.zeros((self.n, self.n), dtype=np.int64)

    def merge(self, other: "PairProbabilityMatrix") -> "PairProbabilityMatrix":
        if other.n != self.n:
            raise CommunityError("cannot merge accumulators of different sizes")
        self.prob_sum += other.prob_sum
        self.co_count += other.co_count
        self.n_impulses += other.n_impulses
        return self

    def unsupported_fraction(self) -> float:
        iu = np.triu_indices(self.n, 1)
        total = iu[0].size
        return float(np.count_nonzero(self.co_count[iu] == 0)) / total if total else 0.0

    def to_csv(self, labels=None) -> str:
        out = io.StringIO()
        names = labels if labels is not None else [str(i) for i in range(self.n)]
        out.write("i,j,probability,co_count,supported\n")
        for j in range(self.n):
            for k in range(j + 1, self.n):
                p, sup = final_pair_probability(self, j, k)
                out.write(f"{names[j]},{names[k]},{p:.10g},{int(self.co_count[j, k])},"
                          f"{int(sup)}\n")
        return out.getvalue()


def accumulate_impulse(ppm: PairProbabilityMatrix, sigma, chain: ChainResult,
                       cfg: ModelConfig, point_estimate: bool = False) -> PairProbabilityMatrix:
    """Fold one spread's chain into the accumulator (in place)."""
    sigma = np.asarray(sigma, dtype=np.int64)
    if set(sigma.tolist()) != set(chain.vertices.tolist()):
        raise CommunityError("spread set does not match the chain's vertex set")
    cols = np.array([chain.column_of(v) for v in sigma])
    mat = chain_pair_probability_matrix(chain, cfg, point_estimate=point_estimate)
    mat = mat[np.ix_(cols, cols)]
    idx = np.ix_(sigma, sigma)
    ppm.prob_sum[idx] += mat
    ppm.co_count[idx] += 1
    # keep the whole-matrix update symmetric-consistent: the loop above added
    # 1 on the diagonal for sigma members; the diagonal convention is handled
    # in final_pair_probability (j == k -> 1), so no correction is needed.
    ppm.n_impulses += 1
    diag = np.arange(ppm.n)
    ppm.co_count[diag, diag] = ppm.n_impulses
    ppm.prob_sum[diag, diag] = ppm.n_impulses
    return ppm


def final_pair_probability(ppm: PairProbabilityMatrix, j: int, k: int,
                           rule: str = CONDITIONAL_MEAN) -> tuple[float, bool]:
    """Aggregated same-community probability and whether any impulse supports it.

    The default rule is the conditional mean over co-sampling impulses; the
    ``weighted_sum`` rule keeps the raw sum-of-products form, weighting each
    conditional estimate by the empirical co-occurrence frequency.
    """
    if j == k:
        return 1.0, True
    c = int(ppm.co_count[j, k])
    if c == 0:
        return 0.0, False
    if rule == CONDITIONAL_MEAN:
        return float(ppm.prob_sum[j, k] / c), True
    if rule == WEIGHTED_SUM:
        if ppm.n_impulses == 0:
            return 0.0, False
        return float(ppm.prob_sum[j, k] * c / ppm.n_impulses), True
    raise CommunityError(f"unknown aggregation rule {rule!r}")


def final_probability_matrix(ppm: PairProbabilityMatrix,
                             rule: str = CONDITIONAL_MEAN) -> np.ndarray:
    mat = np.ones((ppm.n, ppm.n))
    for j in range(ppm.n):
        for k in range(j + 1, ppm.n):
            p, _ = final_pair_probability(ppm, j, k, rule=rule)
            mat[j, k] = mat[k, j] = p
    return mat


@dataclass(frozen=True)
class Partition:
    """Flat assignment of vertices 0..n-1 to community ids 0..k-1."""

    assignment: np.ndarray
    k: int

    def __post_init__(self):
        a = np.asarray(self.assignment, dtype=np.int64)
        if a.ndim != 1 or a.size == 0:
            raise CommunityError("assignment must be a non-empty 1-D array")
        present = np.unique(a)
        if not np.array_equal(present, np.arange(self.k)):
            raise CommunityError("community ids must be exactly 0..k-1, each nonempty")
        a.setflags(write=False)
        object.__setattr__(self, "assignment", a)

    @property
    def n(self) -> int:
        return self.assignment.size

    @classmethod
    def from_labels(cls, labels) -> "Partition":
        """Normalize arbitrary hashable labels to ids 0..k-1 by first appearance."""
        ids: dict = {}
        assignment = []
        for lab in labels:
            if lab not in ids:
                ids[lab] = len(ids)
            assignment.append(ids[lab])
        return cls(np.asarray(assignment, dtype=np.int64), len(ids))

    def communities(self) -> list[list[int]]:
        groups: list[list[int]] = [[] for _ in range(self.k)]
        for v, c in enumerate(self.assignment):
            groups[c].append(v)
        return groups


@dataclass(frozen=True)
class Dendrogram:
    """Binary merge tree over n leaves, scipy-linkage style.

    ``merges[i] = (a, b, height, size)`` merges clusters a and b into cluster
    ``n + i``; leaves are clusters 0..n-1.  Heights are non-decreasing in
    merge order.
    """

    n_leaves: int
    merges: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.merges, dtype=np.float64)
        if self.n_leaves < 1:
            raise CommunityError("dendrogram needs at least one leaf")
        if m.shape != (self.n_leaves - 1, 4):
            raise CommunityError("merges must have shape (n_leaves - 1, 4)")
        heights = m[:, 2]
        if heights.size and np.any(np.diff(heights) < -1e-12):
            raise CommunityError("merge heights must be non-decreasing")
        m.setflags(write=False)
        object.__setattr__(self, "merges", m)

    def cut_at_k(self, k: int) -> Partition:
        return cut_at_k(self, k)

    def to_newick(self, labels=None) -> str:
        n = self.n_leaves
        names = labels if labels is not None else [str(i) for i in range(n)]
        height = {i: 0.0 for i in range(n)}
        text = {i: str(names[i]) for i in range(n)}
        for idx, (a, b, h, _) in enumerate(self.merges):
            a, b = int(a), int(b)
            la = h - height[a]
            lb = h - height[b]
            node = n + idx
            text[node] = f"({text[a]}:{la:.10g},{text[b]}:{lb:.10g})"
            height[node] = h
        root = n + len(self.merges) - 1 if len(self.merges) else 0
        return text[root] + ";\n"

    def to_dot(self, labels=None) -> str:
        n = self.n_leaves
        names = labels if labels is not None else [str(i) for i in range(n)]
        lines = ["graph dendrogram {"]
        for i in range(n):
            lines.append(f'  {i} [label="{names[i]}", shape=box];')
        for idx, (a, b, h, _) in enumerate(self.merges):
            node = n + idx
            lines.append(f'  {node} [label="{h:.4g}"];')
            lines.append(f"  {node} -- {int(a)};")
            lines.append(f"  {node} -- {int(b)};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def average_linkage(dist: np.ndarray) -> Dendrogram:
    """Agglomerative clustering with average linkage and deterministic ties.

    Ties on the minimum distance are broken by the lexicographically smallest
    (min cluster id, max cluster id) pair, leaves first.
    """
    d = np.asarray(dist, dtype=np.float64)
    n = d.shape[0]
    if n < 2:
        raise CommunityError("need at least 2 items to cluster")
    if d.shape != (n, n) or not np.allclose(d, d.T):
        raise CommunityError("distance matrix must be square and symmetric")
    # work on a growing matrix indexed by cluster id (0..2n-2)
    big = np.full((2 * n - 1, 2 * n - 1), np.inf)
    big[:n, :n] = d
    sizes = np.zeros(2 * n - 1, dtype=np.int64)
    sizes[:n] = 1
    active = list(range(n))
    merges = np.zeros((n - 1, 4))
    for step in range(n - 1):
        best = (np.inf, 2 * n, 2 * n)
        for ai in range(len(active)):
            for bi in range(ai + 1, len(active)):
                a, b = active[ai], active[bi]
                lo, hi = (a, b) if a < b else (b, a)
                val = big[a, b]
                if val < best[0] or (val == best[0] and (lo, hi) < (best[1], best[2])):
                    best = (val, lo, hi)
        h, a, b = best
        new = n + step
        for c in active:
            if c in (a, b):
                continue
            big[new, c] = big[c, new] = (
                sizes[a] * big[a, c] + sizes[b] * big[b, c]) / (sizes[a] + sizes[b])
        sizes[new] = sizes[a] + sizes[b]
        active.remove(a)
        active.remove(b)
        active.append(new)
        merges[step] = (a, b, h, sizes[new])
    return Dendrogram(n_leaves=n, merges=merges)


def build_dendrogram(ppm: PairProbabilityMatrix,
                     rule: str = CONDITIONAL_MEAN) -> Dendrogram:
    """Average-linkage tree on d = 1 - aggregated pair probability.

    Pairs never co-sampled get the maximum distance 1.
    """
    if ppm.n < 2:
        raise CommunityError("need at least 2 vertices")
    prob = final_probability_matrix(ppm, rule=rule)
    dist = 1.0 - prob
    np.fill_diagonal(dist, 0.0)
    return average_linkage(dist)


def cut_at_k(d: Dendrogram, k: int) -> Partition:
    """Partition from the dendrogram with exactly k communities.

    Removes the k-1 highest merges; since heights are non-decreasing in merge
    order this keeps exactly the first n-k merges (ties resolved by merge
    order).  Community ids are assigned by smallest member vertex.
    """
    n = d.n_leaves
    if not 1 <= k <= n:
        raise CommunityError(f"k must lie in [1, {n}], got {k}")
    parent = list(range(2 * n - 1))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for step in range(n - k):
        a, b, _, _ = d.merges[step]
        new = n + step
        parent[find(int(a))] = new
        parent[find(int(b))] = new
    roots = [find(v) for v in range(n)]
    return Partition.from_labels(roots)


def modularity(g: Graph, p: Partition) -> float:
    """Newman modularity Q = tr(e) - sum of all entries of e squared.

    ``e`` is the k x k matrix of edge-weight fractions within/between groups,
    with off-diagonal mass split symmetrically so the entries sum to 1.
    Weighted edges count as multiplicities in count mode.
    """
    if p.n != g.n:
        raise CommunityError("partition must cover all vertices of the graph")
    total = g.total_edge_weight
    if total == 0:
        raise GraphError("modularity undefined on an edgeless graph")
    e = np.zeros((p.k, p.k))
    for i, j, w in g.edges():
        ci, cj = p.assignment[i], p.assignment[j]
        if ci == cj:
            e[ci, ci] += w
        else:
            e[ci, cj] += w / 2.0
            e[cj, ci] += w / 2.0
    e /= total
    return float(np.trace(e) - (e @ e).sum())


@dataclass(frozen=True)
class BestCut:
    partition: Partition
    q: float
    q_by_k: np.ndarray          # q_by_k[k-1] = modularity of the k-community cut
    tied_ks: tuple[int, ...]    # all k achieving the maximum (within 1e-12)


def select_best_partition(d: Dendrogram, g: Graph) -> BestCut:
    """Scan every cut k = 1..n and return the modularity maximizer.

    Ties go to the smallest k; all tied cut sizes are reported for diagnostics.
    """
    n = d.n_leaves
    if n != g.n:
        raise CommunityError("dendrogram and graph disagree on vertex count")
    qs = np.empty(n)
    parts = []
    for k in range(1, n + 1):
        part = cut_at_k(d, k)
        parts.append(part)
        qs[k - 1] = modularity(g, part)
    best_k = int(np.argmax(qs)) + 1
    q_best = qs[best_k - 1]
    # argmax returns the first (smallest-k) maximizer already
    tied = tuple(int(k) for k in range(1, n + 1) if qs[k - 1] >= q_best - 1e-12)
    return BestCut(partition=parts[best_k - 1], q=float(q_best), q_by_k=qs, tied_ks=tied)

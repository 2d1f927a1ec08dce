"""Information-spread simulation.

Covers both directions: the generative model (synthetic graphs from latent
angles) and the subsampling spreads over an observed graph that select the
vertex sets used to restrict inference.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .graphs import BINARY, Graph, GraphError, graph_from_impulses
from .model import LatentState, ModelConfig, link_h

SEQUENTIAL = "sequential"
INSTANTANEOUS = "instantaneous"


class SpreadError(ValueError):
    pass


class DegenerateImpulseError(SpreadError):
    pass


@dataclass(frozen=True)
class ImpulseTrace:
    """One simulated information exchange.

    Sequential traces hold a chain of contacts (the callee of one step is the
    caller of the next); instantaneous traces hold a broadcast center and its
    recipient set.
    """

    kind: str
    contacts: tuple[tuple[int, int], ...] = ()
    center: int | None = None
    recipients: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind == SEQUENTIAL:
            if not self.contacts:
                raise SpreadError("sequential trace needs at least one contact")
            for (a, b), (c, _) in zip(self.contacts, self.contacts[1:]):
                if b != c:
                    raise SpreadError("sequential contacts must chain caller->callee")
            for a, b in self.contacts:
                if a == b:
                    raise SpreadError("self-contact in sequential trace")
        elif self.kind == INSTANTANEOUS:
            if self.center is None:
                raise SpreadError("instantaneous trace needs a center")
            if self.center in self.recipients:
                raise SpreadError("center may not be its own recipient")
            if len(set(self.recipients)) != len(self.recipients):
                raise SpreadError("duplicate recipients")
        else:
            raise SpreadError(f"unknown impulse kind {self.kind!r}")

    def to_json(self) -> str:
        if self.kind == SEQUENTIAL:
            doc = {"kind": self.kind, "contacts": [list(c) for c in self.contacts]}
        else:
            doc = {"kind": self.kind, "center": self.center,
                   "recipients": list(self.recipients)}
        return json.dumps(doc)

    @classmethod
    def from_json(cls, line: str) -> "ImpulseTrace":
        doc = json.loads(line)
        if doc.get("kind") == SEQUENTIAL:
            return cls(SEQUENTIAL, contacts=tuple(tuple(c) for c in doc["contacts"]))
        return cls(INSTANTANEOUS, center=doc["center"],
                   recipients=tuple(doc["recipients"]))


def traces_to_jsonl(traces) -> str:
    return "".join(t.to_json() + "\n" for t in traces)


def traces_from_jsonl(text: str) -> list[ImpulseTrace]:
    return [ImpulseTrace.from_json(line) for line in text.splitlines() if line.strip()]


@dataclass(frozen=True)
class SpreadConfig:
    """Subsampling parameters: number of spreads, size budget, walk cap."""

    n_impulses: int = 200
    target_size: int | None = None
    max_steps: int | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.n_impulses < 1:
            raise SpreadError("n_impulses must be >= 1")
        if self.target_size is not None and self.target_size < 2:
            raise SpreadError("target_size must be >= 2")
        if (self.target_size is not None and self.max_steps is not None
                and self.max_steps < self.target_size):
            raise SpreadError("max_steps must be >= target_size")

    def resolved_size(self, n: int, expected_communities: int = 4) -> int:
        """Spread-set size: the configured one, or a size-per-community heuristic."""
        if self.target_size is not None:
            return min(self.target_size, n)
        return min(max(8, math.ceil(n / expected_communities)), n)

    def resolved_steps(self, size: int) -> int:
        if self.max_steps is not None:
            return self.max_steps
        return 50 * size


def sample_spread_set(g: Graph, cfg: SpreadConfig, rng: np.random.Generator) -> np.ndarray:
    """Snowball random walk collecting distinct vertices in first-visit order.

    Starts at a uniform non-isolated vertex and hops to uniform neighbours
    until the size budget is met or the step cap elapses.  The returned set
    always induces a connected subgraph.
    """
    degrees = g.degrees()
    candidates = np.nonzero(degrees > 0)[0]
    if candidates.size == 0:
        raise SpreadError("no spread possible on an edgeless graph")
    size = cfg.resolved_size(g.n)
    max_steps = cfg.resolved_steps(size)
    current = int(rng.choice(candidates))
    visited = [current]
    seen = {current}
    for _ in range(max_steps):
        if len(visited) >= size:
            break
        nbrs = np.nonzero(g.adjacency[current] > 0)[0]
        current = int(rng.choice(nbrs))
        if current not in seen:
            seen.add(current)
            visited.append(current)
    return np.asarray(visited, dtype=np.int64)


def _contact_weights(angles: np.ndarray, current: int, cfg: ModelConfig) -> np.ndarray:
    w = link_h(angles[current] - angles) ** cfg.sharpness_k
    w[current] = 0.0
    return w


def simulate_sequential_impulse(state: LatentState, T: int, cfg: ModelConfig,
                                rng: np.random.Generator) -> ImpulseTrace:
    """Chain of T contacts; each partner is drawn proportional to the link."""
    n = len(state)
    if n < 2:
        raise SpreadError("sequential impulse needs at least 2 vertices")
    if T < 1:
        raise SpreadError("propagation length must be >= 1")
    angles = np.empty(n)
    angles[state.vertices] = state.angles
    current = int(rng.integers(n))
    contacts = []
    for _ in range(T):
        w = _contact_weights(angles, current, cfg)
        total = w.sum()
        if total == 0.0:
            raise DegenerateImpulseError(
                "degenerate impulse: all candidate contact weights are zero")
        nxt = int(rng.choice(n, p=w / total))
        contacts.append((current, nxt))
        current = nxt
    return ImpulseTrace(SEQUENTIAL, contacts=tuple(contacts))


def simulate_instantaneous_impulse(state: LatentState, cfg: ModelConfig,
                                   rng: np.random.Generator) -> ImpulseTrace:
    """Uniform center; each other vertex joins independently with link probability."""
    n = len(state)
    if n < 2:
        raise SpreadError("instantaneous impulse needs at least 2 vertices")
    angles = np.empty(n)
    angles[state.vertices] = state.angles
    center = int(rng.integers(n))
    p = link_h(angles[center] - angles) ** cfg.sharpness_k
    draws = rng.random(n)
    recipients = tuple(int(j) for j in range(n) if j != center and draws[j] < p[j])
    return ImpulseTrace(INSTANTANEOUS, center=center, recipients=recipients)


def synthesize_network(state: LatentState, n_impulses: int, kind: str,
                       cfg: ModelConfig, rng: np.random.Generator,
                       T: int = 5, output_mode: str = BINARY,
                       instantaneous_style: str = "clique") -> Graph:
    """Simulate n_impulses impulses from the latent angles and assemble a graph."""
    if n_impulses < 1:
        raise SpreadError("n_impulses must be >= 1")
    traces = []
    for _ in range(n_impulses):
        if kind == SEQUENTIAL:
            traces.append(simulate_sequential_impulse(state, T, cfg, rng))
        elif kind == INSTANTANEOUS:
            traces.append(simulate_instantaneous_impulse(state, cfg, rng))
        else:
            raise SpreadError(f"unknown impulse kind {kind!r}")
    return graph_from_impulses(traces, len(state), output_mode=output_mode,
                               instantaneous_style=instantaneous_style)


def clustered_state(sizes, centers=None) -> tuple[LatentState, np.ndarray]:
    """Latent state with one angle cluster per group, plus the planted labels.

    Cluster centers default to equally spaced points on the circle.
    """
    sizes = [int(s) for s in sizes]
    if any(s < 1 for s in sizes):
        raise SpreadError("cluster sizes must be positive")
    k = len(sizes)
    if k < 1:
        raise SpreadError("need at least one cluster")
    if centers is None:
        centers = [2.0 * np.pi * i / k for i in range(k)]
    if len(centers) != k:
        raise SpreadError("one center angle per cluster required")
    angles = np.concatenate([np.full(s, c, dtype=np.float64)
                             for s, c in zip(sizes, centers)])
    labels = np.concatenate([np.full(s, i, dtype=np.int64)
                             for i, s in enumerate(sizes)])
    n = angles.size
    return LatentState(np.arange(n), angles), labels

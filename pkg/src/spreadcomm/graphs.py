"""Graph container, file ingestion, and adjacency assembly from impulse traces."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

BINARY = "binary"
COUNT = "count"


class GraphError(ValueError):
    pass


class ParseError(GraphError):
    pass


@dataclass(frozen=True)
class Graph:
    """Undirected graph with a symmetric integer adjacency matrix.

    ``mode`` is "binary" (entries in {0,1}) or "count" (entries in N).
    ``origin`` maps local vertex indices back to the indices of the graph a
    subgraph was taken from; for graphs built directly it is 0..n-1.
    """

    adjacency: np.ndarray
    mode: str = BINARY
    labels: tuple[str, ...] | None = None
    ground_truth: tuple | None = None
    origin: tuple[int, ...] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        adj = np.asarray(self.adjacency)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise GraphError("adjacency must be a square matrix")
        if not np.issubdtype(adj.dtype, np.integer):
            if not np.all(adj == np.round(adj)):
                raise GraphError("adjacency entries must be integers")
            adj = adj.astype(np.int64)
        else:
            adj = adj.astype(np.int64, copy=True)
        if np.any(adj < 0):
            raise GraphError("adjacency entries must be non-negative")
        if not np.array_equal(adj, adj.T):
            raise GraphError("adjacency must be symmetric")
        if np.any(np.diag(adj) != 0):
            raise GraphError("self-loops are not allowed")
        if self.mode not in (BINARY, COUNT):
            raise GraphError(f"unknown mode {self.mode!r}")
        if self.mode == BINARY and np.any(adj > 1):
            raise GraphError("binary-mode adjacency must be 0/1")
        adj.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)
        n = adj.shape[0]
        if self.labels is not None and len(self.labels) != n:
            raise GraphError("labels must cover exactly the n vertices")
        if self.ground_truth is not None and len(self.ground_truth) != n:
            raise GraphError("ground_truth must cover exactly the n vertices")
        if self.origin is None:
            object.__setattr__(self, "origin", tuple(range(n)))
        elif len(self.origin) != n:
            raise GraphError("origin must cover exactly the n vertices")

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def n_edges(self) -> int:
        """Number of distinct vertex pairs with a positive entry."""
        return int(np.count_nonzero(np.triu(self.adjacency, 1)))

    @property
    def total_edge_weight(self) -> int:
        return int(np.triu(self.adjacency, 1).sum())

    def degrees(self) -> np.ndarray:
        """Number of distinct neighbours per vertex."""
        return (self.adjacency > 0).sum(axis=1)

    def edges(self) -> list[tuple[int, int, int]]:
        """Sorted (i, j, weight) triples with i < j."""
        ii, jj = np.nonzero(np.triu(self.adjacency, 1))
        return [(int(i), int(j), int(self.adjacency[i, j])) for i, j in zip(ii, jj)]

    def label_of(self, v: int) -> str:
        return self.labels[v] if self.labels is not None else str(v)

    # --- export ---------------------------------------------------------

    def to_edge_list(self) -> str:
        lines = []
        for i, j, w in self.edges():
            li, lj = self.label_of(i), self.label_of(j)
            if self.mode == COUNT and w != 1:
                lines.append(f"{li} {lj} {w}")
            else:
                lines.append(f"{li} {lj}")
        return "\n".join(lines) + ("\n" if lines else "")

    def to_json(self) -> str:
        doc = {
            "n": self.n,
            "mode": self.mode,
            "edges": [[i, j, w] for i, j, w in self.edges()],
            "labels": list(self.labels) if self.labels is not None else None,
            "ground_truth": list(self.ground_truth) if self.ground_truth is not None else None,
        }
        return json.dumps(doc, indent=2) + "\n"

    def to_dot(self) -> str:
        lines = ["graph g {"]
        for v in range(self.n):
            lines.append(f'  {v} [label="{self.label_of(v)}"];')
        for i, j, w in self.edges():
            attr = f' [weight={w}]' if self.mode == COUNT and w != 1 else ""
            lines.append(f"  {i} -- {j}{attr};")
        lines.append("}")
        return "\n".join(lines) + "\n"

    def to_gml(self) -> str:
        lines = ["graph [", "  directed 0"]
        for v in range(self.n):
            lines.append("  node [")
            lines.append(f"    id {v}")
            lines.append(f'    label "{self.label_of(v)}"')
            if self.ground_truth is not None:
                lines.append(f'    value "{self.ground_truth[v]}"')
            lines.append("  ]")
        for i, j, w in self.edges():
            lines.append("  edge [")
            lines.append(f"    source {i}")
            lines.append(f"    target {j}")
            if self.mode == COUNT and w != 1:
                lines.append(f"    weight {w}")
            lines.append("  ]")
        lines.append("]")
        return "\n".join(lines) + "\n"


def parse_edge_list(text: str, mode: str = BINARY) -> Graph:
    """Parse a whitespace-separated edge list.

    Each non-empty line not starting with '#' holds two vertex tokens and an
    optional positive integer weight.  Vertex ids are assigned by first
    appearance and the original tokens are kept as labels.  Repeated pairs
    accumulate in count mode and saturate at 1 in binary mode.
    """
    if mode not in (BINARY, COUNT):
        raise GraphError(f"unknown mode {mode!r}")
    index: dict[str, int] = {}
    entries: list[tuple[int, int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) not in (2, 3):
            raise ParseError(f"line {lineno}: expected 2 or 3 tokens, got {len(tokens)}")
        a, b = tokens[0], tokens[1]
        if len(tokens) == 3:
            try:
                w = int(tokens[2])
            except ValueError:
                raise ParseError(f"line {lineno}: weight {tokens[2]!r} is not an integer") from None
            if w <= 0:
                raise ParseError(f"line {lineno}: weight must be a positive integer")
        else:
            w = 1
        if a == b:
            raise ParseError(f"line {lineno}: self-loop {a!r} not allowed")
        for tok in (a, b):
            if tok not in index:
                index[tok] = len(index)
        entries.append((index[a], index[b], w))
    n = len(index)
    adj = np.zeros((n, n), dtype=np.int64)
    for i, j, w in entries:
        adj[i, j] += w
        adj[j, i] += w
    if mode == BINARY:
        adj = np.minimum(adj, 1)
    labels = tuple(sorted(index, key=index.get))
    return Graph(adj, mode=mode, labels=labels)


def _tokenize_gml(text: str) -> list[str]:
    tokens: list[str] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
        elif c == "#":
            while i < n and text[i] != "\n":
                i += 1
        elif c == '"':
            j = i + 1
            while j < n and text[j] != '"':
                j += 1
            if j >= n:
                raise ParseError("unterminated string in GML input")
            tokens.append(text[i : j + 1])
            i = j + 1
        elif c in "[]":
            tokens.append(c)
            i += 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "[]":
                j += 1
            tokens.append(text[i:j])
            i = j
    return tokens


def _parse_gml_block(tokens: list[str], pos: int) -> tuple[list[tuple[str, object]], int]:
    items: list[tuple[str, object]] = []
    while pos < len(tokens):
        key = tokens[pos]
        if key == "]":
            return items, pos + 1
        pos += 1
        if pos >= len(tokens):
            raise ParseError(f"GML key {key!r} has no value")
        val = tokens[pos]
        if val == "[":
            sub, pos = _parse_gml_block(tokens, pos + 1)
            items.append((key, sub))
        else:
            pos += 1
            if val.startswith('"'):
                items.append((key, val[1:-1]))
            else:
                try:
                    items.append((key, int(val)))
                except ValueError:
                    try:
                        items.append((key, float(val)))
                    except ValueError:
                        items.append((key, val))
    return items, pos


def parse_gml(text: str, mode: str = BINARY) -> Graph:
    """Parse the GML subset needed for public benchmark files.

    Only node blocks (id, optional label, optional value) and edge blocks
    (source, target, optional weight) inside the graph block are interpreted;
    all other keys are ignored.  'value' fields populate ground_truth.
    """
    tokens = _tokenize_gml(text)
    items, _ = _parse_gml_block(tokens, 0)
    graph_block = None
    for key, val in items:
        if key == "graph" and isinstance(val, list):
            graph_block = val
            break
    if graph_block is None:
        raise ParseError("no graph block found")

    ids: dict[object, int] = {}
    labels: list[str] = []
    values: list[object] = []
    any_value = False
    edges: list[tuple[object, object, int]] = []
    for key, val in graph_block:
        if key == "node":
            fields = dict(val)
            if "id" not in fields:
                raise ParseError("node block missing id")
            nid = fields["id"]
            if nid in ids:
                raise ParseError(f"duplicate node id {nid!r}")
            ids[nid] = len(ids)
            labels.append(str(fields.get("label", nid)))
            if "value" in fields:
                any_value = True
            values.append(fields.get("value"))
        elif key == "edge":
            fields = dict(val)
            if "source" not in fields or "target" not in fields:
                raise ParseError("edge block missing source/target")
            w = fields.get("weight", 1)
            if not isinstance(w, int) or w <= 0:
                raise ParseError(f"edge weight must be a positive integer, got {w!r}")
            edges.append((fields["source"], fields["target"], w))
    if not ids:
        raise ParseError("no nodes")

    n = len(ids)
    adj = np.zeros((n, n), dtype=np.int64)
    for src, dst, w in edges:
        if src not in ids or dst not in ids:
            raise ParseError(f"edge references unknown node ({src!r}, {dst!r})")
        i, j = ids[src], ids[dst]
        if i == j:
            raise ParseError(f"self-loop on node {src!r} not allowed")
        adj[i, j] += w
        adj[j, i] += w
    if mode == BINARY:
        adj = np.minimum(adj, 1)
    return Graph(
        adj,
        mode=mode,
        labels=tuple(labels),
        ground_truth=tuple(values) if any_value else None,
    )


def induced_subgraph(g: Graph, vertices) -> Graph:
    """Subgraph on the given duplicate-free vertex list, preserving order.

    ``origin`` of the result maps back to the *original* graph so results on
    nested subgraphs can always be reported against the top-level vertex ids.
    """
    verts = np.asarray(vertices, dtype=np.int64)
    if verts.size == 0:
        raise GraphError("empty vertex set")
    if len(set(verts.tolist())) != verts.size:
        raise GraphError("duplicate vertices in subgraph request")
    if np.any(verts < 0) or np.any(verts >= g.n):
        raise GraphError("unknown vertex in subgraph request")
    adj = g.adjacency[np.ix_(verts, verts)]
    labels = tuple(g.labels[v] for v in verts) if g.labels is not None else None
    gt = tuple(g.ground_truth[v] for v in verts) if g.ground_truth is not None else None
    origin = tuple(g.origin[v] for v in verts)
    return Graph(adj, mode=g.mode, labels=labels, ground_truth=gt, origin=origin)


def graph_from_impulses(traces, n: int, output_mode: str = BINARY,
                        instantaneous_style: str = "clique") -> Graph:
    """Accumulate impulse traces into an adjacency matrix.

    Count mode keeps the raw contact counts; binary mode takes the elementwise
    minimum with 1.  Sequential contacts are symmetrized.  Instantaneous
    traces materialize either as a clique on {center} U recipients (default)
    or as a star centered on the broadcaster.
    """
    if output_mode not in (BINARY, COUNT):
        raise GraphError(f"unknown mode {output_mode!r}")
    if instantaneous_style not in ("clique", "star"):
        raise GraphError(f"unknown instantaneous style {instantaneous_style!r}")
    acc = np.zeros((n, n), dtype=np.int64)

    def bump(i: int, j: int):
        if not (0 <= i < n and 0 <= j < n):
            raise GraphError(f"vertex out of range in trace: ({i}, {j})")
        if i == j:
            raise GraphError("self-contact in trace")
        acc[i, j] += 1
        acc[j, i] += 1

    for trace in traces:
        if trace.kind == "sequential":
            for i, j in trace.contacts:
                bump(i, j)
        elif trace.kind == "instantaneous":
            members = [trace.center, *trace.recipients]
            if instantaneous_style == "clique":
                for a in range(len(members)):
                    for b in range(a + 1, len(members)):
                        bump(members[a], members[b])
            else:
                for r in trace.recipients:
                    bump(trace.center, r)
        else:
            raise GraphError(f"unknown trace kind {trace.kind!r}")
    if output_mode == BINARY:
        acc = np.minimum(acc, 1)
    return Graph(acc, mode=output_mode)

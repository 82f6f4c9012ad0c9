"""Weighted undirected graphs loaded from edge-list text files.

The graph is immutable after loading and supports O(degree) neighbor access
plus weighted neighbor sampling, which is all the random-walk generator
needs. Node identifiers are opaque strings; a dense internal index 0..n-1
is assigned in first-appearance order.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Iterator

import numpy as np


class GraphFormatError(ValueError):
    """An edge-list line could not be parsed (carries the 1-based line number)."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class EmptyGraphError(ValueError):
    """The edge list produced a graph with no nodes."""


class Graph:
    """Immutable weighted adjacency in CSR form.

    Every edge appears in both endpoints' adjacency lists with equal weight;
    all weights are strictly positive. Safe for unsynchronized concurrent
    reads.
    """

    def __init__(self, node_ids: list[str], indptr: np.ndarray, indices: np.ndarray,
                 weights: np.ndarray, dropped_self_loops: int = 0):
        self.node_ids = list(node_ids)
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int32)
        self.weights = np.asarray(weights, dtype=np.float64)
        self.dropped_self_loops = dropped_self_loops
        self.index_of = {v: i for i, v in enumerate(self.node_ids)}
        if len(self.index_of) != len(self.node_ids):
            raise ValueError("node identifiers are not distinct")
        # Per-node transition CDF, globally searchable: entry for neighbor slot e
        # of node i is i + P(pick a slot <= e), with the last slot exactly i + 1.
        # A single searchsorted against this array then samples a weighted
        # neighbor for any batch of (node, uniform) queries at once.
        self._cdf = np.empty_like(self.weights)
        for i in range(self.n):
            lo, hi = self.indptr[i], self.indptr[i + 1]
            if hi > lo:
                cum = np.cumsum(self.weights[lo:hi])
                seg = cum / cum[-1]
                seg[-1] = 1.0
                self._cdf[lo:hi] = i + seg

    @property
    def n(self) -> int:
        return len(self.node_ids)

    @property
    def edge_entry_count(self) -> int:
        """Number of stored adjacency entries (each undirected edge counts twice)."""
        return len(self.indices)

    def degree(self, node: int) -> int:
        return int(self.indptr[node + 1] - self.indptr[node])

    def neighbors(self, node: int) -> tuple[np.ndarray, np.ndarray]:
        """Neighbor indices and weights of ``node`` as read-only views."""
        lo, hi = self.indptr[node], self.indptr[node + 1]
        return self.indices[lo:hi], self.weights[lo:hi]

    def isolated_nodes(self) -> np.ndarray:
        return np.flatnonzero(np.diff(self.indptr) == 0)

    def sample_neighbor(self, node: int, rng: np.random.Generator) -> int:
        """Draw a neighbor of ``node`` with probability proportional to edge weight."""
        lo, hi = self.indptr[node], self.indptr[node + 1]
        if hi == lo:
            raise ValueError(f"node {self.node_ids[node]!r} is isolated")
        u = rng.random()
        pos = lo + np.searchsorted(self._cdf[lo:hi], node + u, side="right")
        return int(self.indices[pos])

    def sample_neighbors(self, nodes: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
        """Vectorized weighted neighbor draw: one uniform in [0,1) per node."""
        pos = np.searchsorted(self._cdf, nodes + uniforms, side="right")
        return self.indices[pos]

    def edge_lines(self) -> Iterator[str]:
        """Serialize as edge-list lines, one undirected edge per line."""
        for i in range(self.n):
            lo, hi = self.indptr[i], self.indptr[i + 1]
            for e in range(lo, hi):
                j = self.indices[e]
                if i <= j:
                    yield f"{self.node_ids[i]} {self.node_ids[j]} {float(self.weights[e])!r}"

    def save_edges(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for line in self.edge_lines():
                fh.write(line + "\n")


def load_graph(source: str | Path | Iterable[str], directed_input: bool = False) -> Graph:
    """Load a graph from edge-list lines "src dst [weight]".

    Lines starting with '#' and blank lines are ignored; fields are separated
    by ASCII whitespace; a missing weight means 1.0. Edges accumulate on
    unordered node pairs, so duplicate edges have their weights summed and a
    directed input is symmetrized (an arc and its reverse land on the same
    undirected edge either way, which is why ``directed_input`` does not
    change the result; it is kept for interface clarity). Self-loops are
    dropped and counted.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            return load_graph(fh, directed_input=directed_input)

    node_ids: list[str] = []
    index: dict[str, int] = {}
    pair_weight: dict[tuple[int, int], float] = {}
    dropped = 0

    def intern(name: str) -> int:
        idx = index.get(name)
        if idx is None:
            idx = len(node_ids)
            index[name] = idx
            node_ids.append(name)
        return idx

    for line_no, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) not in (2, 3):
            raise GraphFormatError(line_no, f"expected 'src dst [weight]', got {len(fields)} fields")
        if len(fields) == 3:
            try:
                w = float(fields[2])
            except ValueError:
                raise GraphFormatError(line_no, f"weight {fields[2]!r} is not a decimal literal") from None
            if not np.isfinite(w) or w <= 0:
                raise GraphFormatError(line_no, f"weight must be finite and positive, got {fields[2]}")
        else:
            w = 1.0
        a, b = intern(fields[0]), intern(fields[1])
        if a == b:
            dropped += 1
            continue
        key = (a, b) if a < b else (b, a)
        pair_weight[key] = pair_weight.get(key, 0.0) + w

    if not node_ids:
        raise EmptyGraphError("edge list contains no nodes")

    n = len(node_ids)
    degree = np.zeros(n, dtype=np.int64)
    for a, b in pair_weight:
        degree[a] += 1
        degree[b] += 1
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(degree, out=indptr[1:])
    indices = np.zeros(indptr[-1], dtype=np.int32)
    weights = np.zeros(indptr[-1], dtype=np.float64)
    cursor = indptr[:-1].copy()
    for (a, b), w in pair_weight.items():
        indices[cursor[a]] = b
        weights[cursor[a]] = w
        cursor[a] += 1
        indices[cursor[b]] = a
        weights[cursor[b]] = w
        cursor[b] += 1
    # sort each adjacency segment by neighbor index
    for i in range(n):
        lo, hi = indptr[i], indptr[i + 1]
        if hi - lo > 1:
            order = np.argsort(indices[lo:hi], kind="stable")
            indices[lo:hi] = indices[lo:hi][order]
            weights[lo:hi] = weights[lo:hi][order]

    return Graph(node_ids, indptr, indices, weights, dropped_self_loops=dropped)

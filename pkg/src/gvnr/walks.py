"""Truncated random-walk corpus generation.

Each non-isolated node starts a fixed number of walks; every step moves to a
neighbor drawn with probability proportional to edge weight. Walk randomness
comes from a counter-based hash of (seed, start node, walk index), so the
corpus is a pure function of (graph, walks_per_node, walk_length, seed) and
is independent of scheduling or worker count.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .graph import Graph

_GAMMA = np.uint64(0x9E3779B97F4A7C15)


def _mix64(z: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer; wraps modulo 2**64."""
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def _walk_states(seed: int, starts: np.ndarray, walk_index: np.ndarray) -> np.ndarray:
    base = _mix64(np.uint64(seed % (1 << 64)) + _GAMMA * np.ones(1, dtype=np.uint64))
    st = _mix64(base ^ starts.astype(np.uint64))
    return _mix64(st ^ walk_index.astype(np.uint64))


def _next_uniform(states: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    states = states + _GAMMA
    bits = _mix64(states)
    return states, (bits >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)


class WalkCorpus:
    """A multiset of node-index walks, stored flat with per-walk offsets."""

    def __init__(self, flat: np.ndarray, offsets: np.ndarray, walk_length: int,
                 walks_per_node: int, seed: int, isolated: np.ndarray | None = None):
        self.flat = np.asarray(flat, dtype=np.int32)
        self.offsets = np.asarray(offsets, dtype=np.int64)
        self.walk_length = walk_length
        self.walks_per_node = walks_per_node
        self.seed = seed
        self.isolated = np.asarray(isolated if isolated is not None else [], dtype=np.int64)

    @classmethod
    def from_walks(cls, walks: Sequence[Sequence[int]], walk_length: int,
                   walks_per_node: int = 0, seed: int = 0) -> "WalkCorpus":
        offsets = np.zeros(len(walks) + 1, dtype=np.int64)
        np.cumsum([len(w) for w in walks], out=offsets[1:])
        flat = np.concatenate([np.asarray(w, dtype=np.int32) for w in walks]) \
            if walks else np.zeros(0, dtype=np.int32)
        return cls(flat, offsets, walk_length, walks_per_node, seed)

    def __len__(self) -> int:
        return len(self.offsets) - 1

    def __iter__(self) -> Iterator[np.ndarray]:
        for w in range(len(self)):
            yield self.flat[self.offsets[w]:self.offsets[w + 1]]

    @property
    def total_visits(self) -> int:
        return len(self.flat)

    def visit_counts(self, n: int) -> np.ndarray:
        return np.bincount(self.flat, minlength=n)


def generate_walks(graph: Graph, walks_per_node: int, walk_length: int, seed: int) -> WalkCorpus:
    """Run ``walks_per_node`` truncated walks of ``walk_length`` nodes from every node.

    Isolated nodes start no walks and are reported on the corpus. In a
    symmetrized positive-weight graph a walk can never dead-end, so every
    walk has exactly ``walk_length`` nodes.
    """
    if walks_per_node < 1:
        raise ValueError("walks_per_node must be >= 1")
    if walk_length < 2:
        raise ValueError("walk_length must be >= 2")
    isolated = graph.isolated_nodes()
    starts = np.flatnonzero(np.diff(graph.indptr) > 0).astype(np.int64)
    n_walks = len(starts) * walks_per_node

    start_col = np.repeat(starts, walks_per_node)
    widx_col = np.tile(np.arange(walks_per_node, dtype=np.int64), len(starts))
    states = _walk_states(seed, start_col, widx_col)

    walks = np.empty((n_walks, walk_length), dtype=np.int32)
    walks[:, 0] = start_col
    cur = start_col.astype(np.float64)
    for step in range(1, walk_length):
        states, u = _next_uniform(states)
        nxt = graph.sample_neighbors(cur, u)
        walks[:, step] = nxt
        cur = nxt.astype(np.float64)

    offsets = np.arange(n_walks + 1, dtype=np.int64) * walk_length
    return WalkCorpus(walks.ravel(), offsets, walk_length, walks_per_node, seed,
                      isolated=isolated)


def save_walks(corpus: WalkCorpus, node_ids: Sequence[str], path: str | Path) -> None:
    """One walk per line, space-separated external node identifiers."""
    with open(path, "w", encoding="utf-8") as fh:
        for walk in corpus:
            fh.write(" ".join(node_ids[v] for v in walk) + "\n")


def load_walks(source: str | Path, index_of: dict[str, int]) -> WalkCorpus:
    """Read a persisted corpus back, mapping external ids through ``index_of``."""
    walks: list[list[int]] = []
    with open(source, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            tokens = raw.split()
            if not tokens:
                continue
            try:
                walks.append([index_of[t] for t in tokens])
            except KeyError as exc:
                raise ValueError(f"line {line_no}: unknown node id {exc.args[0]!r}") from None
    length = max((len(w) for w in walks), default=0)
    return WalkCorpus.from_walks(walks, walk_length=length)

"""Co-occurrence matrix construction from walk corpora.

Two nodes co-occur when they appear within a window of each other inside a
walk; an occurrence at step distance q contributes 1/q, so distant
co-occurrences are increasingly downweighted. The matrix is symmetric by
construction and can be sparsified by zeroing entries below a threshold.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .walks import WalkCorpus


class CoocMatrix:
    """Sparse symmetric co-occurrence counts; zeros are implicit."""

    def __init__(self, matrix: sp.csr_matrix, window: int, x_min: float = 0.0):
        mat = sp.csr_matrix(matrix, dtype=np.float64)
        mat.sort_indices()
        mat.eliminate_zeros()
        self.mat = mat
        self.window = window
        self.x_min = x_min

    @property
    def n(self) -> int:
        return self.mat.shape[0]

    @property
    def nnz(self) -> int:
        return self.mat.nnz

    @property
    def row_positive_count(self) -> np.ndarray:
        return np.diff(self.mat.indptr)

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Column indices and values of the stored entries of row i."""
        lo, hi = self.mat.indptr[i], self.mat.indptr[i + 1]
        return self.mat.indices[lo:hi], self.mat.data[lo:hi]

    def row_positive_proportion(self, i: int) -> float:
        """Fraction of this row's entries that are positive."""
        return (self.mat.indptr[i + 1] - self.mat.indptr[i]) / self.n

    def entries(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """All stored entries as (rows, cols, values), row-major order."""
        coo = self.mat.tocoo()
        return coo.row.astype(np.int32), coo.col.astype(np.int32), coo.data

    def toarray(self) -> np.ndarray:
        return self.mat.toarray()


def build_cooc(corpus: WalkCorpus, window: int, n: int | None = None) -> CoocMatrix:
    """Accumulate 1/q for every ordered pair at step distance q <= window.

    Equivalent to sliding a two-sided window over every walk: for each center
    position p and each offset q in 1..window with p+q (resp. p-q) in bounds,
    the pair (walk[p], walk[p+-q]) gains 1/q. Accumulation is in double
    precision. ``n`` fixes the matrix size when nodes may be absent from the
    corpus (isolated nodes start no walks).
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    if n is None:
        n = int(corpus.flat.max()) + 1 if len(corpus.flat) else 0
    flat = corpus.flat
    # position of each visit within its walk, to mask pairs straddling walks
    lengths = np.diff(corpus.offsets)
    pos_in_walk = np.arange(len(flat), dtype=np.int64) - np.repeat(corpus.offsets[:-1], lengths)

    acc = sp.csr_matrix((n, n), dtype=np.float64)
    for q in range(1, window + 1):
        if q >= len(flat):
            break
        keep = pos_in_walk[q:] >= q
        left = flat[:-q][keep]
        right = flat[q:][keep]
        if len(left) == 0:
            continue
        vals = np.full(len(left), 1.0 / q)
        acc = acc + sp.coo_matrix((vals, (left, right)), shape=(n, n)).tocsr()
    full = acc + acc.T
    return CoocMatrix(full, window=window, x_min=0.0)


def apply_threshold(x: CoocMatrix, x_min: float) -> CoocMatrix:
    """Remove entries strictly below ``x_min``; entries equal to it are kept."""
    if x_min < 0:
        raise ValueError("x_min must be >= 0")
    if x_min == 0:
        return CoocMatrix(x.mat.copy(), window=x.window, x_min=0.0)
    mat = x.mat.copy()
    mat.data[mat.data < x_min] = 0.0
    mat.eliminate_zeros()
    return CoocMatrix(mat, window=x.window, x_min=x_min)


def powerlaw_exponent(x: CoocMatrix) -> float:
    """Least-squares slope of the log-log rank/value curve of stored entries.

    Reported for diagnostics (the per-epoch training cost scales with the
    stored-entry count, which this tail exponent governs); not a fitted model.
    """
    vals = np.sort(x.mat.data)[::-1]
    if len(vals) < 2:
        return float("nan")
    ranks = np.arange(1, len(vals) + 1, dtype=np.float64)
    slope = np.polyfit(np.log(ranks), np.log(vals), 1)[0]
    return float(-slope)


def save_cooc(x: CoocMatrix, node_ids: Sequence[str], path: str | Path) -> None:
    """Text triplets "i j x_ij" under a "n nnz window x_min" header.

    A sidecar ``<path>.ids`` lists every node id in internal order so that
    nodes without positive entries survive a round-trip.
    """
    rows, cols, vals = x.entries()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{x.n} {x.nnz} {x.window} {float(x.x_min)!r}\n")
        for i, j, v in zip(rows, cols, vals):
            fh.write(f"{node_ids[i]} {node_ids[j]} {float(v)!r}\n")
    with open(f"{path}.ids", "w", encoding="utf-8") as fh:
        for name in node_ids:
            fh.write(name + "\n")


def load_cooc(path: str | Path) -> tuple[CoocMatrix, list[str]]:
    """Read a persisted matrix and its node-id order back."""
    ids_path = Path(f"{path}.ids")
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 4:
            raise ValueError(f"{path}: expected header 'n nnz window x_min'")
        n, nnz, window, x_min = int(header[0]), int(header[1]), int(header[2]), float(header[3])
        triplets = [line.split() for line in fh if line.strip()]
    if ids_path.exists():
        node_ids = ids_path.read_text(encoding="utf-8").splitlines()
    else:
        seen: dict[str, None] = {}
        for t in triplets:
            seen.setdefault(t[0])
            seen.setdefault(t[1])
        node_ids = list(seen)
    if len(node_ids) != n:
        raise ValueError(f"{path}: header says {n} nodes but {len(node_ids)} ids found")
    index = {v: i for i, v in enumerate(node_ids)}
    rows = np.fromiter((index[t[0]] for t in triplets), dtype=np.int64, count=len(triplets))
    cols = np.fromiter((index[t[1]] for t in triplets), dtype=np.int64, count=len(triplets))
    vals = np.fromiter((float(t[2]) for t in triplets), dtype=np.float64, count=len(triplets))
    mat = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    if mat.nnz != nnz:
        raise ValueError(f"{path}: header says {nnz} entries but {mat.nnz} parsed")
    return CoocMatrix(mat, window=window, x_min=x_min), node_ids

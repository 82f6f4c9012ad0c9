"""Text-aware variant: context vectors come from document word averages.

Instead of a free context vector per node, node j's context is the
count-weighted mean of the word vectors of its document, so node, word and
document representations are learned jointly. Nodes with empty documents
fall back to a free context vector as in the plain model.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numba import njit, prange, set_num_threads

from .cooc import CoocMatrix
from .training import (TrainConfig, _check_finite, _epoch_entries,
                       _positive_targets, _sq_residual_sum, effective_threads)

_TOKEN = re.compile(r"[a-z0-9]+")


class VocabularyError(ValueError):
    """No usable tokens survived vocabulary construction."""


@dataclass
class Vocabulary:
    """Dense word indexing with document frequencies."""

    words: list[str]
    doc_frequency: np.ndarray
    min_count: int

    def __post_init__(self):
        self.index = {w: i for i, w in enumerate(self.words)}

    @property
    def m(self) -> int:
        return len(self.words)


class DocCorpus:
    """Per-node bags of words in CSR form."""

    def __init__(self, indptr: np.ndarray, word_idx: np.ndarray, counts: np.ndarray):
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.word_idx = np.asarray(word_idx, dtype=np.int32)
        self.counts = np.asarray(counts, dtype=np.float64)
        self.totals = np.array([self.counts[self.indptr[j]:self.indptr[j + 1]].sum()
                                for j in range(self.n)])
        self.empty_nodes = np.flatnonzero(np.diff(self.indptr) == 0)

    @property
    def n(self) -> int:
        return len(self.indptr) - 1

    def bag(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.indptr[j], self.indptr[j + 1]
        return self.word_idx[lo:hi], self.counts[lo:hi]


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric runs."""
    return _TOKEN.findall(text.lower())


def build_vocab(documents: Sequence[str], min_count: int = 5) -> tuple[Vocabulary, DocCorpus]:
    """Build the vocabulary and per-node bags from one raw document per node.

    Words kept appear in at least ``min_count`` documents; the word index is
    lexicographic. Nodes whose bag ends up empty are flagged on the corpus,
    not dropped.
    """
    token_lists = [tokenize(doc) for doc in documents]
    doc_freq: dict[str, int] = {}
    for tokens in token_lists:
        for w in set(tokens):
            doc_freq[w] = doc_freq.get(w, 0) + 1
    kept = sorted(w for w, df in doc_freq.items() if df >= min_count)
    if not kept:
        raise VocabularyError(
            f"no word appears in at least {min_count} documents; corpus is unusable")
    vocab = Vocabulary(words=kept,
                       doc_frequency=np.array([doc_freq[w] for w in kept], dtype=np.int64),
                       min_count=min_count)

    indptr = np.zeros(len(documents) + 1, dtype=np.int64)
    words: list[int] = []
    counts: list[float] = []
    for j, tokens in enumerate(token_lists):
        bag: dict[int, int] = {}
        for t in tokens:
            wi = vocab.index.get(t)
            if wi is not None:
                bag[wi] = bag.get(wi, 0) + 1
        for wi in sorted(bag):
            words.append(wi)
            counts.append(float(bag[wi]))
        indptr[j + 1] = len(words)
    corpus = DocCorpus(indptr, np.array(words, dtype=np.int32),
                       np.array(counts, dtype=np.float64))
    return vocab, corpus


def doc_context_vector(bag: tuple[np.ndarray, np.ndarray], W: np.ndarray) -> np.ndarray:
    """Count-weighted mean of the word vectors in a bag."""
    words, counts = bag
    total = counts.sum()
    if total <= 0:
        raise ValueError("cannot average an empty bag of words")
    return (counts @ W[words]) / total


@dataclass
class TextEmbeddingModel:
    """Node target vectors U plus a word matrix W; V only backs empty-document nodes."""

    U: np.ndarray
    W: np.ndarray
    b_u: np.ndarray
    b_v: np.ndarray
    vocab: Vocabulary
    docs: DocCorpus
    node_ids: list[str]
    V: np.ndarray | None = None
    history: list[dict] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.U.shape[0]

    @property
    def dim(self) -> int:
        return self.U.shape[1]


@njit(cache=True)
def _adagrad_epoch_text(U, W, V, b_u, b_v, acc_u, acc_w, acc_v, acc_bu, acc_bv,
                        dptr, dwords, dcounts, dtotals,
                        rows, cols, targets, weights, lr):
    """In-order adaptive-gradient pass with document-averaged contexts.

    The residual gradient w.r.t. a word vector is the context gradient scaled
    by that word's share of the bag; empty-document nodes use their free
    context row of V instead.
    """
    dim = U.shape[1]
    ctx = np.empty(dim)
    u_pre = np.empty(dim)
    total = 0.0
    for e in range(rows.shape[0]):
        i = rows[e]
        j = cols[e]
        lo = dptr[j]
        hi = dptr[j + 1]
        if hi > lo:
            inv = 1.0 / dtotals[j]
            for d in range(dim):
                ctx[d] = 0.0
            for t in range(lo, hi):
                w = dwords[t]
                cw = dcounts[t]
                for d in range(dim):
                    ctx[d] += cw * W[w, d]
            for d in range(dim):
                ctx[d] *= inv
        else:
            for d in range(dim):
                ctx[d] = V[j, d]
        r = b_u[i] + b_v[j] - targets[e]
        for d in range(dim):
            r += U[i, d] * ctx[d]
        total += r * r
        g = 2.0 * r * weights[e]
        for d in range(dim):
            u_d = U[i, d]
            u_pre[d] = u_d
            gu = g * ctx[d]
            U[i, d] = u_d - lr * gu / np.sqrt(acc_u[i, d])
            acc_u[i, d] += gu * gu
        if hi > lo:
            inv = 1.0 / dtotals[j]
            for t in range(lo, hi):
                w = dwords[t]
                coef = g * (dcounts[t] * inv)
                for d in range(dim):
                    gw = coef * u_pre[d]
                    W[w, d] = W[w, d] - lr * gw / np.sqrt(acc_w[w, d])
                    acc_w[w, d] += gw * gw
        else:
            for d in range(dim):
                gv = g * u_pre[d]
                V[j, d] = V[j, d] - lr * gv / np.sqrt(acc_v[j, d])
                acc_v[j, d] += gv * gv
        b_u[i] -= lr * g / np.sqrt(acc_bu[i])
        acc_bu[i] += g * g
        b_v[j] -= lr * g / np.sqrt(acc_bv[j])
        acc_bv[j] += g * g
    return total


@njit(cache=True, parallel=True)
def _adagrad_epoch_text_hogwild(U, W, V, b_u, b_v, acc_u, acc_w, acc_v, acc_bu, acc_bv,
                                dptr, dwords, dcounts, dtotals,
                                rows, cols, targets, weights, lr):
    """Lock-free parallel variant of the text pass; lost updates tolerated."""
    dim = U.shape[1]
    total = 0.0
    for e in prange(rows.shape[0]):
        ctx = np.empty(dim)
        u_pre = np.empty(dim)
        i = rows[e]
        j = cols[e]
        lo = dptr[j]
        hi = dptr[j + 1]
        if hi > lo:
            inv = 1.0 / dtotals[j]
            for d in range(dim):
                ctx[d] = 0.0
            for t in range(lo, hi):
                w = dwords[t]
                cw = dcounts[t]
                for d in range(dim):
                    ctx[d] += cw * W[w, d]
            for d in range(dim):
                ctx[d] *= inv
        else:
            for d in range(dim):
                ctx[d] = V[j, d]
        r = b_u[i] + b_v[j] - targets[e]
        for d in range(dim):
            r += U[i, d] * ctx[d]
        total += r * r
        g = 2.0 * r * weights[e]
        for d in range(dim):
            u_d = U[i, d]
            u_pre[d] = u_d
            gu = g * ctx[d]
            U[i, d] = u_d - lr * gu / np.sqrt(acc_u[i, d])
            acc_u[i, d] += gu * gu
        if hi > lo:
            inv = 1.0 / dtotals[j]
            for t in range(lo, hi):
                w = dwords[t]
                coef = g * (dcounts[t] * inv)
                for d in range(dim):
                    gw = coef * u_pre[d]
                    W[w, d] = W[w, d] - lr * gw / np.sqrt(acc_w[w, d])
                    acc_w[w, d] += gw * gw
        else:
            for d in range(dim):
                gv = g * u_pre[d]
                V[j, d] = V[j, d] - lr * gv / np.sqrt(acc_v[j, d])
                acc_v[j, d] += gv * gv
        b_u[i] -= lr * g / np.sqrt(acc_bu[i])
        acc_bu[i] += g * g
        b_v[j] -= lr * g / np.sqrt(acc_bv[j])
        acc_bv[j] += g * g
    return total


def _text_positive_mse(U, W, V, b_u, b_v, docs, rows, cols, targets) -> float:
    if len(rows) == 0:
        return 0.0
    ctx = np.zeros((docs.n, U.shape[1]))
    for j in range(docs.n):
        lo, hi = docs.indptr[j], docs.indptr[j + 1]
        if hi > lo:
            ctx[j] = (docs.counts[lo:hi] @ W[docs.word_idx[lo:hi]]) / docs.totals[j]
        elif V is not None:
            ctx[j] = V[j]
    return _sq_residual_sum(U, ctx, b_u, b_v, rows, cols, targets) / len(rows)


def train_text(x: CoocMatrix, docs: DocCorpus, cfg: TrainConfig,
               vocab: Vocabulary | None = None,
               node_ids: Sequence[str] | None = None) -> TextEmbeddingModel:
    """Jointly learn node and word embeddings against the co-occurrence matrix.

    Entry selection, targets, and the adaptive-gradient rule are identical to
    the plain trainer; only the context side changes. When every document is
    a distinct single word this reduces exactly to the plain model with V
    rows tied to W rows.
    """
    cfg.validate()
    if cfg.objective != "gvnr":
        raise ValueError("the text extension supports the gvnr objective only")
    n = x.n
    if docs.n != n:
        raise ValueError(f"document corpus covers {docs.n} nodes, matrix has {n}")
    ids = list(node_ids) if node_ids is not None else [str(i) for i in range(n)]
    if vocab is None:
        m = int(docs.word_idx.max()) + 1 if len(docs.word_idx) else 0
        vocab = Vocabulary(words=[f"w{i}" for i in range(m)],
                           doc_frequency=np.zeros(m, dtype=np.int64), min_count=0)

    rng = np.random.default_rng(cfg.seed)
    scale = 0.5 / cfg.dim
    U = rng.uniform(-scale, scale, (n, cfg.dim))
    W = rng.uniform(-scale, scale, (vocab.m, cfg.dim))
    has_empty = len(docs.empty_nodes) > 0
    V = rng.uniform(-scale, scale, (n, cfg.dim)) if has_empty else np.zeros((n, cfg.dim))
    b_u = np.zeros(n)
    b_v = np.zeros(n)
    acc_u = np.ones_like(U)
    acc_w = np.ones_like(W)
    acc_v = np.ones_like(V)
    acc_bu = np.ones(n)
    acc_bv = np.ones(n)

    pos_rows, pos_cols, pos_vals = x.entries()
    pos_targets, pos_weights = _positive_targets(pos_vals, cfg)

    kernel = _adagrad_epoch_text
    threads = effective_threads(cfg.threads)
    if threads > 1:
        set_num_threads(threads)
        kernel = _adagrad_epoch_text_hogwild

    history: list[dict] = []
    for epoch in range(cfg.epochs):
        rows, cols, targets, weights = _epoch_entries(
            x, cfg, rng, pos_rows, pos_cols, pos_targets, pos_weights)
        sq_sum = kernel(
            U, W, V, b_u, b_v, acc_u, acc_w, acc_v, acc_bu, acc_bv,
            docs.indptr, docs.word_idx, docs.counts, docs.totals,
            rows, cols, targets, weights, cfg.learning_rate)
        _check_finite(epoch, cfg, U, W, V, b_u, b_v)
        history.append({
            "epoch": epoch,
            "updates": int(len(rows)),
            "mean_sq_residual": sq_sum / len(rows) if len(rows) else 0.0,
            "positive_mse": _text_positive_mse(U, W, V if has_empty else None,
                                               b_u, b_v, docs,
                                               pos_rows, pos_cols, pos_targets),
        })

    return TextEmbeddingModel(U=U, W=W, b_u=b_u, b_v=b_v, vocab=vocab, docs=docs,
                              node_ids=ids, V=V if has_empty else None, history=history)


def document_representation(model: TextEmbeddingModel, j: int) -> np.ndarray:
    """Content vector of node j: the word average its training context used."""
    words, counts = model.docs.bag(j)
    if len(words) == 0:
        raise ValueError(f"node {model.node_ids[j]!r} has an empty document")
    return doc_context_vector((words, counts), model.W)


def text_pair_residual(model: TextEmbeddingModel, i: int, j: int,
                       value: float, shift: float) -> float:
    """Signed reconstruction error with the document-averaged context."""
    words, _ = model.docs.bag(j)
    if len(words):
        ctx = document_representation(model, j)
    elif model.V is not None:
        ctx = model.V[j]
    else:
        raise ValueError(f"node {model.node_ids[j]!r} has no context")
    return float(model.U[i] @ ctx + model.b_u[i] + model.b_v[j] - math.log(shift + value))


def read_documents(source, index_of: dict[str, int], n: int) -> list[str]:
    """Read "external_id<TAB>raw text" lines into node-aligned raw documents."""
    docs = [""] * n
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, "r", encoding="utf-8") as fh:
            return read_documents(fh, index_of, n)
    for line_no, raw in enumerate(source, start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        if "\t" not in line:
            raise ValueError(f"line {line_no}: expected 'id<TAB>text'")
        name, text = line.split("\t", 1)
        idx = index_of.get(name)
        if idx is not None:
            docs[idx] = text
    return docs

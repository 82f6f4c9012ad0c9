"""Embedding training by stochastic factorization of the co-occurrence matrix.

Per epoch, every positive entry is visited once together with a freshly
resampled set of zero entries (each zero cell of row i is included
independently with a rate derived from the row's positive proportion). Each
visit takes one adaptive-gradient step on the squared residual between the
bilinear predictor and the shifted-log target. A weighted-least-squares
variant that visits positive entries only is available as the "glove"
objective.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from numba import config as _numba_config
from numba import njit, prange, set_num_threads

from .cooc import CoocMatrix


def effective_threads(requested: int) -> int:
    """Clamp a thread request to what the runtime supports (>= 1)."""
    return max(1, min(requested, _numba_config.NUMBA_NUM_THREADS))


OBJECTIVES = ("gvnr", "glove")


class TrainingDivergedError(RuntimeError):
    """Training produced non-finite parameters."""

    def __init__(self, epoch: int, learning_rate: float):
        super().__init__(
            f"non-finite parameters detected after epoch {epoch} "
            f"(learning_rate={learning_rate}); lower the learning rate")
        self.epoch = epoch
        self.learning_rate = learning_rate


@dataclass
class TrainConfig:
    """Hyper-parameters of the factorization.

    ``shift`` is the additive constant inside the logarithm (keeps the target
    finite at zero entries), ``zero_ratio`` scales how many zero entries are
    sampled per row relative to its positive count, and ``x_max``/
    ``glove_exponent`` parameterize the weighting curve of the glove
    objective.
    """

    dim: int = 80
    shift: float = 1.0
    zero_ratio: float = 1.0
    epochs: int = 10
    learning_rate: float = 0.05
    seed: int = 1
    objective: str = "gvnr"
    x_max: float = 10.0
    glove_exponent: float = 0.75
    threads: int = 1

    def validate(self) -> None:
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if not (0.0 < self.shift <= 1.0):
            raise ValueError(f"shift must be in (0, 1], got {self.shift}")
        if self.zero_ratio < 0:
            raise ValueError(f"zero_ratio must be >= 0, got {self.zero_ratio}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}, got {self.objective!r}")
        if self.x_max <= 0:
            raise ValueError(f"x_max must be positive, got {self.x_max}")
        if self.threads < 1:
            raise ValueError(f"threads must be >= 1, got {self.threads}")


@dataclass
class EmbeddingModel:
    """Target vectors U, context vectors V, and the two bias vectors."""

    U: np.ndarray
    V: np.ndarray
    b_u: np.ndarray
    b_v: np.ndarray
    node_ids: list[str]
    history: list[dict] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.U.shape[0]

    @property
    def dim(self) -> int:
        return self.U.shape[1]


def zero_sample_rate(p_positive: float, zero_ratio: float) -> float:
    """Per-cell inclusion probability for the zero entries of a row.

    Equals zero_ratio * p/(1-p) (so a row expects zero_ratio times its
    positive count in sampled zeros) and saturates at 1 once the row is
    dense enough that p > 1/(zero_ratio+1).
    """
    if not 0.0 <= p_positive <= 1.0:
        raise ValueError(f"p_positive must be in [0, 1], got {p_positive}")
    if zero_ratio < 0:
        raise ValueError(f"zero_ratio must be >= 0, got {zero_ratio}")
    if p_positive >= 1.0:
        return 1.0
    if p_positive <= 1.0 / (zero_ratio + 1.0):
        return min(1.0, zero_ratio * p_positive / (1.0 - p_positive))
    return 1.0


def sample_zero_entries(x: CoocMatrix, row: int, zero_ratio: float,
                        rng: np.random.Generator) -> np.ndarray:
    """Sample zero columns of ``row``, each included independently with the row rate.

    Implemented as a binomial draw of the subset size followed by a uniform
    distinct-column rejection sweep, which is distributionally identical to
    per-cell Bernoulli draws but costs O(sample size) instead of O(n).
    """
    cols, _ = x.row(row)
    n = x.n
    n_i = len(cols)
    alpha = zero_sample_rate(n_i / n, zero_ratio)
    n_zero = n - n_i
    if n_zero == 0 or alpha <= 0.0:
        return np.empty(0, dtype=np.int32)
    m = int(n_zero) if alpha >= 1.0 else int(rng.binomial(n_zero, alpha))
    if m == 0:
        return np.empty(0, dtype=np.int32)
    if 3 * m >= n_zero:
        zeros = np.setdiff1d(np.arange(n, dtype=np.int64), cols, assume_unique=True)
        if m < n_zero:
            zeros = zeros[rng.choice(n_zero, size=m, replace=False)]
        return np.sort(zeros).astype(np.int32)
    acc = np.empty(0, dtype=np.int64)
    while len(acc) < m:
        batch = rng.integers(0, n, size=int((m - len(acc)) * 1.3) + 16)
        if n_i:
            loc = np.minimum(np.searchsorted(cols, batch), n_i - 1)
            batch = batch[cols[loc] != batch]
        acc = np.unique(np.concatenate([acc, batch]))
    if len(acc) > m:
        acc = acc[rng.choice(len(acc), size=m, replace=False)]
    return np.sort(acc).astype(np.int32)


def pair_residual(model: EmbeddingModel, i: int, j: int, value: float, shift: float) -> float:
    """Signed reconstruction error u_i . v_j + b_u[i] + b_v[j] - log(shift + value)."""
    return float(model.U[i] @ model.V[j] + model.b_u[i] + model.b_v[j]
                 - math.log(shift + value))


def glove_weight(value: float, x_max: float, exponent: float = 0.75) -> float:
    """Weighting curve of the glove objective: (x/x_max)^exponent, capped at 1."""
    if value < 0:
        raise ValueError(f"co-occurrence value must be >= 0, got {value}")
    if value >= x_max:
        return 1.0
    return (value / x_max) ** exponent


@njit(cache=True)
def _adagrad_epoch(U, V, b_u, b_v, acc_u, acc_v, acc_bu, acc_bv,
                   rows, cols, targets, weights, lr):
    """One in-order pass of per-parameter adaptive gradient steps.

    Accumulators start at 1.0 and each step divides by the pre-update
    accumulator, so the first step is a plain gradient step of size lr.
    Returns the sum of squared residuals measured at visit time.
    """
    dim = U.shape[1]
    total = 0.0
    for e in range(rows.shape[0]):
        i = rows[e]
        j = cols[e]
        r = b_u[i] + b_v[j] - targets[e]
        for d in range(dim):
            r += U[i, d] * V[j, d]
        total += r * r
        g = 2.0 * r * weights[e]
        for d in range(dim):
            u_d = U[i, d]
            v_d = V[j, d]
            gu = g * v_d
            gv = g * u_d
            U[i, d] = u_d - lr * gu / np.sqrt(acc_u[i, d])
            acc_u[i, d] += gu * gu
            V[j, d] = v_d - lr * gv / np.sqrt(acc_v[j, d])
            acc_v[j, d] += gv * gv
        b_u[i] -= lr * g / np.sqrt(acc_bu[i])
        acc_bu[i] += g * g
        b_v[j] -= lr * g / np.sqrt(acc_bv[j])
        acc_bv[j] += g * g
    return total


@njit(cache=True, parallel=True)
def _adagrad_epoch_hogwild(U, V, b_u, b_v, acc_u, acc_v, acc_bu, acc_bv,
                           rows, cols, targets, weights, lr):
    """Lock-free parallel variant; concurrent updates may be lost (tolerated)."""
    dim = U.shape[1]
    total = 0.0
    for e in prange(rows.shape[0]):
        i = rows[e]
        j = cols[e]
        r = b_u[i] + b_v[j] - targets[e]
        for d in range(dim):
            r += U[i, d] * V[j, d]
        total += r * r
        g = 2.0 * r * weights[e]
        for d in range(dim):
            u_d = U[i, d]
            v_d = V[j, d]
            gu = g * v_d
            gv = g * u_d
            U[i, d] = u_d - lr * gu / np.sqrt(acc_u[i, d])
            acc_u[i, d] += gu * gu
            V[j, d] = v_d - lr * gv / np.sqrt(acc_v[j, d])
            acc_v[j, d] += gv * gv
        b_u[i] -= lr * g / np.sqrt(acc_bu[i])
        acc_bu[i] += g * g
        b_v[j] -= lr * g / np.sqrt(acc_bv[j])
        acc_bv[j] += g * g
    return total


def _positive_targets(vals: np.ndarray, cfg: TrainConfig) -> tuple[np.ndarray, np.ndarray]:
    """Log targets and per-entry weights for the positive entries."""
    if cfg.objective == "glove":
        targets = np.log(vals)
        weights = np.where(vals >= cfg.x_max, 1.0, (vals / cfg.x_max) ** cfg.glove_exponent)
    else:
        targets = np.log(cfg.shift + vals)
        weights = np.ones(len(vals))
    return targets, weights


_GOLD = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


@njit(cache=True)
def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def _sample_zero_columns_bulk(indptr, indices, n, quotas, seed):
    """Draw ``quotas[i]`` distinct zero columns per row, row-major flat output.

    Same distribution as sample_zero_entries (uniform subset of the row's zero
    columns): rejection sweep for sparse rows, a sequential selection scan
    when the quota is a large fraction of the zero count. Randomness is a
    counter hash of (seed, row), so output is a pure function of the inputs.
    """
    total = 0
    for i in range(quotas.shape[0]):
        total += quotas[i]
    out = np.empty(total, np.int32)
    scratch = np.zeros(n, np.uint8)
    pos = 0
    for i in range(quotas.shape[0]):
        m = quotas[i]
        if m == 0:
            continue
        lo = indptr[i]
        hi = indptr[i + 1]
        for e in range(lo, hi):
            scratch[indices[e]] = 1
        n_zero = n - (hi - lo)
        state = _mix64(np.uint64(seed) ^ (np.uint64(i + 1) * _GOLD))
        row_start = pos
        if 3 * m >= n_zero:
            need = m
            left = n_zero
            for col in range(n):
                if scratch[col] == 1:
                    continue
                state = state + _GOLD
                u = (_mix64(state) >> np.uint64(11)) * (2.0 ** -53)
                if u * left < need:
                    out[pos] = col
                    pos += 1
                    need -= 1
                    if need == 0:
                        break
                left -= 1
        else:
            got = 0
            while got < m:
                state = state + _GOLD
                u = (_mix64(state) >> np.uint64(11)) * (2.0 ** -53)
                col = int(u * n)
                if scratch[col] == 0:
                    scratch[col] = 2
                    out[pos] = col
                    pos += 1
                    got += 1
        for e in range(lo, hi):
            scratch[indices[e]] = 0
        for t in range(row_start, pos):
            scratch[out[t]] = 0
    return out


def _zero_quotas(x: CoocMatrix, zero_ratio: float, rng: np.random.Generator) -> np.ndarray:
    """Per-row Binomial(zero count, alpha_i) subset sizes, vectorized."""
    n = x.n
    n_pos = x.row_positive_count
    p = n_pos / n
    with np.errstate(divide="ignore", invalid="ignore"):
        odds = zero_ratio * p / (1.0 - p)
    alpha = np.where(p >= 1.0, 1.0,
                     np.where(p <= 1.0 / (zero_ratio + 1.0),
                              np.minimum(1.0, odds), 1.0))
    n_zero = (n - n_pos).astype(np.int64)
    return rng.binomial(n_zero, np.clip(alpha, 0.0, 1.0)).astype(np.int64)


def _epoch_entries(x: CoocMatrix, cfg: TrainConfig, rng: np.random.Generator,
                   pos_rows: np.ndarray, pos_cols: np.ndarray,
                   pos_targets: np.ndarray, pos_weights: np.ndarray):
    """Assemble and shuffle this epoch's visit list (positives + fresh zeros)."""
    if cfg.objective == "gvnr" and cfg.zero_ratio > 0:
        quotas = _zero_quotas(x, cfg.zero_ratio, rng)
        epoch_seed = int(rng.integers(0, np.iinfo(np.int64).max))
        z_cols = _sample_zero_columns_bulk(x.mat.indptr, x.mat.indices, x.n,
                                           quotas, epoch_seed)
        z_rows = np.repeat(np.arange(x.n, dtype=np.int32), quotas)
        zero_target = math.log(cfg.shift)
        rows = np.concatenate([pos_rows, z_rows])
        cols = np.concatenate([pos_cols, z_cols])
        targets = np.concatenate([pos_targets, np.full(len(z_rows), zero_target)])
        weights = np.concatenate([pos_weights, np.ones(len(z_rows))])
    else:
        rows, cols, targets, weights = pos_rows, pos_cols, pos_targets, pos_weights
    perm = rng.permutation(len(rows))
    return rows[perm], cols[perm], targets[perm], weights[perm]


@njit(cache=True)
def _sq_residual_sum(U, V, b_u, b_v, rows, cols, targets):
    dim = U.shape[1]
    total = 0.0
    for e in range(rows.shape[0]):
        i = rows[e]
        j = cols[e]
        r = b_u[i] + b_v[j] - targets[e]
        for d in range(dim):
            r += U[i, d] * V[j, d]
        total += r * r
    return total


def _positive_mse(U, V, b_u, b_v, rows, cols, targets) -> float:
    if len(rows) == 0:
        return 0.0
    return _sq_residual_sum(U, V, b_u, b_v, rows, cols, targets) / len(rows)


def _check_finite(epoch: int, cfg: TrainConfig, *arrays: np.ndarray) -> None:
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise TrainingDivergedError(epoch, cfg.learning_rate)


def train(x: CoocMatrix, cfg: TrainConfig,
          node_ids: Sequence[str] | None = None) -> EmbeddingModel:
    """Learn node embeddings from a frozen co-occurrence matrix.

    Deterministic for a fixed config when ``cfg.threads == 1``; with more
    threads the epoch pass runs lock-free in parallel and individual updates
    may be lost. Per-epoch statistics (visit count, mean squared residual at
    visit time, post-epoch squared residual over positive entries) are kept
    on the returned model's history.
    """
    cfg.validate()
    n = x.n
    ids = list(node_ids) if node_ids is not None else [str(i) for i in range(n)]
    if len(ids) != n:
        raise ValueError(f"got {len(ids)} node ids for a {n}-node matrix")

    rng = np.random.default_rng(cfg.seed)
    scale = 0.5 / cfg.dim
    U = rng.uniform(-scale, scale, (n, cfg.dim))
    V = rng.uniform(-scale, scale, (n, cfg.dim))
    b_u = np.zeros(n)
    b_v = np.zeros(n)
    acc_u = np.ones_like(U)
    acc_v = np.ones_like(V)
    acc_bu = np.ones(n)
    acc_bv = np.ones(n)

    pos_rows, pos_cols, pos_vals = x.entries()
    pos_targets, pos_weights = _positive_targets(pos_vals, cfg)

    kernel = _adagrad_epoch
    threads = effective_threads(cfg.threads)
    if threads > 1:
        set_num_threads(threads)
        kernel = _adagrad_epoch_hogwild

    history: list[dict] = []
    for epoch in range(cfg.epochs):
        rows, cols, targets, weights = _epoch_entries(
            x, cfg, rng, pos_rows, pos_cols, pos_targets, pos_weights)
        sq_sum = kernel(U, V, b_u, b_v, acc_u, acc_v, acc_bu, acc_bv,
                        rows, cols, targets, weights, cfg.learning_rate)
        _check_finite(epoch, cfg, U, V, b_u, b_v)
        history.append({
            "epoch": epoch,
            "updates": int(len(rows)),
            "mean_sq_residual": sq_sum / len(rows) if len(rows) else 0.0,
            "positive_mse": _positive_mse(U, V, b_u, b_v, pos_rows, pos_cols, pos_targets),
        })

    return EmbeddingModel(U=U, V=V, b_u=b_u, b_v=b_v, node_ids=ids, history=history)


def node_representation(model: EmbeddingModel, i: int, mode: str = "target") -> np.ndarray:
    """Feature vector of node i: the target vector, or target+context with mode="sum"."""
    if mode == "target":
        return model.U[i]
    if mode == "sum":
        return model.U[i] + model.V[i]
    raise ValueError(f"mode must be 'target' or 'sum', got {mode!r}")


def save_vectors(names: Sequence[str], matrix: np.ndarray, path: str | Path) -> None:
    """Text embedding format: header "n d", then one "name f1 ... fd" line per row."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{matrix.shape[0]} {matrix.shape[1]}\n")
        for name, row in zip(names, matrix):
            fh.write(name + " " + " ".join(repr(float(v)) for v in row) + "\n")


def load_vectors(path: str | Path) -> tuple[list[str], np.ndarray]:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: expected header 'n d'")
        n, dim = int(header[0]), int(header[1])
        names: list[str] = []
        matrix = np.zeros((n, dim))
        for row, line in enumerate(fh):
            fields = line.split()
            if not fields:
                continue
            if len(fields) != dim + 1:
                raise ValueError(f"{path}: row {row} has {len(fields) - 1} values, expected {dim}")
            names.append(fields[0])
            matrix[row] = [float(v) for v in fields[1:]]
    if len(names) != n:
        raise ValueError(f"{path}: header says {n} rows but {len(names)} found")
    return names, matrix


def save_embeddings(model: EmbeddingModel, path: str | Path) -> None:
    """Persist target vectors plus a "<path>.biases" sidecar of "id b_u b_v" lines."""
    save_vectors(model.node_ids, model.U, path)
    with open(f"{path}.biases", "w", encoding="utf-8") as fh:
        for name, bu, bv in zip(model.node_ids, model.b_u, model.b_v):
            fh.write(f"{name} {float(bu)!r} {float(bv)!r}\n")


def load_embeddings(path: str | Path) -> tuple[list[str], np.ndarray]:
    return load_vectors(path)

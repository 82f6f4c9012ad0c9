"""Node-classification evaluation and embedding-space queries.

The protocol: freeze the node features, fit one unregularized binary
logistic regression per label on a random train split, score the rest, and
repeat over training ratios and repetitions. Multi-class data is scored by
overall accuracy, multi-label data by micro-averaged F1 under the
known-label-count prediction rule.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit


class MissingClassWarning(UserWarning):
    """A label had no positive example in a training split."""


@dataclass
class LabeledNodes:
    """Per-node label-id lists aligned with the feature rows; empty = unlabeled."""

    labels: list[list[int]]
    label_names: list[str]
    multi_label: bool

    @property
    def label_count(self) -> int:
        return len(self.label_names)

    @property
    def n(self) -> int:
        return len(self.labels)

    def labeled_indices(self) -> np.ndarray:
        return np.array([i for i, ls in enumerate(self.labels) if ls], dtype=np.int64)

    def subset(self, idx: Iterable[int]) -> "LabeledNodes":
        return LabeledNodes(labels=[self.labels[i] for i in idx],
                            label_names=self.label_names,
                            multi_label=self.multi_label)


def read_label_file(source) -> dict[str, list[str]]:
    """Parse "external_id label[,label...]" lines."""
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, "r", encoding="utf-8") as fh:
            return read_label_file(fh)
    by_id: dict[str, list[str]] = {}
    for line_no, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 2:
            raise ValueError(f"line {line_no}: expected 'external_id label[,label...]'")
        by_id[fields[0]] = [l for l in fields[1].split(",") if l]
    return by_id


def build_labeled_nodes(by_id: dict[str, list[str]], node_order: Sequence[str]) -> LabeledNodes:
    """Align a label map with a node ordering; label ids are lexicographic."""
    names = sorted({l for ls in by_id.values() for l in ls})
    index = {l: i for i, l in enumerate(names)}
    labels = [sorted(index[l] for l in by_id.get(node, [])) for node in node_order]
    multi = any(len(ls) > 1 for ls in labels)
    known = set(node_order)
    missing = sum(1 for node in by_id if node not in known)
    if missing:
        warnings.warn(f"{missing} labeled ids are absent from the node set and were ignored")
    return LabeledNodes(labels=labels, label_names=names, multi_label=multi)


def _nll_and_grad(w: np.ndarray, X1: np.ndarray, y: np.ndarray):
    """Mean negative log-likelihood of binary logistic regression and its gradient."""
    z = X1 @ w
    nll = float(np.mean(np.logaddexp(0.0, z) - y * z))
    grad = X1.T @ (expit(z) - y) / len(y)
    return nll, grad


def fit_binary_logreg(features: np.ndarray, y: np.ndarray,
                      gtol: float = 1e-6, max_iter: int = 500) -> np.ndarray:
    """Unregularized maximum-likelihood fit; returns d weights plus a bias.

    Quasi-Newton (L-BFGS) on the convex mean NLL, run to gradient-norm
    tolerance or the iteration cap (separable data has no finite optimum, so
    the cap is load-bearing there).
    """
    X1 = np.hstack([features, np.ones((len(features), 1))])
    res = minimize(_nll_and_grad, np.zeros(X1.shape[1]), args=(X1, y.astype(np.float64)),
                   jac=True, method="L-BFGS-B",
                   options={"maxiter": max_iter, "gtol": gtol, "ftol": 1e-15})
    return res.x


def fit_logreg_ovr(features: np.ndarray, labels: LabeledNodes,
                   train_idx: np.ndarray) -> np.ndarray:
    """One binary logistic regression per label; rows are (d weights, bias).

    A label absent from the training split gets a constant minus-infinity
    score (fail-soft, with a warning) so it can never win a ranking.
    """
    if len(train_idx) == 0:
        raise ValueError("training split is empty")
    X = features[train_idx]
    weights = np.zeros((labels.label_count, features.shape[1] + 1))
    for lab in range(labels.label_count):
        y = np.array([lab in labels.labels[i] for i in train_idx], dtype=np.float64)
        if not y.any():
            warnings.warn(
                f"label {labels.label_names[lab]!r} has no training example; "
                "its classifier scores constant negative", MissingClassWarning)
            weights[lab, -1] = -np.inf
            continue
        weights[lab] = fit_binary_logreg(X, y)
    return weights


def decision_scores(weights: np.ndarray, features: np.ndarray) -> np.ndarray:
    return features @ weights[:, :-1].T + weights[:, -1]


def predict(weights: np.ndarray, features: np.ndarray,
            labels_meta: LabeledNodes) -> list[list[int]]:
    """Predicted label set per node.

    Multi-class: the argmax label. Multi-label: the top-k scoring labels
    where k is the node's true label count. Ties break toward the lowest
    label id, so predictions are deterministic.
    """
    scores = decision_scores(weights, features)
    out: list[list[int]] = []
    label_ids = np.arange(scores.shape[1])
    for row, true in zip(scores, labels_meta.labels):
        k = 1 if not labels_meta.multi_label else len(true)
        order = np.lexsort((label_ids, -row))
        out.append(sorted(int(l) for l in order[:k]))
    return out


def accuracy(predicted: list[list[int]], true: list[list[int]]) -> float:
    hits = sum(1 for p, t in zip(predicted, true) if p == sorted(t))
    return hits / len(true)


def micro_f1(predicted: list[list[int]], true: list[list[int]]) -> float:
    tp = fp = fn = 0
    for p, t in zip(predicted, true):
        ps, ts = set(p), set(t)
        tp += len(ps & ts)
        fp += len(ps - ts)
        fn += len(ts - ps)
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def macro_f1(predicted: list[list[int]], true: list[list[int]], label_count: int) -> float:
    scores = []
    for lab in range(label_count):
        tp = sum(1 for p, t in zip(predicted, true) if lab in p and lab in t)
        fp = sum(1 for p, t in zip(predicted, true) if lab in p and lab not in t)
        fn = sum(1 for p, t in zip(predicted, true) if lab not in p and lab in t)
        denom = 2 * tp + fp + fn
        scores.append(2 * tp / denom if denom else 0.0)
    return float(np.mean(scores))


def stratified_split(labels: LabeledNodes, ratio: float,
                     rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Random train/test split over labeled nodes.

    Single-label data is stratified per class (each class keeps at least one
    training node); multi-label data has no clean stratification and uses a
    plain shuffle.
    """
    idx = labels.labeled_indices()
    if labels.multi_label:
        perm = idx[rng.permutation(len(idx))]
        n_train = max(1, int(round(ratio * len(idx))))
        return np.sort(perm[:n_train]), np.sort(perm[n_train:])
    train: list[int] = []
    test: list[int] = []
    by_class: dict[int, list[int]] = {}
    for i in idx:
        by_class.setdefault(labels.labels[i][0], []).append(int(i))
    for lab in sorted(by_class):
        members = np.array(by_class[lab])
        members = members[rng.permutation(len(members))]
        n_train = max(1, int(round(ratio * len(members))))
        train.extend(members[:n_train])
        test.extend(members[n_train:])
    return np.sort(np.array(train, dtype=np.int64)), np.sort(np.array(test, dtype=np.int64))


@dataclass
class EvalReport:
    """Mean and standard deviation of the score at each training ratio."""

    ratios: list[float]
    means: list[float]
    stds: list[float]
    metric: str
    repetitions: int
    seed: int
    secondary: dict = field(default_factory=dict)

    def rows(self) -> list[tuple[float, float, float]]:
        return list(zip(self.ratios, self.means, self.stds))

    def format_table(self) -> str:
        header = "% train  " + "".join(f"{100 * r:>8.0f}%" for r in self.ratios)
        means = f"{self.metric:<9}" + "".join(f"{100 * m:>9.1f}" for m in self.means)
        stds = f"{'std':<9}" + "".join(f"{100 * s:>9.1f}" for s in self.stds)
        return "\n".join([header, means, stds])


def evaluate(features: np.ndarray, labels: LabeledNodes, ratios: Sequence[float],
             repetitions: int = 10, seed: int = 0) -> EvalReport:
    """Cross-validated classification quality of the features across split ratios."""
    ratios = list(ratios)
    if not ratios or any(not (0.0 < r < 1.0) for r in ratios):
        raise ValueError(f"ratios must lie strictly inside (0, 1), got {ratios}")
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    metric = "micro_f1" if labels.multi_label else "accuracy"
    means, stds = [], []
    macro_means, macro_stds = [], []
    for r_idx, ratio in enumerate(ratios):
        scores, macros = [], []
        for rep in range(repetitions):
            rng = np.random.default_rng(
                np.random.SeedSequence(entropy=seed, spawn_key=(r_idx, rep)))
            train_idx, test_idx = stratified_split(labels, ratio, rng)
            if len(test_idx) == 0:
                raise ValueError(f"ratio {ratio} leaves no test nodes")
            weights = fit_logreg_ovr(features, labels, train_idx)
            test_meta = labels.subset(test_idx)
            predicted = predict(weights, features[test_idx], test_meta)
            truth = test_meta.labels
            if labels.multi_label:
                scores.append(micro_f1(predicted, truth))
                macros.append(macro_f1(predicted, truth, labels.label_count))
            else:
                scores.append(accuracy(predicted, truth))
        means.append(float(np.mean(scores)))
        stds.append(float(np.std(scores)))
        if labels.multi_label:
            macro_means.append(float(np.mean(macros)))
            macro_stds.append(float(np.std(macros)))
    secondary = {}
    if labels.multi_label:
        secondary["macro_f1"] = (macro_means, macro_stds)
    return EvalReport(ratios=ratios, means=means, stds=stds, metric=metric,
                      repetitions=repetitions, seed=seed, secondary=secondary)


def nearest_words(query: np.ndarray, word_matrix: np.ndarray, top_n: int,
                  exclude: Iterable = (), words: Sequence[str] | None = None) -> list:
    """Rank words by cosine similarity to the query vector.

    Ties (including the all-orthogonal case) break toward the lowest word
    id. ``exclude`` holds tokens when ``words`` is given, indices otherwise.
    Returns (word, similarity) pairs, tokens if ``words`` is given.
    """
    if top_n < 1:
        raise ValueError("top_n must be >= 1")
    q = np.asarray(query, dtype=np.float64)
    q_norm = np.linalg.norm(q)
    if q_norm == 0:
        raise ValueError("query vector has zero norm")
    norms = np.linalg.norm(word_matrix, axis=1)
    sims = np.divide(word_matrix @ q, norms * q_norm,
                     out=np.zeros(len(word_matrix)), where=norms > 0)
    exclude = set(exclude)
    if words is not None:
        keep = np.array([w not in exclude for w in words], dtype=bool)
    else:
        keep = np.ones(len(word_matrix), dtype=bool)
        for i in exclude:
            keep[i] = False
    ids = np.flatnonzero(keep)
    order = ids[np.lexsort((ids, -sims[ids]))][:top_n]
    if words is not None:
        return [(words[i], float(sims[i])) for i in order]
    return [(int(i), float(sims[i])) for i in order]

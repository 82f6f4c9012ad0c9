"""End-to-end orchestration: walks -> co-occurrence -> training -> evaluation.

Also provides the hyper-parameter sweep (which reuses the walk corpus, and
the unthresholded matrix where possible, across swept values) and the
two-list keyword report for a text model.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .cooc import CoocMatrix, apply_threshold, build_cooc
from .evaluation import EvalReport, build_labeled_nodes, evaluate, nearest_words
from .graph import Graph
from .text import TextEmbeddingModel, build_vocab, doc_context_vector, train_text
from .training import EmbeddingModel, TrainConfig, node_representation, train
from .walks import WalkCorpus, generate_walks

# CLI flag spellings for swept hyper-parameters
SWEEP_PARAMETERS = {
    "x_min": "x_min",
    "k": "zero_ratio",
    "zero_ratio": "zero_ratio",
    "c": "shift",
    "shift": "shift",
    "l": "window",
    "window": "window",
}


@dataclass
class PipelineConfig:
    """Every knob of the full pipeline, defaulting to the reference settings."""

    walks_per_node: int = 80
    walk_length: int = 40
    window: int = 5
    x_min: float = 1.0
    dim: int = 80
    shift: float = 1.0
    zero_ratio: float = 1.0
    epochs: int = 10
    learning_rate: float = 0.05
    objective: str = "gvnr"
    x_max: float = 10.0
    glove_exponent: float = 0.75
    min_count: int = 5
    representation: str = "target"
    ratios: tuple = (0.1, 0.2, 0.3, 0.4, 0.5)
    repetitions: int = 10
    seed: int = 1
    threads: int = 1

    def train_config(self) -> TrainConfig:
        return TrainConfig(dim=self.dim, shift=self.shift, zero_ratio=self.zero_ratio,
                           epochs=self.epochs, learning_rate=self.learning_rate,
                           seed=self.seed, objective=self.objective, x_max=self.x_max,
                           glove_exponent=self.glove_exponent, threads=self.threads)

    def validate(self) -> None:
        if self.x_min < 0:
            raise ValueError(f"x_min must be >= 0, got {self.x_min}")
        if self.min_count < 1:
            raise ValueError(f"min_count must be >= 1, got {self.min_count}")
        self.train_config().validate()


def build_matrix(graph: Graph, cfg: PipelineConfig,
                 corpus: WalkCorpus | None = None) -> tuple[WalkCorpus, CoocMatrix]:
    """Generate (or reuse) the walk corpus and build the thresholded matrix."""
    if corpus is None:
        corpus = generate_walks(graph, cfg.walks_per_node, cfg.walk_length, cfg.seed)
    x = build_cooc(corpus, cfg.window, n=graph.n)
    return corpus, apply_threshold(x, cfg.x_min)


def embed_graph(graph: Graph, cfg: PipelineConfig,
                documents: Sequence[str] | None = None,
                x: CoocMatrix | None = None,
                corpus: WalkCorpus | None = None):
    """Train a plain or text model over the graph; returns the fitted model."""
    cfg.validate()
    if x is None:
        _, x = build_matrix(graph, cfg, corpus=corpus)
    if documents is None:
        return train(x, cfg.train_config(), node_ids=graph.node_ids)
    vocab, docs = build_vocab(documents, min_count=cfg.min_count)
    return train_text(x, docs, cfg.train_config(), vocab=vocab, node_ids=graph.node_ids)


def model_features(model: EmbeddingModel | TextEmbeddingModel,
                   representation: str = "target") -> np.ndarray:
    if isinstance(model, TextEmbeddingModel) or representation == "target":
        return model.U
    return np.stack([node_representation(model, i, mode=representation)
                     for i in range(model.n)])


def evaluate_model(model, labels_by_id: dict[str, list[str]],
                   cfg: PipelineConfig) -> EvalReport:
    labels = build_labeled_nodes(labels_by_id, model.node_ids)
    features = model_features(model, cfg.representation)
    return evaluate(features, labels, cfg.ratios,
                    repetitions=cfg.repetitions, seed=cfg.seed)


def run_pipeline(graph: Graph, labels_by_id: dict[str, list[str]], cfg: PipelineConfig,
                 documents: Sequence[str] | None = None):
    """Full run; returns (model, report)."""
    model = embed_graph(graph, cfg, documents=documents)
    return model, evaluate_model(model, labels_by_id, cfg)


def sweep(graph: Graph, labels_by_id: dict[str, list[str]], base: PipelineConfig,
          parameter: str, values: Sequence[float],
          documents: Sequence[str] | None = None) -> list[dict]:
    """Scores across values of one hyper-parameter, reusing shared stages.

    The walk corpus is shared by every swept value; the unthresholded matrix
    is additionally shared unless the window itself is swept. Emits one row
    per (value, ratio): {parameter, value, ratio, mean, std}.
    """
    field_name = SWEEP_PARAMETERS.get(parameter)
    if field_name is None:
        raise ValueError(
            f"unknown sweep parameter {parameter!r}; expected one of "
            f"{sorted(set(SWEEP_PARAMETERS))}")
    base.validate()
    corpus = generate_walks(graph, base.walks_per_node, base.walk_length, base.seed)
    full: CoocMatrix | None = None
    if field_name != "window":
        full = build_cooc(corpus, base.window, n=graph.n)
    rows: list[dict] = []
    for value in values:
        cfg = replace(base, **{field_name: int(value) if field_name == "window" else value})
        cfg.validate()
        if field_name == "window":
            x = apply_threshold(build_cooc(corpus, cfg.window, n=graph.n), cfg.x_min)
        else:
            x = apply_threshold(full, cfg.x_min)
        model = embed_graph(graph, cfg, documents=documents, x=x)
        report = evaluate_model(model, labels_by_id, cfg)
        for ratio, mean, std in report.rows():
            rows.append({"parameter": parameter, "value": value, "ratio": ratio,
                         "mean": mean, "std": std})
    return rows


def keyword_report(model: TextEmbeddingModel, node: int, top_n: int = 5) -> dict:
    """Closest words to a node's structural vector and to its content vector."""
    node_side = nearest_words(model.U[node], model.W, top_n, words=model.vocab.words)
    words, counts = model.docs.bag(node)
    if len(words) == 0:
        raise ValueError(f"node {model.node_ids[node]!r} has an empty document")
    content = doc_context_vector((words, counts), model.W)
    content_side = nearest_words(content, model.W, top_n, words=model.vocab.words)
    return {
        "node": model.node_ids[node],
        "node_words": [w for w, _ in node_side],
        "content_words": [w for w, _ in content_side],
    }


def format_keyword_report(report: dict) -> str:
    """Two-row layout: structural keywords above content keywords."""
    return "\n".join([
        f"document {report['node']}",
        "closest words to node vector    : " + ", ".join(report["node_words"]),
        "closest words to content vector : " + ", ".join(report["content_words"]),
    ])


__all__ = [
    "PipelineConfig", "build_matrix", "embed_graph", "evaluate_model",
    "run_pipeline", "sweep", "keyword_report", "format_keyword_report",
    "model_features", "SWEEP_PARAMETERS",
]

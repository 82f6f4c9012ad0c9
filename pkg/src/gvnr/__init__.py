"""Network embeddings from thresholded random-walk co-occurrence factorization."""

from .cooc import CoocMatrix, apply_threshold, build_cooc, load_cooc, save_cooc
from .evaluation import (EvalReport, LabeledNodes, build_labeled_nodes, evaluate,
                         fit_logreg_ovr, nearest_words, predict, read_label_file)
from .graph import Graph, load_graph
from .pipeline import (PipelineConfig, embed_graph, evaluate_model, keyword_report,
                       run_pipeline, sweep)
from .text import (DocCorpus, TextEmbeddingModel, Vocabulary, build_vocab,
                   doc_context_vector, document_representation, train_text)
from .training import (EmbeddingModel, TrainConfig, glove_weight, load_embeddings,
                       node_representation, pair_residual, sample_zero_entries,
                       save_embeddings, train, zero_sample_rate)
from .walks import WalkCorpus, generate_walks, load_walks, save_walks

__version__ = "0.1.0"

__all__ = [
    "CoocMatrix", "DocCorpus", "EmbeddingModel", "EvalReport", "Graph",
    "LabeledNodes", "PipelineConfig", "TextEmbeddingModel", "TrainConfig",
    "Vocabulary", "WalkCorpus", "apply_threshold", "build_cooc",
    "build_labeled_nodes", "build_vocab", "doc_context_vector",
    "document_representation", "embed_graph", "evaluate", "evaluate_model",
    "fit_logreg_ovr", "generate_walks", "glove_weight", "keyword_report",
    "load_cooc", "load_embeddings", "load_graph", "load_walks",
    "nearest_words", "node_representation", "pair_residual", "predict",
    "read_label_file", "run_pipeline", "sample_zero_entries", "save_cooc",
    "save_embeddings", "save_walks", "sweep", "train", "train_text",
    "zero_sample_rate",
]

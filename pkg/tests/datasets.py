"""Locating and adapting the citation datasets used by the dataset-gated tests.

The toolkit consumes plain files (edge list, label list, optional documents).
This helper also understands the common raw distribution layout of the
citation datasets (a ``<name>.cites`` file of "cited citing" pairs and a
``<name>.content`` file of "id <binary features...> label" rows) and adapts
it on the fly.

Data is looked up under $GVNR_DATA_DIR (default: <repo>/data). Accepted
layouts, for name in {cora, citeseer}:

    <data>/<name>.edges + <name>.labels [+ <name>.docs]     native formats
    <data>/<name>/<name>.cites + <name>/<name>.content      raw distribution
"""

import os
from pathlib import Path

DATA_DIR = Path(os.environ.get("GVNR_DATA_DIR",
                               Path(__file__).resolve().parent.parent / "data"))


def _convert_raw(name: str, root: Path):
    cites = root / f"{name}.cites"
    content = root / f"{name}.content"
    edge_lines = []
    for raw in cites.read_text(encoding="utf-8").splitlines():
        fields = raw.split()
        if len(fields) >= 2:
            edge_lines.append(f"{fields[0]} {fields[1]}")
    labels = {}
    feature_docs = {}
    for raw in content.read_text(encoding="utf-8").splitlines():
        fields = raw.split()
        if len(fields) < 2:
            continue
        node, label = fields[0], fields[-1]
        labels[node] = [label]
        words = [f"w{idx:04d}" for idx, flag in enumerate(fields[1:-1]) if flag != "0"]
        feature_docs[node] = " ".join(words)
    return edge_lines, labels, feature_docs


class CitationDataset:
    def __init__(self, name, edge_lines, labels, documents, docs_are_raw_text):
        self.name = name
        self.edge_lines = edge_lines
        self.labels = labels
        self.documents = documents
        # False when documents were synthesized from binary word-indicator
        # features instead of real titles/abstracts
        self.docs_are_raw_text = docs_are_raw_text


def find_dataset(name: str):
    """Return a CitationDataset or None when no layout is present."""
    edges = DATA_DIR / f"{name}.edges"
    labels_file = DATA_DIR / f"{name}.labels"
    if edges.exists() and labels_file.exists():
        edge_lines = edges.read_text(encoding="utf-8").splitlines()
        labels = {}
        for raw in labels_file.read_text(encoding="utf-8").splitlines():
            fields = raw.split()
            if len(fields) == 2:
                labels[fields[0]] = fields[1].split(",")
        docs_file = DATA_DIR / f"{name}.docs"
        documents = None
        if docs_file.exists():
            documents = {}
            for raw in docs_file.read_text(encoding="utf-8").splitlines():
                if "\t" in raw:
                    node, text = raw.split("\t", 1)
                    documents[node] = text
        return CitationDataset(name, edge_lines, labels, documents,
                               docs_are_raw_text=documents is not None)
    raw_root = DATA_DIR / name
    if (raw_root / f"{name}.cites").exists() and (raw_root / f"{name}.content").exists():
        edge_lines, labels, feature_docs = _convert_raw(name, raw_root)
        docs_file = DATA_DIR / f"{name}.docs"
        if docs_file.exists():
            documents = {}
            for raw in docs_file.read_text(encoding="utf-8").splitlines():
                if "\t" in raw:
                    node, text = raw.split("\t", 1)
                    documents[node] = text
            return CitationDataset(name, edge_lines, labels, documents, True)
        return CitationDataset(name, edge_lines, labels, feature_docs, False)
    return None

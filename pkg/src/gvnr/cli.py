"""Command-line pipeline: walks -> cooc -> train/train-text -> eval/keywords/sweep.

Every stage echoes its fully resolved options (defaults included) to a
"<out>.config.json" sidecar; re-running a stage with --config pointed at that
sidecar reproduces the same outputs byte for byte in single-threaded mode.
Report-producing stages write an aligned text table, a delimited CSV, and a
rendered PNG figure side by side.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import pipeline as pl
from .cooc import apply_threshold, build_cooc, load_cooc, save_cooc
from .evaluation import evaluate, build_labeled_nodes, read_label_file
from .graph import EmptyGraphError, GraphFormatError, load_graph
from .plots import render_eval_figure, render_sweep_figure
from .text import (VocabularyError, build_vocab, doc_context_vector, read_documents,
                   tokenize, train_text)
from .training import (TrainingDivergedError, save_embeddings, save_vectors,
                       load_vectors, train)
from .walks import generate_walks, load_walks, save_walks


class _InputError(Exception):
    """File-level problem: missing or malformed input."""


def _fail(prefix: str, message, code: int):
    click.echo(f"{prefix}: {message}", err=True)
    sys.exit(code)


def _guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except _InputError as exc:
            _fail("input error", exc, 4)
        except (GraphFormatError, EmptyGraphError, VocabularyError) as exc:
            _fail("input error", exc, 4)
        except FileNotFoundError as exc:
            _fail("input error", f"missing file: {exc.filename or exc}", 4)
        except TrainingDivergedError as exc:
            _fail("training error", exc, 5)
        except ValueError as exc:
            _fail("config error", exc, 3)
    return wrapper


def _require_file(path: str | None, flag: str) -> str:
    if path is None:
        raise _InputError(f"{flag} is required for this command")
    if not Path(path).exists():
        raise _InputError(f"missing file: {path} (from {flag})")
    return path


def _read(fn, *args, **kwargs):
    """Run a loader, reporting parse failures as input errors."""
    try:
        return fn(*args, **kwargs)
    except FileNotFoundError:
        raise
    except (GraphFormatError, EmptyGraphError, VocabularyError):
        raise
    except (ValueError, OSError) as exc:
        raise _InputError(str(exc)) from exc


def _parse_ratios(text: str) -> list[float]:
    text = text.strip()
    if ".." in text:
        parts = text.split("..")
        if len(parts) == 2:
            lo, hi, step = float(parts[0]), float(parts[1]), 0.1
        elif len(parts) == 3:
            lo, hi, step = (float(p) for p in parts)
        else:
            raise ValueError(f"cannot parse ratio range {text!r}")
        if step <= 0 or hi < lo:
            raise ValueError(f"bad ratio range {text!r}")
        count = int(round((hi - lo) / step))
        ratios = [round(lo + i * step, 10) for i in range(count + 1)]
    else:
        ratios = [float(t) for t in text.split(",") if t.strip()]
    if not ratios or any(not (0.0 < r < 1.0) for r in ratios):
        raise ValueError(f"ratios must lie strictly inside (0, 1), got {text!r}")
    return ratios


def _parse_values(text: str) -> list[float]:
    values = [float(t) for t in text.split(",") if t.strip()]
    if not values:
        raise ValueError(f"no values in {text!r}")
    return values


def _echo_config(out: str, subcommand: str, options: dict) -> None:
    payload = {
        "subcommand": subcommand,
        "options": {k: (str(v) if isinstance(v, Path) else v)
                    for k, v in sorted(options.items())},
    }
    with open(f"{out}.config.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_config_cb(ctx, _param, value):
    if value:
        with open(value, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        ctx.default_map = {**(ctx.default_map or {}), **payload.get("options", payload)}
    return value


_CONFIG_OPT = click.option(
    "--config", type=str, default=None, is_eager=True, expose_value=False,
    callback=_load_config_cb,
    help="JSON sidecar of a previous run; explicit flags override its values.")


def _walk_options(fn):
    for opt in reversed([
        click.option("--walks-per-node", type=int, default=80, show_default=True,
                     help="Walks started from every non-isolated node."),
        click.option("--walk-length", type=int, default=40, show_default=True,
                     help="Nodes per walk."),
    ]):
        fn = opt(fn)
    return fn


def _train_options(fn):
    for opt in reversed([
        click.option("--window", type=int, default=5, show_default=True,
                     help="Maximum co-occurrence offset within a walk."),
        click.option("--x-min", type=float, default=1.0, show_default=True,
                     help="Co-occurrence threshold; entries below it are zeroed."),
        click.option("--k", type=float, default=1.0, show_default=True,
                     help="Zero entries sampled per positive entry, per row."),
        click.option("--c", type=float, default=1.0, show_default=True,
                     help="Shift inside the log target."),
        click.option("--dim", type=int, default=80, show_default=True,
                     help="Embedding dimension."),
        click.option("--lr", type=float, default=0.05, show_default=True,
                     help="Initial adaptive-gradient learning rate."),
        click.option("--x-max", type=float, default=10.0, show_default=True,
                     help="Saturation point of the glove weighting curve."),
    ]):
        fn = opt(fn)
    return fn


def _common_options(fn):
    for opt in reversed([
        click.option("--seed", type=int, default=1, show_default=True),
        click.option("--threads", type=int, default=1, show_default=True,
                     help=">1 enables lock-free parallel training (non-deterministic)."),
    ]):
        fn = opt(fn)
    return fn


@click.group()
def cli():
    """Network embeddings from thresholded random-walk co-occurrence factorization."""


@cli.command("walks")
@_CONFIG_OPT
@click.option("--edges", type=str, required=True, help="Edge-list file.")
@_walk_options
@_common_options
@click.option("--out", type=str, required=True, help="Walk corpus output file.")
@_guarded
def walks_cmd(edges, walks_per_node, walk_length, seed, threads, out):
    """Generate the truncated random-walk corpus."""
    graph = _read(load_graph, _require_file(edges, "--edges"))
    if graph.dropped_self_loops:
        click.echo(f"dropped {graph.dropped_self_loops} self-loops", err=True)
    corpus = generate_walks(graph, walks_per_node, walk_length, seed)
    save_walks(corpus, graph.node_ids, out)
    _echo_config(out, "walks", dict(edges=edges, walks_per_node=walks_per_node,
                                    walk_length=walk_length, seed=seed,
                                    threads=threads, out=out))
    click.echo(f"wrote {len(corpus)} walks ({corpus.total_visits} visits) to {out}; "
               f"{len(corpus.isolated)} isolated nodes skipped")


@cli.command("cooc")
@_CONFIG_OPT
@click.option("--edges", type=str, required=True, help="Edge-list file.")
@click.option("--walks", type=str, default=None,
              help="Reuse a saved walk corpus instead of generating one.")
@_walk_options
@click.option("--window", type=int, default=5, show_default=True)
@click.option("--x-min", type=float, default=1.0, show_default=True)
@_common_options
@click.option("--out", type=str, required=True, help="Co-occurrence matrix output file.")
@_guarded
def cooc_cmd(edges, walks, walks_per_node, walk_length, window, x_min, seed, threads, out):
    """Build and threshold the co-occurrence matrix."""
    graph = _read(load_graph, _require_file(edges, "--edges"))
    if walks is not None:
        corpus = _read(load_walks, _require_file(walks, "--walks"), graph.index_of)
    else:
        corpus = generate_walks(graph, walks_per_node, walk_length, seed)
    x = apply_threshold(build_cooc(corpus, window, n=graph.n), x_min)
    save_cooc(x, graph.node_ids, out)
    _echo_config(out, "cooc", dict(edges=edges, walks=walks, walks_per_node=walks_per_node,
                                   walk_length=walk_length, window=window, x_min=x_min,
                                   seed=seed, threads=threads, out=out))
    click.echo(f"wrote {x.n}x{x.n} matrix with {x.nnz} entries (x_min={x_min}) to {out}")


@cli.command("train")
@_CONFIG_OPT
@click.option("--cooc", type=str, default=None, help="Saved co-occurrence matrix.")
@click.option("--edges", type=str, default=None,
              help="Edge-list file; builds walks and the matrix in-process.")
@_walk_options
@_train_options
@click.option("--epochs", type=int, default=10, show_default=True)
@click.option("--objective", type=click.Choice(["gvnr", "glove"]), default="gvnr",
              show_default=True)
@_common_options
@click.option("--out", type=str, required=True, help="Embedding output file.")
@_guarded
def train_cmd(cooc, edges, walks_per_node, walk_length, window, x_min, k, c, dim, lr,
              x_max, epochs, objective, seed, threads, out):
    """Learn node embeddings (from a saved matrix or end to end)."""
    from .training import TrainConfig
    cfg = TrainConfig(dim=dim, shift=c, zero_ratio=k, epochs=epochs, learning_rate=lr,
                      seed=seed, objective=objective, x_max=x_max, threads=threads)
    cfg.validate()
    if cooc is not None:
        x, node_ids = _read(load_cooc, _require_file(cooc, "--cooc"))
        x = apply_threshold(x, x_min)
    elif edges is not None:
        graph = _read(load_graph, _require_file(edges, "--edges"))
        corpus = generate_walks(graph, walks_per_node, walk_length, seed)
        x = apply_threshold(build_cooc(corpus, window, n=graph.n), x_min)
        node_ids = graph.node_ids
    else:
        raise _InputError("either --cooc or --edges is required")
    model = train(x, cfg, node_ids=node_ids)
    save_embeddings(model, out)
    _echo_config(out, "train", dict(cooc=cooc, edges=edges, walks_per_node=walks_per_node,
                                    walk_length=walk_length, window=window, x_min=x_min,
                                    k=k, c=c, dim=dim, lr=lr, x_max=x_max, epochs=epochs,
                                    objective=objective, seed=seed, threads=threads,
                                    out=out))
    final = model.history[-1]["positive_mse"]
    click.echo(f"trained {model.n} x {model.dim} embeddings "
               f"({epochs} epochs, final positive MSE {final:.4f}); wrote {out}")


@cli.command("train-text")
@_CONFIG_OPT
@click.option("--cooc", type=str, default=None, help="Saved co-occurrence matrix.")
@click.option("--edges", type=str, default=None)
@click.option("--docs", type=str, required=True, help="Per-node documents (id<TAB>text).")
@click.option("--min-count", type=int, default=5, show_default=True,
              help="Keep words appearing in at least this many documents.")
@_walk_options
@_train_options
@click.option("--epochs", type=int, default=4, show_default=True)
@_common_options
@click.option("--out", type=str, required=True, help="Embedding output file.")
@_guarded
def train_text_cmd(cooc, edges, docs, min_count, walks_per_node, walk_length, window,
                   x_min, k, c, dim, lr, x_max, epochs, seed, threads, out):
    """Learn joint node and word embeddings from graph plus documents."""
    from .training import TrainConfig
    cfg = TrainConfig(dim=dim, shift=c, zero_ratio=k, epochs=epochs, learning_rate=lr,
                      seed=seed, objective="gvnr", x_max=x_max, threads=threads)
    cfg.validate()
    if cooc is not None:
        x, node_ids = _read(load_cooc, _require_file(cooc, "--cooc"))
        x = apply_threshold(x, x_min)
    elif edges is not None:
        graph = _read(load_graph, _require_file(edges, "--edges"))
        corpus = generate_walks(graph, walks_per_node, walk_length, seed)
        x = apply_threshold(build_cooc(corpus, window, n=graph.n), x_min)
        node_ids = graph.node_ids
    else:
        raise _InputError("either --cooc or --edges is required")
    index_of = {v: i for i, v in enumerate(node_ids)}
    raw_docs = _read(read_documents, _require_file(docs, "--docs"), index_of, len(node_ids))
    vocab, corpus_docs = _read(build_vocab, raw_docs, min_count)
    if len(corpus_docs.empty_nodes):
        flagged = [node_ids[i] for i in corpus_docs.empty_nodes[:5]]
        click.echo(f"warning: {len(corpus_docs.empty_nodes)} nodes have empty documents "
                   f"(e.g. {', '.join(flagged)}); they keep free context vectors", err=True)
    model = train_text(x, corpus_docs, cfg, vocab=vocab, node_ids=node_ids)
    save_embeddings(model, out)
    save_vectors(vocab.words, model.W, f"{out}.words")
    _echo_config(out, "train-text",
                 dict(cooc=cooc, edges=edges, docs=docs, min_count=min_count,
                      walks_per_node=walks_per_node, walk_length=walk_length,
                      window=window, x_min=x_min, k=k, c=c, dim=dim, lr=lr, x_max=x_max,
                      epochs=epochs, seed=seed, threads=threads, out=out))
    click.echo(f"trained {model.n} node and {vocab.m} word embeddings; wrote {out} "
               f"and {out}.words")


def _write_eval_outputs(report, out: str, title: str) -> None:
    with open(f"{out}.csv", "w", encoding="utf-8") as fh:
        fh.write("ratio,mean,std\n")
        for ratio, mean, std in report.rows():
            fh.write(f"{float(ratio)!r},{float(mean)!r},{float(std)!r}\n")
    table = f"{title}\n{report.format_table()}\n"
    for name, (means, stds) in report.secondary.items():
        extra = f"{name:<9}" + "".join(f"{100 * m:>9.1f}" for m in means)
        table += extra + "\n"
    with open(f"{out}.txt", "w", encoding="utf-8") as fh:
        fh.write(table)
    render_eval_figure(report, f"{out}.png")


@cli.command("eval")
@_CONFIG_OPT
@click.option("--embeddings", type=str, required=True, help="Saved embedding file.")
@click.option("--labels", type=str, required=True, help="Label file (id label[,label...]).")
@click.option("--ratios", type=str, default="0.1,0.2,0.3,0.4,0.5", show_default=True,
              help="Comma list or range like 0.1..0.5.")
@click.option("--repetitions", type=int, default=10, show_default=True)
@_common_options
@click.option("--out", type=str, required=True, help="Report prefix (.csv/.txt/.png).")
@_guarded
def eval_cmd(embeddings, labels, ratios, repetitions, seed, threads, out):
    """Classify nodes from embeddings across training ratios."""
    ratio_values = _parse_ratios(ratios)
    node_ids, features = _read(load_vectors, _require_file(embeddings, "--embeddings"))
    by_id = _read(read_label_file, _require_file(labels, "--labels"))
    labeled = build_labeled_nodes(by_id, node_ids)
    report = evaluate(features, labeled, ratio_values, repetitions=repetitions, seed=seed)
    _write_eval_outputs(report, out, f"evaluation of {embeddings}")
    _echo_config(out, "eval", dict(embeddings=embeddings, labels=labels, ratios=ratios,
                                   repetitions=repetitions, seed=seed, threads=threads,
                                   out=out))
    click.echo(report.format_table())
    click.echo(f"wrote {out}.csv, {out}.txt, {out}.png")


@cli.command("keywords")
@_CONFIG_OPT
@click.option("--embeddings", type=str, required=True, help="Node embedding file.")
@click.option("--word-embeddings", type=str, required=True, help="Word embedding file.")
@click.option("--docs", type=str, required=True, help="Per-node documents (id<TAB>text).")
@click.option("--node", type=str, required=True, help="External node id to query.")
@click.option("--top", type=int, default=5, show_default=True)
@click.option("--out", type=str, default=None, help="Also write the layout to this file.")
@_guarded
def keywords_cmd(embeddings, word_embeddings, docs, node, top, out):
    """Print the closest words to a node's structural and content vectors."""
    from .evaluation import nearest_words
    node_ids, U = _read(load_vectors, _require_file(embeddings, "--embeddings"))
    words, W = _read(load_vectors, _require_file(word_embeddings, "--word-embeddings"))
    index_of = {v: i for i, v in enumerate(node_ids)}
    if node not in index_of:
        raise ValueError(f"--node {node!r} is not in the embedding file")
    raw_docs = _read(read_documents, _require_file(docs, "--docs"), index_of, len(node_ids))
    word_index = {w: i for i, w in enumerate(words)}
    bag: dict[int, float] = {}
    for token in tokenize(raw_docs[index_of[node]]):
        wi = word_index.get(token)
        if wi is not None:
            bag[wi] = bag.get(wi, 0.0) + 1.0
    if not bag:
        raise _InputError(f"node {node!r} has no document words in the vocabulary")
    bag_words = np.array(sorted(bag), dtype=np.int64)
    bag_counts = np.array([bag[w] for w in bag_words])
    content = doc_context_vector((bag_words, bag_counts), W)
    node_side = nearest_words(U[index_of[node]], W, top, words=words)
    content_side = nearest_words(content, W, top, words=words)
    layout = "\n".join([
        f"document {node}",
        "closest words to node vector    : " + ", ".join(w for w, _ in node_side),
        "closest words to content vector : " + ", ".join(w for w, _ in content_side),
    ])
    click.echo(layout)
    if out:
        Path(out).write_text(layout + "\n", encoding="utf-8")
        _echo_config(out, "keywords", dict(embeddings=embeddings,
                                           word_embeddings=word_embeddings, docs=docs,
                                           node=node, top=top, out=out))


def _sweep_table(rows: list[dict], parameter: str) -> str:
    ratios = sorted({r["ratio"] for r in rows})
    values = sorted({r["value"] for r in rows})
    lines = [f"{parameter:>10}" + "".join(f"{100 * r:>8.0f}%" for r in ratios)]
    for v in values:
        cells = ""
        for r in ratios:
            match = [row["mean"] for row in rows
                     if row["value"] == v and row["ratio"] == r]
            cells += f"{100 * match[0]:>9.1f}" if match else f"{'-':>9}"
        lines.append(f"{v:>10}" + cells)
    return "\n".join(lines)


@cli.command("sweep")
@_CONFIG_OPT
@click.option("--edges", type=str, required=True)
@click.option("--labels", type=str, required=True)
@click.option("--docs", type=str, default=None,
              help="Documents file; sweeps the text variant when given.")
@click.option("--parameter", type=click.Choice(sorted(pl.SWEEP_PARAMETERS)), required=True)
@click.option("--values", type=str, required=True, help="Comma-separated values to sweep.")
@_walk_options
@_train_options
@click.option("--epochs", type=int, default=None,
              help="Defaults to 10, or 4 when --docs is given.")
@click.option("--objective", type=click.Choice(["gvnr", "glove"]), default="gvnr",
              show_default=True)
@click.option("--min-count", type=int, default=5, show_default=True)
@click.option("--ratios", type=str, default="0.1,0.2,0.3,0.4,0.5", show_default=True)
@click.option("--repetitions", type=int, default=10, show_default=True)
@_common_options
@click.option("--out", type=str, required=True, help="Report prefix (.csv/.txt/.png).")
@_guarded
def sweep_cmd(edges, labels, docs, parameter, values, walks_per_node, walk_length,
              window, x_min, k, c, dim, lr, x_max, epochs, objective, min_count,
              ratios, repetitions, seed, threads, out):
    """Score the pipeline across values of one hyper-parameter."""
    ratio_values = _parse_ratios(ratios)
    sweep_values = _parse_values(values)
    epochs = epochs if epochs is not None else (4 if docs else 10)
    graph = _read(load_graph, _require_file(edges, "--edges"))
    by_id = _read(read_label_file, _require_file(labels, "--labels"))
    documents = None
    if docs:
        documents = _read(read_documents, _require_file(docs, "--docs"),
                          graph.index_of, graph.n)
    cfg = pl.PipelineConfig(
        walks_per_node=walks_per_node, walk_length=walk_length, window=window,
        x_min=x_min, dim=dim, shift=c, zero_ratio=k, epochs=epochs, learning_rate=lr,
        objective=objective, x_max=x_max, min_count=min_count,
        ratios=tuple(ratio_values), repetitions=repetitions, seed=seed, threads=threads)
    rows = pl.sweep(graph, by_id, cfg, parameter, sweep_values, documents=documents)
    with open(f"{out}.csv", "w", encoding="utf-8") as fh:
        fh.write("ratio,value,mean,std\n")
        for row in rows:
            fh.write(f"{float(row['ratio'])!r},{float(row['value'])!r},"
                     f"{float(row['mean'])!r},{float(row['std'])!r}\n")
    table = f"sweep of {parameter}\n{_sweep_table(rows, parameter)}\n"
    with open(f"{out}.txt", "w", encoding="utf-8") as fh:
        fh.write(table)
    render_sweep_figure(rows, parameter, f"{out}.png")
    _echo_config(out, "sweep",
                 dict(edges=edges, labels=labels, docs=docs, parameter=parameter,
                      values=values, walks_per_node=walks_per_node,
                      walk_length=walk_length, window=window, x_min=x_min, k=k, c=c,
                      dim=dim, lr=lr, x_max=x_max, epochs=epochs, objective=objective,
                      min_count=min_count, ratios=ratios, repetitions=repetitions,
                      seed=seed, threads=threads, out=out))
    click.echo(table)
    click.echo(f"wrote {out}.csv, {out}.txt, {out}.png")


@cli.command("pipeline")
@_CONFIG_OPT
@click.option("--edges", type=str, required=True)
@click.option("--labels", type=str, required=True)
@click.option("--docs", type=str, default=None,
              help="Documents file; trains the text variant when given.")
@_walk_options
@_train_options
@click.option("--epochs", type=int, default=None,
              help="Defaults to 10, or 4 when --docs is given.")
@click.option("--objective", type=click.Choice(["gvnr", "glove"]), default="gvnr",
              show_default=True)
@click.option("--min-count", type=int, default=5, show_default=True)
@click.option("--ratios", type=str, default="0.1,0.2,0.3,0.4,0.5", show_default=True)
@click.option("--repetitions", type=int, default=10, show_default=True)
@_common_options
@click.option("--out", type=str, required=True,
              help="Output prefix (.embeddings/.csv/.txt/.png).")
@_guarded
def pipeline_cmd(edges, labels, docs, walks_per_node, walk_length, window, x_min, k, c,
                 dim, lr, x_max, epochs, objective, min_count, ratios, repetitions,
                 seed, threads, out):
    """Run walks, matrix construction, training and evaluation end to end."""
    ratio_values = _parse_ratios(ratios)
    epochs = epochs if epochs is not None else (4 if docs else 10)
    graph = _read(load_graph, _require_file(edges, "--edges"))
    by_id = _read(read_label_file, _require_file(labels, "--labels"))
    documents = None
    if docs:
        documents = _read(read_documents, _require_file(docs, "--docs"),
                          graph.index_of, graph.n)
    cfg = pl.PipelineConfig(
        walks_per_node=walks_per_node, walk_length=walk_length, window=window,
        x_min=x_min, dim=dim, shift=c, zero_ratio=k, epochs=epochs, learning_rate=lr,
        objective=objective, x_max=x_max, min_count=min_count,
        ratios=tuple(ratio_values), repetitions=repetitions, seed=seed, threads=threads)
    model, report = pl.run_pipeline(graph, by_id, cfg, documents=documents)
    save_embeddings(model, f"{out}.embeddings")
    if documents is not None:
        save_vectors(model.vocab.words, model.W, f"{out}.embeddings.words")
    _write_eval_outputs(report, out, f"pipeline report ({edges})")
    _echo_config(out, "pipeline",
                 dict(edges=edges, labels=labels, docs=docs,
                      walks_per_node=walks_per_node, walk_length=walk_length,
                      window=window, x_min=x_min, k=k, c=c, dim=dim, lr=lr, x_max=x_max,
                      epochs=epochs, objective=objective, min_count=min_count,
                      ratios=ratios, repetitions=repetitions, seed=seed,
                      threads=threads, out=out))
    click.echo(report.format_table())
    click.echo(f"wrote {out}.embeddings, {out}.csv, {out}.txt, {out}.png")


def main():
    cli(prog_name="gvnr")


if __name__ == "__main__":
    main()

import numpy as np
import pytest

from gvnr.graph import load_graph


def sbm_edge_lines(block_sizes, p_in, p_out, seed, weighted=False):
    """Planted-community random graph as edge-list lines."""
    rng = np.random.default_rng(seed)
    sizes = list(block_sizes)
    n = sum(sizes)
    block = np.repeat(np.arange(len(sizes)), sizes)
    lines = []
    for i in range(n):
        for j in range(i + 1, n):
            p = p_in if block[i] == block[j] else p_out
            if rng.random() < p:
                if weighted:
                    lines.append(f"n{i} n{j} {1.0 + rng.integers(0, 3)}")
                else:
                    lines.append(f"n{i} n{j}")
    # ring per block to avoid isolated nodes in fixtures that assume none
    start = 0
    for size in sizes:
        for i in range(size):
            a = start + i
            b = start + (i + 1) % size
            lines.append(f"n{a} n{b}")
        start += size
    return lines, {f"n{i}": f"c{block[i]}" for i in range(n)}


@pytest.fixture(scope="session")
def sbm_small():
    """Three-community graph small enough for fast end-to-end runs."""
    lines, labels = sbm_edge_lines([40, 40, 40], p_in=0.12, p_out=0.008, seed=7)
    return load_graph(lines), labels


@pytest.fixture(scope="session")
def ba_graph():
    """Preferential-attachment graph with heavy-tailed degrees."""
    nx = pytest.importorskip("networkx")
    g = nx.barabasi_albert_graph(400, 3, seed=11)
    lines = [f"v{a} v{b}" for a, b in g.edges()]
    return load_graph(lines)

from __future__ import annotations

import itertools

import networkx as nx
import pytest

from dagnet.graph import Dag, UGraph

ACCEPTANCE_LINES: list = []


def to_nx(g):
    h = nx.DiGraph() if isinstance(g, Dag) else nx.Graph()
    h.add_nodes_from(range(g.order))
    h.add_edges_from(g.edges)
    return h


def all_labeled_dags(n: int):
    """Every DAG on vertices 0..n-1, by brute force over all directed edge sets."""
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    for bits in range(1 << len(pairs)):
        edges = [pairs[e] for e in range(len(pairs)) if bits >> e & 1]
        h = nx.DiGraph()
        h.add_nodes_from(range(n))
        h.add_edges_from(edges)
        if nx.is_directed_acyclic_graph(h):
            yield Dag.from_edges(n, edges)


def random_dag(rng, n: int, p: float = 0.4) -> Dag:
    perm = rng.permutation(n)
    edges = [(int(perm[i]), int(perm[j])) for i, j in itertools.combinations(range(n), 2) if rng.random() < p]
    return Dag.from_edges(n, edges)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    import numpy as np

    return np.random.Generator(np.random.PCG64(12345))

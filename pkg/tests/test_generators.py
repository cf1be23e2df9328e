from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.stats import chisquare

from conftest import all_labeled_dags
from dagnet.errors import ArgumentError, SizeError
from dagnet.generators import (
    ADD_TRIANGLE,
    ADD_VERTEX,
    assemble,
    count_dags,
    count_dags_alternating,
    count_dags_with_sources,
    orient_to_dag,
    sample_ba,
    sample_er,
    sample_gil,
    sample_uniform_connected_dag,
    sample_uniform_dag,
    sample_ws,
)
from dagnet.graph import Dag, UGraph, is_weakly_connected, undirected_shadow
from dagnet.rng import derive_rng, make_rng


def degrees(g):
    d = np.zeros(g.order, dtype=int)
    for u, v in g.edges:
        d[u] += 1
        d[v] += 1
    return d


class TestCounting:
    def test_known_values(self):
        assert [count_dags(n) for n in range(7)] == [1, 1, 3, 25, 543, 29281, 3781503]

    def test_brute_force(self):
        for n in range(1, 5):
            assert count_dags(n) == sum(1 for _ in all_labeled_dags(n))

    def test_sources_partition(self):
        for n in range(1, 12):
            assert sum(count_dags_with_sources(n, k) for k in range(1, n + 1)) == count_dags(n)

    def test_alternating_recurrence_agrees(self):
        assert all(count_dags(n) == count_dags_alternating(n) for n in range(40))

    def test_limits(self):
        with pytest.raises(SizeError):
            count_dags(61)
        with pytest.raises(ArgumentError):
            count_dags(-1)
        assert count_dags(60) > 10**300


class TestUniformSampling:
    def test_single_vertex(self):
        g = sample_uniform_dag(1, make_rng(0))
        assert g.order == 1 and not g.edges

    def test_two_vertices_uniform(self):
        rng = make_rng(1)
        counts = {}
        for _ in range(30_000):
            key = tuple(sorted(sample_uniform_dag(2, rng).edges))
            counts[key] = counts.get(key, 0) + 1
        assert len(counts) == 3
        assert chisquare(list(counts.values())).pvalue > 0.001

    def test_four_vertices_support(self):
        rng = make_rng(2)
        seen = {tuple(sorted(sample_uniform_dag(4, rng).edges)) for _ in range(20_000)}
        assert len(seen) > 500  # 543 labeled DAGs, nearly all hit

    def test_connected(self):
        rng = make_rng(3)
        counts = {}
        for _ in range(4000):
            g = sample_uniform_connected_dag(2, rng)
            counts[tuple(g.edges)] = counts.get(tuple(g.edges), 0) + 1
        assert set(counts) == {((0, 1),), ((1, 0),)}
        assert abs(counts[((0, 1),)] / 4000 - 0.5) < 0.04
        for n in range(1, 9):
            assert is_weakly_connected(sample_uniform_connected_dag(n, rng, max_trials=1000))

    def test_deterministic(self):
        a = [sample_uniform_dag(7, make_rng(9)) for _ in range(3)]
        b = [sample_uniform_dag(7, make_rng(9)) for _ in range(3)]
        assert a == b


class TestRandomModels:
    def test_gil_extremes(self):
        rng = make_rng(4)
        assert not sample_gil(6, 0.0, rng).edges
        assert len(sample_gil(6, 1.0, rng).edges) == 15
        with pytest.raises(ArgumentError):
            sample_gil(3, 1.5, rng)

    def test_gil_empty_frequency(self):
        rng = make_rng(5)
        n = 20_000
        empty = sum(not sample_gil(3, 0.2, rng).edges for _ in range(n)) / n
        assert abs(empty - 0.512) < 4 * math.sqrt(0.512 * 0.488 / n)

    def test_er(self):
        rng = make_rng(6)
        assert not sample_er(5, 0, rng).edges
        assert len(sample_er(5, 10, rng).edges) == 10
        assert all(len(sample_er(8, 7, rng).edges) == 7 for _ in range(50))
        with pytest.raises(ArgumentError):
            sample_er(3, 4, rng)

    def test_ws_lattice_and_edge_count(self):
        rng = make_rng(7)
        g = sample_ws(10, 4, 0.0, rng)
        assert set(degrees(g)) == {4}
        for _ in range(200):
            assert len(sample_ws(20, 4, float(rng.random()), rng).edges) == 40

    def test_ws_rewired_degrees_vary(self):
        rng = make_rng(8)
        variances = [degrees(sample_ws(20, 4, 1.0, rng)).var() for _ in range(200)]
        assert np.mean(variances) > 0
        assert abs(np.mean([degrees(sample_ws(20, 4, 1.0, rng)).mean() for _ in range(200)]) - 4) < 1e-9

    def test_ba(self):
        rng = make_rng(9)
        star = sample_ba(4, 3, rng)
        assert len(star.edges) == 3
        tree = sample_ba(20, 1, rng)
        assert len(tree.edges) == 19 and is_weakly_connected(tree)
        for m in (1, 2, 3):
            assert len(sample_ba(30, m, rng).edges) == m * (30 - m)

    def test_ba_heavy_tail(self):
        wins = 0
        for s in range(100):
            small = degrees(sample_ba(20, 2, derive_rng(s, 0))).max()
            large = degrees(sample_ba(200, 2, derive_rng(s, 1))).max()
            wins += large > small
        assert wins >= 95

    def test_orient(self):
        assert orient_to_dag(UGraph(2, [(0, 1)]), [0, 1]).edges == frozenset({(0, 1)})
        tri = orient_to_dag(UGraph(3, [(0, 1), (1, 2), (0, 2)]), [0, 1, 2])
        assert tri.edges == frozenset({(0, 1), (1, 2), (0, 2)})
        rng = make_rng(10)
        for _ in range(50):
            g = sample_gil(8, 0.4, rng)
            d = orient_to_dag(g, rng.permutation(8).tolist())
            assert isinstance(d, Dag)
            assert undirected_shadow(d).edges == g.edges


class TestAssembly:
    def test_add_vertex_once(self):
        out = assemble(UGraph(1, []), [ADD_VERTEX], 1)
        assert len(out) == 1 and out[0].order == 2 and len(out[0].edges) == 1

    def test_triangle_once(self):
        assert len(assemble(UGraph(2, [(0, 1)]), [ADD_TRIANGLE], 1)) == 1

    def test_levels_non_decreasing(self):
        levels = assemble(UGraph(1, []), [ADD_VERTEX], 5, history=True)
        sizes = [len(level) for level in levels]
        assert sizes == sorted(sizes)
        assert sizes[-1] == 6  # unlabeled trees on 6 vertices

    def test_sample_mode(self):
        g = assemble(Dag.from_edges(1, []), [ADD_VERTEX, ADD_TRIANGLE], 6, mode="sample", rng=make_rng(11))
        assert g.order == 1 + 3 * 1 + 3 * 2

    def test_arguments(self):
        with pytest.raises(ArgumentError):
            assemble(UGraph(1, []), [], 1)
        with pytest.raises(ArgumentError):
            assemble(UGraph(1, []), [ADD_VERTEX], 1, mode="sample")

from __future__ import annotations

import numpy as np
import pytest

from conftest import random_dag
from dagnet.errors import SizeError
from dagnet.graph import Dag, canonical_code, is_isomorphic, path_dag
from dagnet.themes import collapse, enumerate_cts, in_theme_class, is_computational_theme

DIAMOND = Dag.from_edges(4, [(0, 1), (0, 2), (1, 3), (2, 3)])


class TestThemeCheck:
    def test_path(self):
        assert is_computational_theme(path_dag(3)).is_theme

    def test_single_edge(self):
        report = is_computational_theme(path_dag(2))
        assert not report.is_theme and "1" in report.conditions()

    def test_diamond_duplicates(self):
        report = is_computational_theme(DIAMOND)
        assert not report.is_theme
        witnesses = [v.detail for v in report.violations if v.condition == "3"]
        assert witnesses == [(1, 2)]

    def test_disconnected_and_multi_root(self):
        report = is_computational_theme(Dag.from_edges(4, [(0, 1), (2, 3)]))
        assert {"connectivity", "root_sink"} <= set(report.conditions())

    def test_dead_end_inner(self):
        report = is_computational_theme(Dag.from_edges(4, [(0, 1), (1, 3), (0, 2), (2, 3), (0, 3)]))
        assert not report.is_theme  # 1 and 2 share neighborhoods


class TestCollapse:
    def test_diamond(self):
        c = collapse(DIAMOND)
        assert c.order == 3 and is_isomorphic(c, path_dag(3))

    def test_path_fixed(self):
        assert collapse(path_dag(3)) == path_dag(3)

    def test_idempotent_and_distinct(self):
        rng = np.random.default_rng(0)
        for _ in range(500):
            g = random_dag(rng, int(rng.integers(1, 8)), float(rng.random()))
            c = collapse(g)
            assert collapse(c) == c
            sigs = {(frozenset(c.predecessors[v]), frozenset(c.successors[v])) for v in range(c.order)}
            assert len(sigs) == c.order

    def test_in_class(self):
        wide = Dag.from_edges(5, [(0, 1), (0, 2), (0, 3), (1, 4), (2, 4), (3, 4)])
        assert in_theme_class(wide, path_dag(3))
        assert not in_theme_class(path_dag(4), path_dag(3))


class TestEnumeration:
    def test_order_3(self):
        themes = enumerate_cts(3)
        assert len(themes) == 2
        sizes = sorted(g.size for g in themes)
        assert sizes == [2, 3]

    @pytest.mark.parametrize("order,count", [(4, 8), (5, 80)])
    def test_counts(self, order, count):
        themes = enumerate_cts(order)
        assert len(themes) == count
        assert all(is_computational_theme(g).is_theme for g in themes)
        assert len({canonical_code(g) for g in themes}) == count

    def test_sorted_and_deterministic(self):
        a, b = enumerate_cts(5), enumerate_cts(5)
        assert a == b
        codes = [canonical_code(g) for g in a]
        assert codes == sorted(codes)

    def test_without_dedup(self):
        labeled = enumerate_cts(4, iso_dedup=False)
        assert len(labeled) >= 8
        assert all(is_computational_theme(g).is_theme for g in labeled)

    def test_bounds(self):
        with pytest.raises(SizeError):
            enumerate_cts(2)
        with pytest.raises(SizeError):
            enumerate_cts(8)

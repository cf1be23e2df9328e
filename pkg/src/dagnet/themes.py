"""Computational themes: validation, vertex collapse and exhaustive enumeration.

A computational theme is a connected DAG with a unique source (root) and a
unique sink, at least one inner vertex, and no two vertices sharing the same
pair of in- and out-neighborhoods.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SizeError
from .graph import Dag, canonical_code, canonical_form, is_isomorphic, is_weakly_connected, sinks, sources

MIN_THEME_ORDER = 3
MAX_THEME_ORDER = 7


@dataclass(frozen=True)
class Violation:
    condition: str
    detail: object = None


@dataclass(frozen=True)
class ThemeReport:
    violations: tuple = field(default_factory=tuple)

    @property
    def is_theme(self) -> bool:
        return not self.violations

    def conditions(self) -> set:
        return {v.condition for v in self.violations}


def _neighborhood_signature(g: Dag, v: int) -> tuple:
    return (frozenset(g.predecessors[v]), frozenset(g.successors[v]))


def is_computational_theme(g: Dag) -> ThemeReport:
    """Check every theme condition and report each violation with a witness."""
    found = []
    if not is_weakly_connected(g):
        found.append(Violation("connectivity"))
    src, snk = sources(g), sinks(g)
    if len(src) != 1 or len(snk) != 1:
        found.append(Violation("root_sink", (tuple(src), tuple(snk))))
    root = src[0] if src else None
    sink = snk[0] if snk else None
    inner = [v for v in range(g.order) if v not in (root, sink)]
    if not inner:
        found.append(Violation("1"))
    for v in inner:
        if not g.predecessors[v] or not g.successors[v]:
            found.append(Violation("2", v))
    seen: dict = {}
    for v in range(g.order):
        sig = _neighborhood_signature(g, v)
        if sig in seen:
            found.append(Violation("3", (seen[sig], v)))
        else:
            seen[sig] = v
    return ThemeReport(tuple(found))


def collapse(g: Dag) -> Dag:
    """Merge vertices with identical (in, out) neighborhoods until none remain.

    The lowest id of each class survives; ids are then compacted in order.
    """
    while True:
        rep: dict = {}
        target = list(range(g.order))
        for v in range(g.order):
            sig = _neighborhood_signature(g, v)
            if sig in rep:
                target[v] = rep[sig]
            else:
                rep[sig] = v
        keep = sorted(set(target))
        if len(keep) == g.order:
            return g
        new_id = {v: i for i, v in enumerate(keep)}
        edges = {(new_id[target[u]], new_id[target[v]]) for u, v in g.edges}
        labels = None if g.labels is None else [g.labels[v] for v in keep]
        g = Dag.from_edges(len(keep), edges, labels)


def in_theme_class(g: Dag, theme: Dag) -> bool:
    """Whether ``g`` reduces to ``theme`` under vertex collapse."""
    c = collapse(g)
    return c.order == theme.order and is_isomorphic(c, theme, limit=max(10, c.order))


def _theme_edge_masks(n: int) -> tuple:
    """Edge lists of every theme on ``n`` vertices with 0 as root and n-1 as sink.

    Any theme has a topological order starting at its root and ending at its
    sink, so up to isomorphism it lives on forward edges of that order.
    """
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    masks = np.arange(2 ** len(pairs), dtype=np.uint32)
    out_code = [np.zeros_like(masks) for _ in range(n)]
    in_code = [np.zeros_like(masks) for _ in range(n)]
    for e, (i, j) in enumerate(pairs):
        bit = (masks >> np.uint32(e)) & np.uint32(1)
        out_code[i] |= bit << np.uint32(j)
        in_code[j] |= bit << np.uint32(i)
    ok = np.ones(masks.shape, dtype=bool)
    for v in range(1, n):
        ok &= in_code[v] != 0
    for v in range(n - 1):
        ok &= out_code[v] != 0
    for u in range(n):
        for v in range(u + 1, n):
            ok &= (in_code[u] != in_code[v]) | (out_code[u] != out_code[v])
    return pairs, masks[ok]


def enumerate_cts(order: int, iso_dedup: bool = True) -> list:
    """All computational themes of the given order, sorted by canonical code.

    Without ``iso_dedup`` every root-first, sink-last labeled theme is returned.
    """
    if not MIN_THEME_ORDER <= order <= MAX_THEME_ORDER:
        raise SizeError(f"theme order must lie in [{MIN_THEME_ORDER}, {MAX_THEME_ORDER}]")
    pairs, masks = _theme_edge_masks(order)
    graphs = [Dag.from_edges(order, [pairs[e] for e in range(len(pairs)) if int(m) >> e & 1]) for m in masks]
    if not iso_dedup:
        return graphs
    by_code: dict = {}
    for g in graphs:
        code = canonical_code(g)
        if code not in by_code:
            by_code[code] = g
    return [canonical_form(by_code[c]) for c in sorted(by_code)]

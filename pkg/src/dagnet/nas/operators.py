"""Variation operators and labeled search-space constraints."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ArgumentError, OperatorInapplicableError, RetryExhaustedError
from ..graph import Dag, is_weakly_connected, sinks, sources, topological_sort
from ..rng import randbelow

DEFAULT_ALPHABET = ("CONV_1X1", "CONV_3X3", "MAXPOOL_3X3")


@dataclass(frozen=True)
class SpaceConstraints:
    max_vertices: int = 7
    max_edges: int = 9
    label_alphabet: tuple = DEFAULT_ALPHABET
    input_label: str = "INPUT"
    output_label: str = "OUTPUT"

    def __post_init__(self):
        if not self.label_alphabet:
            raise ArgumentError("label alphabet must not be empty")
        if self.max_vertices < 1 or self.max_edges < 0:
            raise ArgumentError("space limits must be positive")

    def violations(self, g: Dag) -> list:
        out = []
        if g.order > self.max_vertices:
            out.append("max_vertices")
        if g.size > self.max_edges:
            out.append("max_edges")
        src, snk = sources(g), sinks(g)
        if len(src) != 1 or len(snk) != 1:
            out.append("single_source_sink")
        if not is_weakly_connected(g):
            out.append("connectivity")
        if g.labels is None:
            out.append("labels")
        elif len(src) == 1 and len(snk) == 1:
            for v in range(g.order):
                want = (
                    self.input_label if v == src[0] else self.output_label if v == snk[0] else None
                )
                lab = g.labels[v]
                if want is not None and lab != want:
                    out.append(f"io_label:{v}")
                if want is None and lab not in self.label_alphabet:
                    out.append(f"label:{v}")
        return out

    def is_valid(self, g: Dag) -> bool:
        return not self.violations(g)


def io_vertices(g: Dag) -> tuple:
    """(input vertex, output vertex): first source and last sink in topological order."""
    order = topological_sort(g)
    src = set(sources(g))
    snk = set(sinks(g))
    first = next(v for v in order if v in src)
    last = next(v for v in reversed(order) if v in snk)
    return first, last


def fix_io_labels(g: Dag, constraints: SpaceConstraints, rng) -> Dag:
    """Give the io vertices their reserved labels and every other vertex an alphabet label."""
    if g.order == 0:
        return g
    first, last = io_vertices(g)
    labels = list(g.labels) if g.labels is not None else [None] * g.order
    alphabet = constraints.label_alphabet
    for v in range(g.order):
        if v == first:
            labels[v] = constraints.input_label
        elif v == last:
            labels[v] = constraints.output_label
        elif labels[v] not in alphabet:
            labels[v] = alphabet[randbelow(rng, len(alphabet))]
    return g.with_labels(labels)


def _finish(g: Dag, constraints, rng) -> Dag:
    if constraints is not None and g.labels is not None:
        return fix_io_labels(g, constraints, rng)
    return g


def relabel(g: Dag, rng, constraints: SpaceConstraints | None = None) -> Dag:
    """Assign a uniformly drawn alphabet label to a uniformly drawn inner vertex."""
    constraints = constraints or SpaceConstraints()
    if g.order < 3:
        raise OperatorInapplicableError("relabel needs an inner vertex")
    first, last = io_vertices(g)
    inner = [v for v in range(g.order) if v not in (first, last)]
    v = inner[randbelow(rng, len(inner))]
    alphabet = constraints.label_alphabet
    labels = list(g.labels) if g.labels is not None else [alphabet[0]] * g.order
    labels[v] = alphabet[randbelow(rng, len(alphabet))]
    return fix_io_labels(g.with_labels(labels), constraints, rng)


def rewire(g: Dag, rng, constraints: SpaceConstraints | None = None) -> Dag:
    """Swap one outgoing edge of a vertex for a new edge to a later vertex.

    New targets lie strictly after the vertex in the fixed topological order,
    so the result stays acyclic.
    """
    order = topological_sort(g)
    pos = {v: i for i, v in enumerate(order)}
    options = {}
    for v in range(g.order):
        out = set(g.successors[v])
        if not out:
            continue
        fresh = [w for w in order[pos[v] + 1 :] if w not in out]
        if fresh:
            options[v] = sorted(fresh)
    if not options:
        raise OperatorInapplicableError("no vertex can be rewired")
    movable = sorted(options)
    v = movable[randbelow(rng, len(movable))]
    new_target = options[v][randbelow(rng, len(options[v]))]
    old_target = g.successors[v][randbelow(rng, len(g.successors[v]))]
    edges = (set(g.edges) - {(v, old_target)}) | {(v, new_target)}
    return _finish(Dag.from_edges(g.order, edges, g.labels), constraints, rng)


def _contracted(g: Dag, u: int, v: int) -> tuple:
    keep, gone = min(u, v), max(u, v)

    def remap(x):
        x = keep if x == gone else x
        return x - 1 if x > gone else x

    edges = {(remap(a), remap(b)) for a, b in g.edges}
    edges = {(a, b) for a, b in edges if a != b}
    return edges, remap(keep)


def _has_cycle(order: int, edges) -> bool:
    succ = [[] for _ in range(order)]
    indeg = [0] * order
    for a, b in edges:
        succ[a].append(b)
        indeg[b] += 1
    stack = [x for x in range(order) if indeg[x] == 0]
    seen = 0
    while stack:
        x = stack.pop()
        seen += 1
        for y in succ[x]:
            indeg[y] -= 1
            if indeg[y] == 0:
                stack.append(y)
    return seen != order


def contract(g: Dag, rng, constraints: SpaceConstraints | None = None) -> Dag:
    """Merge the endpoints of a uniformly drawn edge whose contraction stays acyclic."""
    legal = []
    for u, v in sorted(g.edges):
        edges, merged = _contracted(g, u, v)
        if not _has_cycle(g.order - 1, edges):
            legal.append((u, v, edges, merged))
    if not legal:
        raise OperatorInapplicableError("no edge can be contracted without a cycle")
    u, v, edges, merged = legal[randbelow(rng, len(legal))]
    labels = None
    if g.labels is not None:
        gone = max(u, v)
        labels = [lab for x, lab in enumerate(g.labels) if x != gone]
        alphabet = (constraints or SpaceConstraints()).label_alphabet
        labels[merged] = alphabet[randbelow(rng, len(alphabet))]
    return _finish(Dag.from_edges(g.order - 1, edges, labels), constraints, rng)


def distract(g: Dag, rng, constraints: SpaceConstraints | None = None, duplicate_label: bool = False) -> Dag:
    """Split a uniformly drawn vertex: a new vertex takes over its out-edges."""
    if g.order == 0:
        raise OperatorInapplicableError("empty graph has no vertex to split")
    v = randbelow(rng, g.order)
    n = g.order
    edges = {(a, b) for a, b in g.edges if a != v}
    edges |= {(n, b) for b in g.successors[v]}
    edges.add((v, n))
    labels = None
    if g.labels is not None:
        alphabet = (constraints or SpaceConstraints()).label_alphabet
        new = g.labels[v] if duplicate_label else alphabet[randbelow(rng, len(alphabet))]
        labels = list(g.labels) + [new]
    return _finish(Dag.from_edges(n + 1, edges, labels), constraints, rng)


OPERATORS = {"relabel": relabel, "rewire": rewire, "contract": contract, "distract": distract}


def vary_until_valid(g: Dag, op, constraints: SpaceConstraints, rng, max_tries: int = 20) -> Dag:
    """Apply ``op`` until its output satisfies ``constraints``."""
    if isinstance(op, str):
        op = OPERATORS[op]
    for _ in range(max_tries):
        try:
            h = op(g, rng, constraints)
        except OperatorInapplicableError:
            continue
        if constraints.is_valid(h):
            return h
    raise RetryExhaustedError(f"no valid variation within {max_tries} tries")

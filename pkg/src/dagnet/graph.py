"""Directed acyclic and undirected graph types plus their structural properties.

Vertices are dense integers ``0..order-1``.  Both graph types are immutable
values; every operation returns a new graph.
"""
from __future__ import annotations

import heapq
import itertools
import json
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import ArgumentError, DomainError, FormatError, GraphError, SizeError

DEFAULT_ISO_LIMIT = 10


def _normalize_labels(labels, order):
    if labels is None:
        return None
    if isinstance(labels, dict):
        missing = [v for v in range(order) if v not in labels and str(v) not in labels]
        if missing:
            raise GraphError(f"labels missing for vertices {missing}")
        return tuple(str(labels[v] if v in labels else labels[str(v)]) for v in range(order))
    labels = tuple(str(x) for x in labels)
    if len(labels) != order:
        raise GraphError(f"expected {order} labels, got {len(labels)}")
    return labels


@dataclass(frozen=True)
class Dag:
    """A directed acyclic graph with optional per-vertex labels."""

    order: int
    edges: frozenset
    labels: tuple | None = None

    def __post_init__(self):
        order = int(self.order)
        if order < 0:
            raise GraphError("order must be non-negative")
        edges = frozenset((int(u), int(v)) for u, v in self.edges)
        for u, v in edges:
            if u == v:
                raise GraphError(f"self-loop at vertex {u}")
            if not (0 <= u < order and 0 <= v < order):
                raise GraphError(f"edge ({u}, {v}) has an endpoint outside 0..{order - 1}")
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "labels", _normalize_labels(self.labels, order))
        if len(_kahn(order, self.successors, self.in_degrees)) != order:
            raise GraphError("edge relation contains a directed cycle")

    @classmethod
    def from_edges(cls, order: int, edges: Iterable[tuple[int, int]] = (), labels=None) -> "Dag":
        return cls(order, frozenset(edges), labels)

    @property
    def size(self) -> int:
        return len(self.edges)

    @property
    def directed(self) -> bool:
        return True

    @cached_property
    def successors(self) -> tuple:
        out = [[] for _ in range(self.order)]
        for u, v in sorted(self.edges):
            out[u].append(v)
        return tuple(tuple(x) for x in out)

    @cached_property
    def predecessors(self) -> tuple:
        inc = [[] for _ in range(self.order)]
        for u, v in sorted(self.edges):
            inc[v].append(u)
        return tuple(tuple(x) for x in inc)

    @cached_property
    def in_degrees(self) -> tuple:
        return tuple(len(p) for p in self.predecessors)

    @cached_property
    def out_degrees(self) -> tuple:
        return tuple(len(s) for s in self.successors)

    def sorted_edges(self) -> list:
        return sorted(self.edges)

    def with_labels(self, labels) -> "Dag":
        return Dag(self.order, self.edges, labels)


@dataclass(frozen=True)
class UGraph:
    """A simple undirected graph."""

    order: int
    edges: frozenset

    def __post_init__(self):
        order = int(self.order)
        if order < 0:
            raise GraphError("order must be non-negative")
        edges = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise GraphError(f"self-loop at vertex {u}")
            if not (0 <= u < order and 0 <= v < order):
                raise GraphError(f"edge {{{u}, {v}}} has an endpoint outside 0..{order - 1}")
            edges.add((min(u, v), max(u, v)))
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "edges", frozenset(edges))

    @classmethod
    def from_edges(cls, order: int, edges: Iterable[tuple[int, int]] = ()) -> "UGraph":
        return cls(order, frozenset(edges))

    labels = None

    @property
    def size(self) -> int:
        return len(self.edges)

    @property
    def directed(self) -> bool:
        return False

    @cached_property
    def neighbors(self) -> tuple:
        nb = [set() for _ in range(self.order)]
        for u, v in self.edges:
            nb[u].add(v)
            nb[v].add(u)
        return tuple(tuple(sorted(x)) for x in nb)

    @cached_property
    def degrees(self) -> tuple:
        return tuple(len(n) for n in self.neighbors)

    def sorted_edges(self) -> list:
        return sorted(self.edges)


Graph = Union[Dag, UGraph]


@dataclass(frozen=True)
class Layering:
    layer_of: tuple
    layers: tuple

    @property
    def depth(self) -> int:
        return len(self.layers) - 1


def _kahn(order, successors, in_degrees):
    indeg = list(in_degrees)
    heap = [v for v in range(order) if indeg[v] == 0]
    heapq.heapify(heap)
    out = []
    while heap:
        u = heapq.heappop(heap)
        out.append(u)
        for v in successors[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                heapq.heappush(heap, v)
    return out


def topological_sort(g: Dag) -> list:
    """Topological order with ties broken by ascending vertex id."""
    return _kahn(g.order, g.successors, g.in_degrees)


def layering(g: Dag) -> Layering:
    """Longest-path layering; sources sit in layer 0."""
    layer = [0] * g.order
    for v in topological_sort(g):
        preds = g.predecessors[v]
        layer[v] = max(layer[p] for p in preds) + 1 if preds else 0
    depth = max(layer, default=-1)
    layers = [[] for _ in range(depth + 1)]
    for v in range(g.order):
        layers[layer[v]].append(v)
    return Layering(tuple(layer), tuple(tuple(x) for x in layers))


def sources(g: Dag) -> list:
    return [v for v in range(g.order) if g.in_degrees[v] == 0]


def sinks(g: Dag) -> list:
    return [v for v in range(g.order) if g.out_degrees[v] == 0]


def undirected_shadow(g: Graph) -> UGraph:
    if isinstance(g, UGraph):
        return g
    return UGraph.from_edges(g.order, g.edges)


def _adjacency_lists(g: Graph) -> tuple:
    return g.successors if isinstance(g, Dag) else g.neighbors


def bfs_distances(g: Graph, source: int) -> dict:
    """Hop distances from ``source`` to every reachable vertex (incl. itself)."""
    adj = _adjacency_lists(g)
    dist = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if w not in dist:
                dist[w] = dist[u] + 1
                queue.append(w)
    return dist


def weakly_connected_components(g: Graph) -> list:
    shadow = undirected_shadow(g)
    seen = [False] * g.order
    comps = []
    for s in range(g.order):
        if seen[s]:
            continue
        comp = sorted(bfs_distances(shadow, s))
        for v in comp:
            seen[v] = True
        comps.append(comp)
    return comps


def is_weakly_connected(g: Graph) -> bool:
    return g.order > 0 and len(weakly_connected_components(g)) == 1


def density(g: Graph) -> float:
    n = g.order
    if n < 2:
        raise DomainError("density is undefined for graphs of order < 2")
    m = g.size
    if isinstance(g, Dag):
        return m / (n * (n - 1))
    return 2 * m / (n * (n - 1))


def avg_path_length(g: Graph) -> float:
    """Characteristic path length; unreachable ordered pairs contribute 0."""
    n = g.order
    if n < 2:
        raise DomainError("average path length is undefined for graphs of order < 2")
    total = sum(sum(bfs_distances(g, s).values()) for s in range(n))
    return total / (n * (n - 1))


def closeness_centrality(g: UGraph, v: int) -> float:
    n = g.order
    if n < 2:
        raise DomainError("closeness is undefined for graphs of order < 2")
    if not 0 <= v < n:
        raise ArgumentError(f"vertex {v} not in graph")
    dist = bfs_distances(g, v)
    total = sum(dist.values())
    if total == 0:
        return 0.0
    reach = len(dist) - 1
    return (reach / total) * (reach / (n - 1))


def clustering_coefficients(g: UGraph) -> tuple:
    """Per-vertex local clustering and their mean; degree < 2 gives 0."""
    g = undirected_shadow(g)
    nb = [set(x) for x in g.neighbors]
    values = []
    for v in range(g.order):
        k = len(nb[v])
        if k < 2:
            values.append(0.0)
            continue
        links = sum(1 for a, b in itertools.combinations(sorted(nb[v]), 2) if b in nb[a])
        values.append(2.0 * links / (k * (k - 1)))
    mean = float(np.mean(values)) if values else 0.0
    return values, mean


def eccentricities(g: UGraph) -> tuple:
    """Eccentricity of each vertex within its component, and the diameter."""
    g = undirected_shadow(g)
    ecc = [max(bfs_distances(g, v).values()) for v in range(g.order)]
    return ecc, max(ecc, default=0)


def _check_perm(perm: Sequence[int], n: int) -> list:
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(n)):
        raise ArgumentError(f"{perm} is not a permutation of 0..{n - 1}")
    return perm


def adjacency_matrix(g: Graph, perm: Sequence[int] | None = None) -> np.ndarray:
    """Binary adjacency matrix; vertex ``v`` is placed at row/column ``perm[v]``."""
    n = g.order
    perm = list(range(n)) if perm is None else _check_perm(perm, n)
    a = np.zeros((n, n), dtype=np.int8)
    for u, v in g.edges:
        a[perm[u], perm[v]] = 1
        if not g.directed:
            a[perm[v], perm[u]] = 1
    return a


def permute(g: Graph, perm: Sequence[int]) -> Graph:
    """Relabel vertex ``v`` as ``perm[v]``."""
    perm = _check_perm(perm, g.order)
    edges = [(perm[u], perm[v]) for u, v in g.edges]
    if isinstance(g, UGraph):
        return UGraph.from_edges(g.order, edges)
    labels = None
    if g.labels is not None:
        new = [None] * g.order
        for v, lab in enumerate(g.labels):
            new[perm[v]] = lab
        labels = new
    return Dag.from_edges(g.order, edges, labels)


def _vertex_invariants(g: Graph) -> list:
    if isinstance(g, Dag):
        base = [(g.in_degrees[v], g.out_degrees[v]) for v in range(g.order)]
    else:
        base = [(g.degrees[v],) for v in range(g.order)]
    labels = g.labels
    if labels is not None:
        base = [b + (labels[v],) for v, b in enumerate(base)]
    return base


def _refined_colors(g: Graph, rounds: int = 3) -> list:
    """Color refinement; colors are iso-invariant integers."""
    inv = _vertex_invariants(g)
    palette = {c: i for i, c in enumerate(sorted(set(inv)))}
    colors = [palette[c] for c in inv]
    if isinstance(g, Dag):
        outs, ins = g.successors, g.predecessors
    else:
        outs = ins = g.neighbors
    for _ in range(rounds):
        sig = [
            (colors[v], tuple(sorted(colors[w] for w in outs[v])), tuple(sorted(colors[w] for w in ins[v])))
            for v in range(g.order)
        ]
        palette = {c: i for i, c in enumerate(sorted(set(sig)))}
        new = [palette[s] for s in sig]
        if len(set(new)) == len(set(colors)):
            colors = new
            break
        colors = new
    return colors


def is_isomorphic(g1: Graph, g2: Graph, limit: int = DEFAULT_ISO_LIMIT) -> bool:
    """Brute-force isomorphism test via backtracking over vertex bijections."""
    if type(g1) is not type(g2):
        raise ArgumentError("graphs must be of the same kind")
    if max(g1.order, g2.order) > limit:
        raise SizeError(f"isomorphism check limited to order <= {limit}")
    if g1.order != g2.order or g1.size != g2.size:
        return False
    if (g1.labels is None) != (g2.labels is None):
        return False
    inv1, inv2 = _vertex_invariants(g1), _vertex_invariants(g2)
    if sorted(inv1) != sorted(inv2):
        return False
    n = g1.order
    a1, a2 = adjacency_matrix(g1), adjacency_matrix(g2)
    order = sorted(range(n), key=lambda v: (-(a1[v].sum() + a1[:, v].sum()), v))
    mapping = [-1] * n
    used = [False] * n

    def extend(depth):
        if depth == n:
            return True
        u = order[depth]
        for w in range(n):
            if used[w] or inv1[u] != inv2[w]:
                continue
            ok = True
            for prev in order[:depth]:
                pw = mapping[prev]
                if a1[u, prev] != a2[w, pw] or a1[prev, u] != a2[pw, w]:
                    ok = False
                    break
            if not ok:
                continue
            mapping[u] = w
            used[w] = True
            if extend(depth + 1):
                return True
            used[w] = False
            mapping[u] = -1
        return False

    return extend(0)


def canonical_code(g: Graph) -> tuple:
    """Iso-invariant code: minimal adjacency bit string over color-respecting orders.

    Vertices are first ordered by refined color; the minimum is then taken over
    every permutation inside each color class, so two graphs share a code iff
    they are isomorphic.
    """
    n = g.order
    colors = _refined_colors(g)
    inv = _vertex_invariants(g)
    classes = [sorted(v for v in range(n) if colors[v] == c) for c in sorted(set(colors))]
    color_inv = tuple(inv[cls[0]] for cls in classes for _ in cls)
    if n == 0:
        return (0, (), ())
    a = adjacency_matrix(g).astype(np.uint8)
    best = None
    for combo in itertools.product(*(itertools.permutations(cls) for cls in classes)):
        order = [v for part in combo for v in part]
        bits = a[np.ix_(order, order)].tobytes()
        if best is None or bits < best:
            best = bits
    return (n, color_inv, best)


def canonical_form(g: Graph) -> Graph:
    """Representative of ``g``'s isomorphism class with canonically ordered vertices."""
    n = g.order
    colors = _refined_colors(g)
    classes = [sorted(v for v in range(n) if colors[v] == c) for c in sorted(set(colors))]
    a = adjacency_matrix(g).astype(np.uint8)
    best, best_order = None, list(range(n))
    for combo in itertools.product(*(itertools.permutations(cls) for cls in classes)):
        order = [v for part in combo for v in part]
        bits = a[np.ix_(order, order)].tobytes()
        if best is None or bits < best:
            best, best_order = bits, order
    perm = [0] * n
    for pos, v in enumerate(best_order):
        perm[v] = pos
    return permute(g, perm)


def concatenate(g1: Dag, g2: Dag) -> Dag:
    """``g2`` followed by ``g1``: every sink of ``g2`` feeds every source of ``g1``."""
    shift = g2.order
    edges = set(g2.edges)
    edges.update((u + shift, v + shift) for u, v in g1.edges)
    edges.update((s, t + shift) for s in sinks(g2) for t in sources(g1))
    labels = None
    if g1.labels is not None and g2.labels is not None:
        labels = g2.labels + g1.labels
    return Dag.from_edges(g1.order + g2.order, edges, labels)


def parallelize(g1: Dag, g2: Dag) -> Dag:
    """Disjoint union with ``g1`` first."""
    shift = g1.order
    edges = set(g1.edges)
    edges.update((u + shift, v + shift) for u, v in g2.edges)
    labels = None
    if g1.labels is not None and g2.labels is not None:
        labels = g1.labels + g2.labels
    elif g2.order == 0:
        labels = g1.labels
    elif g1.order == 0:
        labels = g2.labels
    return Dag.from_edges(g1.order + g2.order, edges, labels)


# -- serialization -----------------------------------------------------------

def graph_to_dict(g: Graph) -> dict:
    d = {"order": g.order, "edges": [list(e) for e in g.sorted_edges()]}
    if g.labels is not None:
        d["labels"] = {str(v): lab for v, lab in enumerate(g.labels)}
    d["directed"] = g.directed
    return d


def graph_from_dict(d: dict) -> Graph:
    try:
        order = int(d["order"])
        edges = [tuple(e) for e in d["edges"]]
        directed = bool(d.get("directed", True))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed graph document: {exc}") from exc
    if any(len(e) != 2 for e in edges):
        raise FormatError("every edge must be a pair")
    if directed:
        return Dag.from_edges(order, edges, d.get("labels"))
    return UGraph.from_edges(order, edges)


def dumps_graph(g: Graph) -> str:
    return json.dumps(graph_to_dict(g), sort_keys=False) + "\n"


def loads_graph(text: str) -> Graph:
    try:
        return graph_from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise FormatError(str(exc)) from exc


def path_dag(n: int) -> Dag:
    return Dag.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def invariant_key(g: Graph) -> tuple:
    """Cheap isomorphism-invariant fingerprint used to bucket candidates."""
    colors = _refined_colors(g)
    inv = _vertex_invariants(g)
    return (g.order, g.size, tuple(sorted(zip(colors, inv))))


def dedup_isomorphic(graphs: Iterable[Graph], limit: int = DEFAULT_ISO_LIMIT) -> list:
    """Keep the first representative of every isomorphism class, in input order."""
    buckets: dict = {}
    kept = []
    for g in graphs:
        bucket = buckets.setdefault(invariant_key(g), [])
        if any(is_isomorphic(g, h, limit=limit) for h in bucket):
            continue
        bucket.append(g)
        kept.append(g)
    return kept

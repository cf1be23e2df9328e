"""Random graph models, exact DAG counting, uniform DAG sampling and assembly sequences."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import ArgumentError, RetryExhaustedError, SizeError
from .graph import (
    DEFAULT_ISO_LIMIT,
    Dag,
    Graph,
    UGraph,
    _check_perm,
    dedup_isomorphic,
    is_weakly_connected,
)
from .rng import randbelow

MAX_DAG_ORDER = 60


# -- exact counting ----------------------------------------------------------

@lru_cache(maxsize=None)
def _b_nk(n: int, k: int) -> int:
    if k == n:
        return 1
    m = n - k
    hook = 2**k - 1
    return sum(hook**s * 2 ** (k * (m - s)) * _a_nk(m, s) for s in range(1, m + 1))


@lru_cache(maxsize=None)
def _a_nk(n: int, k: int) -> int:
    """Labeled DAGs on ``n`` vertices with exactly ``k`` sources."""
    return math.comb(n, k) * _b_nk(n, k)


def _check_order(n: int) -> None:
    if n < 0:
        raise ArgumentError("order must be non-negative")
    if n > MAX_DAG_ORDER:
        raise SizeError(f"order {n} exceeds the limit of {MAX_DAG_ORDER}")


def count_dags_with_sources(n: int, k: int) -> int:
    _check_order(n)
    if not 1 <= k <= n:
        return 0
    return _a_nk(n, k)


def count_dags(n: int) -> int:
    """Number of labeled DAGs on ``n`` vertices (OEIS A003024)."""
    _check_order(n)
    if n == 0:
        return 1
    return sum(_a_nk(n, k) for k in range(1, n + 1))


def count_dags_alternating(n: int) -> int:
    """Inclusion-exclusion recurrence; an independent check of ``count_dags``."""
    _check_order(n)
    a = [1]
    for m in range(1, n + 1):
        a.append(sum((-1) ** (k - 1) * math.comb(m, k) * 2 ** (k * (m - k)) * a[m - k] for k in range(1, m + 1)))
    return a[n]


# -- uniform sampling --------------------------------------------------------

def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def sample_block_sizes(n: int, rng: np.random.Generator) -> list:
    """Source-layer sizes (k_1, k_2, ...) of a uniformly drawn labeled DAG.

    A single uniform integer in ``1..a_n`` is decoded block by block.  Each
    rescaling uses ceiling division so the residual stays uniform on
    ``1..b(m, s)``.
    """
    r = randbelow(rng, count_dags(n)) + 1
    k = 1
    while r > _a_nk(n, k):
        r -= _a_nk(n, k)
        k += 1
    r = _ceil_div(r, math.comb(n, k))
    blocks = [k]
    m = n - k
    while m > 0:
        hook = 2**k - 1
        s = 1
        while True:
            weight = hook**s * 2 ** (k * (m - s))
            t = weight * _a_nk(m, s)
            if r <= t:
                break
            r -= t
            s += 1
        r = _ceil_div(r, math.comb(m, s) * weight)
        blocks.append(s)
        k = s
        m -= s
    return blocks


def _fill_edges(blocks: Sequence[int], rng: np.random.Generator) -> list:
    """Edges between consecutive-order blocks, vertices numbered block by block.

    Every vertex of block i+1 receives at least one edge from block i; edges
    from block i into later blocks are free coin flips.
    """
    starts = np.concatenate(([0], np.cumsum(blocks)))
    n = int(starts[-1])
    edges = []
    for i in range(len(blocks) - 1):
        lo, hi = int(starts[i]), int(starts[i + 1])
        k = hi - lo
        nxt_hi = int(starts[i + 2])
        for v in range(hi, nxt_hi):
            bits = randbelow(rng, 2**k - 1) + 1
            edges.extend((lo + j, v) for j in range(k) if bits >> j & 1)
        if nxt_hi < n:
            coins = rng.integers(0, 2, size=(k, n - nxt_hi))
            for j, t in zip(*np.nonzero(coins)):
                edges.append((lo + int(j), nxt_hi + int(t)))
    return edges


def sample_uniform_dag(n: int, rng: np.random.Generator) -> Dag:
    """Labeled DAG on ``n`` vertices drawn uniformly from all ``count_dags(n)``."""
    _check_order(n)
    if n < 1:
        raise ArgumentError("order must be at least 1")
    blocks = sample_block_sizes(n, rng)
    edges = _fill_edges(blocks, rng)
    perm = rng.permutation(n)
    return Dag.from_edges(n, [(int(perm[u]), int(perm[v])) for u, v in edges])


def sample_uniform_connected_dag(n: int, rng: np.random.Generator, max_trials: int = 20) -> Dag:
    """Uniform weakly connected labeled DAG via rejection."""
    if max_trials < 1:
        raise ArgumentError("max_trials must be positive")
    for _ in range(max_trials):
        g = sample_uniform_dag(n, rng)
        if is_weakly_connected(g):
            return g
    raise RetryExhaustedError(f"no connected DAG of order {n} within {max_trials} trials")


# -- random graph models -----------------------------------------------------

def _pairs(n: int) -> list:
    return list(itertools.combinations(range(n), 2))


def sample_gil(n: int, p: float, rng: np.random.Generator) -> UGraph:
    """Gilbert model: every vertex pair is an edge independently with probability ``p``."""
    if not 0.0 <= p <= 1.0:
        raise ArgumentError("p must lie in [0, 1]")
    pairs = _pairs(n)
    keep = rng.random(len(pairs)) < p
    return UGraph.from_edges(n, [e for e, k in zip(pairs, keep) if k])


def sample_er(n: int, m: int, rng: np.random.Generator) -> UGraph:
    """Erdos-Renyi model: uniform over graphs with exactly ``m`` edges."""
    pairs = _pairs(n)
    if not 0 <= m <= len(pairs):
        raise ArgumentError(f"m must lie in [0, {len(pairs)}]")
    chosen = rng.choice(len(pairs), size=m, replace=False)
    return UGraph.from_edges(n, [pairs[i] for i in sorted(chosen)])


def sample_ws(n: int, k: int, p: float, rng: np.random.Generator) -> UGraph:
    """Watts-Strogatz: ring lattice of even degree ``k``, edges rewired with probability ``p``."""
    if k < 0 or k % 2 or k >= n:
        raise ArgumentError("k must be even, non-negative and below n")
    if not 0.0 <= p <= 1.0:
        raise ArgumentError("p must lie in [0, 1]")
    nbrs = [set() for _ in range(n)]
    lattice = []
    for j in range(1, k // 2 + 1):
        for u in range(n):
            v = (u + j) % n
            lattice.append((u, v))
            nbrs[u].add(v)
            nbrs[v].add(u)
    for u, v in lattice:
        if rng.random() >= p:
            continue
        options = [w for w in range(n) if w != u and w not in nbrs[u]]
        if not options:
            continue
        w = options[randbelow(rng, len(options))]
        nbrs[u].discard(v)
        nbrs[v].discard(u)
        nbrs[u].add(w)
        nbrs[w].add(u)
    edges = {(min(u, w), max(u, w)) for u in range(n) for w in nbrs[u]}
    return UGraph.from_edges(n, edges)


def sample_ba(n: int, m: int, rng: np.random.Generator) -> UGraph:
    """Barabasi-Albert growth from a star on ``m + 1`` vertices."""
    if not 1 <= m < n:
        raise ArgumentError("need 1 <= m < n")
    edges = [(0, leaf) for leaf in range(1, m + 1)]
    endpoints = [x for e in edges for x in e]
    for v in range(m + 1, n):
        targets: set = set()
        while len(targets) < m:
            targets.add(endpoints[randbelow(rng, len(endpoints))])
        for t in sorted(targets):
            edges.append((t, v))
            endpoints.extend((t, v))
    return UGraph.from_edges(n, edges)


def orient_to_dag(g: UGraph, perm: Sequence[int]) -> Dag:
    """Point every edge from the lower to the higher ``perm`` rank."""
    perm = _check_perm(perm, g.order)
    return Dag.from_edges(g.order, [(u, v) if perm[u] < perm[v] else (v, u) for u, v in g.edges])


# -- assembly sequences ------------------------------------------------------

@dataclass(frozen=True)
class AssemblyOp:
    """One growth step; ``custom`` ops supply a function graph -> realizations."""

    kind: str
    expand: Callable[[Graph], list] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("add_vertex", "add_triangle", "custom"):
            raise ArgumentError(f"unknown assembly op {self.kind!r}")
        if self.kind == "custom" and self.expand is None:
            raise ArgumentError("custom assembly ops need an expand function")

    def realizations(self, g: Graph) -> list:
        if self.kind == "custom":
            return list(self.expand(g))
        if self.kind == "add_vertex":
            return o_add(g)
        return o_triangle(g)


def _grow(g: Graph, new_vertices: int, new_edges) -> Graph:
    n = g.order + new_vertices
    edges = set(g.edges) | set(new_edges)
    if isinstance(g, UGraph):
        return UGraph.from_edges(n, edges)
    labels = None if g.labels is None else g.labels + ("",) * new_vertices
    return Dag.from_edges(n, edges, labels)


def o_add(g: Graph) -> list:
    """Attach one new vertex to each possible existing vertex."""
    n = g.order
    if n == 0:
        return [_grow(g, 1, [])]
    return [_grow(g, 1, [(v, n)]) for v in range(n)]


def o_triangle(g: Graph) -> list:
    """Attach a triangle (two new vertices) to each possible existing vertex."""
    n = g.order
    a, b = n, n + 1
    if n == 0:
        return [_grow(g, 2, [(a, b)])]
    return [_grow(g, 2, [(v, a), (v, b), (a, b)]) for v in range(n)]


ADD_VERTEX = AssemblyOp("add_vertex")
ADD_TRIANGLE = AssemblyOp("add_triangle")


def assemble(
    init: Graph,
    ops: Sequence[AssemblyOp],
    steps: int,
    mode: str = "enumerate",
    rng: np.random.Generator | None = None,
    iso_limit: int = DEFAULT_ISO_LIMIT,
    history: bool = False,
):
    """Apply ``ops`` cyclically for ``steps`` steps starting from ``init``.

    ``enumerate`` returns every non-isomorphic reachable graph (a list, or the
    per-step lists when ``history``); ``sample`` follows one uniformly chosen
    realization per step.
    """
    if steps < 0:
        raise ArgumentError("steps must be non-negative")
    if not ops:
        raise ArgumentError("at least one assembly op is required")
    if mode == "sample":
        if rng is None:
            raise ArgumentError("sample mode needs an rng")
        g = init
        for t in range(steps):
            options = ops[t % len(ops)].realizations(g)
            g = options[randbelow(rng, len(options))]
        return g
    if mode != "enumerate":
        raise ArgumentError(f"unknown mode {mode!r}")
    level = [init]
    levels = [level]
    for t in range(steps):
        candidates = [h for g in level for h in ops[t % len(ops)].realizations(g)]
        if any(h.order > iso_limit for h in candidates):
            raise SizeError(f"assembly exceeds the isomorphism limit of {iso_limit} vertices")
        level = dedup_isomorphic(candidates, limit=iso_limit)
        levels.append(level)
    return levels if history else level

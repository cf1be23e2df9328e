"""Fixed-schema structural feature vector for DAGs."""
from __future__ import annotations

import numpy as np

from .graph import Dag, bfs_distances, density, eccentricities, layering, sinks, sources, undirected_shadow

AGGREGATES = ("min", "max", "median", "mean", "var")
_SCALARS = (
    "graph_num_vertices",
    "graph_num_edges",
    "num_sources",
    "num_sinks",
    "num_hidden",
    "num_layers",
    "num_paths",
    "density",
)
_FAMILIES = ("degree", "undir_ecc", "shortestpaths", "layersize")

FEATURE_NAMES: tuple[str, ...] = _SCALARS + tuple(f"{fam}_{agg}" for fam in _FAMILIES for agg in AGGREGATES)


def _aggregate(prefix: str, values) -> dict:
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return {f"{prefix}_{agg}": 0.0 for agg in AGGREGATES}
    return {
        f"{prefix}_min": float(arr.min()),
        f"{prefix}_max": float(arr.max()),
        f"{prefix}_median": float(np.median(arr)),
        f"{prefix}_mean": float(arr.mean()),
        f"{prefix}_var": float(arr.var()),
    }


def structural_features(g: Dag) -> dict[str, float]:
    """Feature map keyed by ``FEATURE_NAMES``.

    ``num_paths`` counts ordered pairs (s, t), s != t, with a directed path.
    Shortest-path statistics range over those pairs; eccentricities use the
    undirected shadow.  Empty aggregates and the density of a single vertex
    are reported as 0.
    """
    n = g.order
    if n < 1:
        raise ValueError("structural features need at least one vertex")
    src, snk = sources(g), sinks(g)
    hidden = sum(1 for v in range(n) if g.in_degrees[v] > 0 and g.out_degrees[v] > 0)
    lay = layering(g)
    path_lengths = []
    for s in range(n):
        path_lengths.extend(d for t, d in bfs_distances(g, s).items() if t != s)
    ecc, _ = eccentricities(undirected_shadow(g))

    feats = {
        "graph_num_vertices": float(n),
        "graph_num_edges": float(g.size),
        "num_sources": float(len(src)),
        "num_sinks": float(len(snk)),
        "num_hidden": float(hidden),
        "num_layers": float(len(lay.layers)),
        "num_paths": float(len(path_lengths)),
        "density": density(g) if n >= 2 else 0.0,
    }
    degrees = [g.in_degrees[v] + g.out_degrees[v] for v in range(n)]
    feats.update(_aggregate("degree", degrees))
    feats.update(_aggregate("undir_ecc", ecc))
    feats.update(_aggregate("shortestpaths", path_lengths))
    feats.update(_aggregate("layersize", [len(layer) for layer in lay.layers]))
    return {name: feats[name] for name in FEATURE_NAMES}


def feature_matrix(graphs) -> np.ndarray:
    return np.array([[structural_features(g)[k] for k in FEATURE_NAMES] for g in graphs], dtype=float)

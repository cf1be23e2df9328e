"""Masked feed-forward networks whose connectivity is induced by a DAG.

Every graph vertex becomes a block of neurons.  Vertices are grouped into
layers by ``layering``; the pre-activation of layer ``l`` sums contributions
from every earlier layer ``s`` through a weight matrix ``W[s->l]`` whose mask
is nonzero exactly on (target block, source block) pairs joined by an edge.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import ArgumentError
from ..graph import Dag, layering, sinks, sources
from ..rng import make_rng

ACTIVATIONS = ("relu", "sigmoid", "tanh", "identity", "leaky_relu")
SQUASHING = ("sigmoid", "tanh")
INITS = ("normal", "uniform")
MAP_MODES = ("auto", "identity", "affine")


@dataclass(frozen=True)
class BuildSpec:
    input_dim: int
    output_dim: int
    scale: int
    proportion_concentration: float = 100.0
    activation: str = "relu"
    leaky_slope: float = 0.01
    init: str = "normal"
    init_a: float = 0.0
    init_b: float = 0.1
    layer_norm: bool = False
    norm_eps: float = 1e-12
    classifier_softmax: bool = True
    entry: str = "auto"
    exit: str = "auto"
    seed: int = 0

    def __post_init__(self):
        if self.input_dim < 1 or self.output_dim < 1:
            raise ArgumentError("input and output dimensions must be positive")
        if self.scale < 1:
            raise ArgumentError("scale must be positive")
        if not self.proportion_concentration > 0:
            raise ArgumentError("proportion concentration must be positive")
        if self.activation not in ACTIVATIONS:
            raise ArgumentError(f"activation must be one of {ACTIVATIONS}")
        if self.init not in INITS:
            raise ArgumentError(f"init must be one of {INITS}")
        if self.init == "normal" and not self.init_b > 0:
            raise ArgumentError("normal init needs a positive standard deviation")
        if self.init == "uniform" and not self.init_b > self.init_a:
            raise ArgumentError("uniform init needs b > a")
        if self.entry not in MAP_MODES or self.exit not in MAP_MODES:
            raise ArgumentError(f"entry/exit must be one of {MAP_MODES}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "BuildSpec":
        return cls(**d)


def block_sizes(order: int, scale: int, concentration: float, rng: np.random.Generator) -> list:
    """Split ``scale`` neurons over ``order`` vertices by Dirichlet proportions.

    Sizes are floored, the remainder goes one by one to the lowest ids, and a
    vertex left empty takes a neuron from the currently largest block.
    """
    if scale < order:
        raise ArgumentError(f"scale {scale} is smaller than the graph order {order}")
    if order == 0:
        return []
    props = rng.dirichlet(np.full(order, float(concentration)))
    sizes = [int(np.floor(scale * p)) for p in props]
    rest = scale - sum(sizes)
    for v in range(rest):
        sizes[v % order] += 1
    for v in range(order):
        if sizes[v] == 0:
            donor = max(range(order), key=lambda u: (sizes[u], -u))
            sizes[donor] -= 1
            sizes[v] = 1
    return sizes


def wkey(s: int, l: int) -> str:
    return f"W.{s}.{l}"


def _act(kind: str, u: np.ndarray, slope: float) -> np.ndarray:
    if kind == "relu":
        return np.maximum(u, 0.0)
    if kind == "sigmoid":
        return 1.0 / (1.0 + np.exp(-u))
    if kind == "tanh":
        return np.tanh(u)
    if kind == "leaky_relu":
        return np.where(u > 0, u, slope * u)
    return u


def _act_grad(kind: str, u: np.ndarray, a: np.ndarray, slope: float) -> np.ndarray:
    if kind == "relu":
        return (u > 0).astype(float)
    if kind == "sigmoid":
        return a * (1.0 - a)
    if kind == "tanh":
        return 1.0 - a * a
    if kind == "leaky_relu":
        return np.where(u > 0, 1.0, slope)
    return np.ones_like(u)


def softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


@dataclass
class Trace:
    inputs: np.ndarray
    h: dict
    u: dict
    zn: dict
    sigma: dict
    exit_in: np.ndarray
    out: np.ndarray
    pred: np.ndarray


@dataclass
class MaskedNetwork:
    graph: Dag
    spec: BuildSpec
    sizes: list
    params: dict = field(default_factory=dict)
    masks: dict = field(default_factory=dict)
    alive: dict = field(default_factory=dict)
    input_mean: np.ndarray | None = None
    input_std: np.ndarray | None = None

    def __post_init__(self):
        self.layering = layering(self.graph)
        self.depth = self.layering.depth
        self.block = {}
        self.layer_sizes = []
        for l, verts in enumerate(self.layering.layers):
            start = 0
            for v in verts:
                self.block[v] = (l, start, start + self.sizes[v])
                start += self.sizes[v]
            self.layer_sizes.append(start)
        self.sinks = sinks(self.graph)
        self.sources = sources(self.graph)
        self.exit_slices = [self.block[v] for v in self.sinks]
        self.exit_width = sum(hi - lo for _, lo, hi in self.exit_slices)
        self.identity_sinks = self.spec.classifier_softmax and self.spec.activation in SQUASHING
        self._sink_neuron_mask = {}
        for l in range(1, self.depth + 1):
            m = np.zeros(self.layer_sizes[l], dtype=bool)
            for v in self.layering.layers[l]:
                if v in self.sinks:
                    _, lo, hi = self.block[v]
                    m[lo:hi] = True
            self._sink_neuron_mask[l] = m
        if self.input_mean is None:
            self.input_mean = np.zeros(self.spec.input_dim)
            self.input_std = np.ones(self.spec.input_dim)

    # -- structure helpers --------------------------------------------------

    @property
    def has_entry(self) -> bool:
        return "entry.W" in self.params

    @property
    def has_exit(self) -> bool:
        return "exit.W" in self.params

    def weight_keys(self) -> list:
        keys = [k for k in self.params if k.startswith("W.")]
        return sorted(keys, key=lambda k: tuple(int(x) for x in k.split(".")[1:]))

    def incoming(self, l: int) -> list:
        return [(int(k.split(".")[1]), k) for k in self.weight_keys() if int(k.split(".")[2]) == l]

    def vertex_of_neuron(self, l: int, i: int) -> int:
        for v in self.layering.layers[l]:
            _, lo, hi = self.block[v]
            if lo <= i < hi:
                return v
        raise ArgumentError(f"layer {l} has no neuron {i}")

    def num_parameters(self) -> int:
        return sum(int(p.size) for p in self.params.values())

    def copy(self) -> "MaskedNetwork":
        return MaskedNetwork(
            self.graph,
            self.spec,
            list(self.sizes),
            {k: v.copy() for k, v in self.params.items()},
            {k: v.copy() for k, v in self.masks.items()},
            {k: v.copy() for k, v in self.alive.items()},
            self.input_mean.copy(),
            self.input_std.copy(),
        )

    def ensure_weight(self, s: int, l: int) -> str:
        """Create an all-masked ``W[s->l]`` if the pair has no matrix yet."""
        key = wkey(s, l)
        if key not in self.params:
            shape = (self.layer_sizes[l], self.layer_sizes[s])
            self.params[key] = np.zeros(shape)
            self.masks[key] = np.zeros(shape)
        return key

    def check_mask_invariant(self) -> bool:
        return all(np.all(self.params[k][self.masks[k] == 0] == 0.0) for k in self.masks)

    # -- inference ----------------------------------------------------------

    def forward(self, x, trace: bool = False):
        """Network output for one input vector or a batch of row vectors."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        X = x[None, :] if single else x
        if X.ndim != 2 or X.shape[1] != self.spec.input_dim:
            raise ArgumentError(f"expected inputs of dimension {self.spec.input_dim}")
        tr = self._forward(X)
        out = tr.pred
        if trace:
            return (out[0] if single else out), tr
        return out[0] if single else out

    def _forward(self, X: np.ndarray) -> Trace:
        p = self.params
        act = self.spec.activation
        slope = self.spec.leaky_slope
        Xs = (X - self.input_mean) / self.input_std
        if self.has_entry:
            h0 = Xs @ p["entry.W"].T + p["entry.b"]
        else:
            h0 = Xs.copy()
        h = {0: h0 * self.alive["0"]}
        u, zn, sig = {}, {}, {}
        for l in range(1, self.depth + 1):
            z = np.zeros((X.shape[0], self.layer_sizes[l]))
            for s, key in self.incoming(l):
                z += h[s] @ p[key].T
            z += p[f"b.{l}"]
            alive = self.alive[str(l)]
            if self.spec.layer_norm:
                live = alive > 0
                zl = z[:, live]
                mu = zl.mean(axis=1, keepdims=True)
                sd = np.sqrt(zl.var(axis=1, keepdims=True) + self.spec.norm_eps)
                n_ = np.zeros_like(z)
                n_[:, live] = (zl - mu) / sd
                zn[l], sig[l] = n_, sd
                ul = n_ * p[f"gamma.{l}"] + p[f"beta.{l}"]
            else:
                ul = z
            u[l] = ul
            a = _act(act, ul, slope)
            if self.identity_sinks:
                a = np.where(self._sink_neuron_mask[l], ul, a)
            h[l] = a * alive
        exit_in = np.concatenate([h[l][:, lo:hi] for l, lo, hi in self.exit_slices], axis=1)
        if self.has_exit:
            out = exit_in @ p["exit.W"].T + p["exit.b"]
        else:
            out = exit_in
        pred = softmax(out) if self.spec.classifier_softmax else out
        return Trace(X, h, u, zn, sig, exit_in, out, pred)

    # -- gradients ----------------------------------------------------------

    def backward_from(self, tr: Trace, dpred: np.ndarray) -> dict:
        """Gradients of a scalar loss given its derivative w.r.t. the network output."""
        p = self.params
        act = self.spec.activation
        slope = self.spec.leaky_slope
        grads = {k: np.zeros_like(v) for k, v in p.items()}
        if self.spec.classifier_softmax:
            y = tr.pred
            dout = y * (dpred - np.sum(dpred * y, axis=1, keepdims=True))
        else:
            dout = dpred
        if self.has_exit:
            grads["exit.W"] = dout.T @ tr.exit_in
            grads["exit.b"] = dout.sum(axis=0)
            dexit = dout @ p["exit.W"]
        else:
            dexit = dout
        dh = {l: np.zeros_like(tr.h[l]) for l in tr.h}
        col = 0
        for l, lo, hi in self.exit_slices:
            dh[l][:, lo:hi] += dexit[:, col : col + hi - lo]
            col += hi - lo
        for l in range(self.depth, 0, -1):
            alive = self.alive[str(l)]
            da = dh[l] * alive
            ul = tr.u[l]
            g = _act_grad(act, ul, _act(act, ul, slope), slope)
            if self.identity_sinks:
                g = np.where(self._sink_neuron_mask[l], 1.0, g)
            du = da * g
            if self.spec.layer_norm:
                n_ = tr.zn[l]
                grads[f"gamma.{l}"] = np.sum(du * n_, axis=0)
                grads[f"beta.{l}"] = du.sum(axis=0)
                dn = du * p[f"gamma.{l}"]
                live = alive > 0
                dz = np.zeros_like(dn)
                dnl, nl = dn[:, live], n_[:, live]
                dz[:, live] = (
                    dnl - dnl.mean(axis=1, keepdims=True) - nl * np.mean(dnl * nl, axis=1, keepdims=True)
                ) / tr.sigma[l]
            else:
                dz = du
            grads[f"b.{l}"] = dz.sum(axis=0) * self.masks[f"b.{l}"]
            for s, key in self.incoming(l):
                grads[key] = (dz.T @ tr.h[s]) * self.masks[key]
                dh[s] += dz @ p[key]
        if self.has_entry:
            dh0 = dh[0] * self.alive["0"]
            Xs = (tr.inputs - self.input_mean) / self.input_std
            grads["entry.W"] = dh0.T @ Xs
            grads["entry.b"] = dh0.sum(axis=0)
        return grads

    def sgd_step(self, grads: dict, lr: float) -> None:
        """In-place ``theta <- theta - lr * g``; masked entries stay exactly +0.0."""
        for k, g in grads.items():
            new = self.params[k] - lr * g
            mask = self.masks.get(k)
            if mask is not None:
                new = np.where(mask != 0, new, 0.0)
            self.params[k] = new


def _draw(spec: BuildSpec, rng: np.random.Generator, shape) -> np.ndarray:
    if spec.init == "normal":
        return rng.normal(spec.init_a, spec.init_b, size=shape)
    return rng.uniform(spec.init_a, spec.init_b, size=shape)


def _resolve_map(mode: str, a: int, b: int, what: str) -> bool:
    if mode == "identity":
        if a != b:
            raise ArgumentError(f"identity {what} map needs matching widths ({a} vs {b})")
        return False
    if mode == "affine":
        return True
    return a != b


def build_network(g: Dag, spec: BuildSpec) -> MaskedNetwork:
    """Instantiate the masked network induced by ``g``."""
    if g.order < 1:
        raise ArgumentError("graph must have at least one vertex")
    rng = make_rng(spec.seed)
    sizes = block_sizes(g.order, spec.scale, spec.proportion_concentration, rng)
    net = MaskedNetwork(g, spec, sizes)
    lay = net.layering
    pairs = sorted({(lay.layer_of[u], lay.layer_of[v]) for u, v in g.edges})
    for s, l in pairs:
        shape = (net.layer_sizes[l], net.layer_sizes[s])
        mask = np.zeros(shape)
        for u, v in g.edges:
            if lay.layer_of[u] == s and lay.layer_of[v] == l:
                _, ulo, uhi = net.block[u]
                _, vlo, vhi = net.block[v]
                mask[vlo:vhi, ulo:uhi] = 1.0
        net.params[wkey(s, l)] = np.where(mask != 0, _draw(spec, rng, shape), 0.0)
        net.masks[wkey(s, l)] = mask
    for l in range(1, lay.depth + 1):
        n_l = net.layer_sizes[l]
        net.params[f"b.{l}"] = _draw(spec, rng, n_l)
        net.masks[f"b.{l}"] = np.ones(n_l)
        if spec.layer_norm:
            net.params[f"gamma.{l}"] = np.ones(n_l)
            net.params[f"beta.{l}"] = np.zeros(n_l)
    for l in range(lay.depth + 1):
        net.alive[str(l)] = np.ones(net.layer_sizes[l])
    if _resolve_map(spec.entry, spec.input_dim, net.layer_sizes[0], "entry"):
        net.params["entry.W"] = _draw(spec, rng, (net.layer_sizes[0], spec.input_dim))
        net.params["entry.b"] = _draw(spec, rng, net.layer_sizes[0])
    if _resolve_map(spec.exit, net.exit_width, spec.output_dim, "exit"):
        net.params["exit.W"] = _draw(spec, rng, (spec.output_dim, net.exit_width))
        net.params["exit.b"] = _draw(spec, rng, spec.output_dim)
    return net


def extract_graph(net: MaskedNetwork) -> Dag:
    """Block-level structure: an edge wherever a mask block has a nonzero entry."""
    edges = set()
    for key in net.weight_keys():
        mask = net.masks[key]
        s, l = (int(x) for x in key.split(".")[1:])
        for u in net.layering.layers[s]:
            _, ulo, uhi = net.block[u]
            for v in net.layering.layers[l]:
                _, vlo, vhi = net.block[v]
                if np.any(mask[vlo:vhi, ulo:uhi] != 0):
                    edges.add((u, v))
    return Dag.from_edges(net.graph.order, edges, net.graph.labels)

"""Structured pruning: units, attribution, candidate selection and schedules."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ArgumentError
from .neural.network import MaskedNetwork
from .neural.training import TrainScheme, accuracy, evaluate, train
from .shapley import CoalitionalGame, solve

GRANULARITIES = ("weight", "neuron", "block")
CRITERIA = ("random", "magnitude", "shapley")
AMOUNTS = ("k", "p", "bucket")
STOPS = ("steps", "sparsity", "empty", "bucket", "perf")


@dataclass(frozen=True)
class PruneUnit:
    """A prunable element: ``ref`` is ``(key, row, col)``, ``(layer, neuron)`` or a vertex."""

    uid: int
    granularity: str
    ref: tuple
    layer: int


@dataclass(frozen=True)
class PruneConfig:
    granularity: str = "weight"
    criterion: str = "magnitude"
    amount: tuple = ("k", 1)
    scope: str = "global"
    stop: tuple = ("steps", 1)
    retrain_epochs: int = 0
    shapley_method: str = "exact"
    shapley_budget: int = 1000
    max_steps: int = 10_000
    rewire: bool = False

    def __post_init__(self):
        if self.granularity not in GRANULARITIES:
            raise ArgumentError(f"granularity must be one of {GRANULARITIES}")
        if self.criterion not in CRITERIA:
            raise ArgumentError(f"criterion must be one of {CRITERIA}")
        kind, value = self.amount
        if kind not in AMOUNTS:
            raise ArgumentError(f"amount must be one of {AMOUNTS}")
        if kind == "k" and int(value) < 1:
            raise ArgumentError("k must be positive")
        if kind == "p" and not 0 < float(value) <= 1:
            raise ArgumentError("p must lie in (0, 1]")
        if self.scope not in ("global", "layer"):
            raise ArgumentError("scope must be 'global' or 'layer'")
        kind, value = self.stop
        if kind not in STOPS:
            raise ArgumentError(f"stop must be one of {STOPS}")
        if kind == "steps" and int(value) < 0:
            raise ArgumentError("step count must be non-negative")
        if kind == "sparsity" and not 0 <= float(value) <= 1:
            raise ArgumentError("target sparsity must lie in [0, 1]")


# -- units -------------------------------------------------------------------

def _hidden_vertices(net: MaskedNetwork) -> list:
    g = net.graph
    return [v for v in range(g.order) if g.in_degrees[v] > 0 and g.out_degrees[v] > 0]


def enumerate_units(net: MaskedNetwork, granularity: str) -> list:
    """All currently live units of the given granularity, in a stable order."""
    units = []
    if granularity == "weight":
        for key in net.weight_keys():
            l = int(key.split(".")[2])
            rows, cols = np.nonzero(net.masks[key])
            for i, j in zip(rows.tolist(), cols.tolist()):
                units.append(PruneUnit(len(units), "weight", (key, i, j), l))
    elif granularity == "neuron":
        for v in _hidden_vertices(net):
            l, lo, hi = net.block[v]
            for i in range(lo, hi):
                if net.alive[str(l)][i] > 0:
                    units.append(PruneUnit(len(units), "neuron", (l, i), l))
    elif granularity == "block":
        for v in _hidden_vertices(net):
            l, lo, hi = net.block[v]
            if np.any(net.alive[str(l)][lo:hi] > 0):
                units.append(PruneUnit(len(units), "block", (v,), l))
    else:
        raise ArgumentError(f"unknown granularity {granularity!r}")
    return units


def is_live(net: MaskedNetwork, unit: PruneUnit) -> bool:
    if unit.granularity == "weight":
        key, i, j = unit.ref
        return net.masks[key][i, j] != 0
    if unit.granularity == "neuron":
        l, i = unit.ref
        return net.alive[str(l)][i] > 0
    l, lo, hi = net.block[unit.ref[0]]
    return bool(np.any(net.alive[str(l)][lo:hi] > 0))


def _neurons_of(net: MaskedNetwork, unit: PruneUnit) -> list:
    if unit.granularity == "neuron":
        return [unit.ref]
    l, lo, hi = net.block[unit.ref[0]]
    return [(l, i) for i in range(lo, hi)]


def _incoming_l1(net: MaskedNetwork, l: int, i: int) -> float:
    return float(sum(np.abs(net.params[key][i]).sum() for _, key in net.incoming(l)))


# -- attribution -------------------------------------------------------------

def magnitude_scores(net: MaskedNetwork, units: list) -> dict:
    """l1 norm of a weight, or of all incoming weights of the unit's neurons."""
    out = {}
    for u in units:
        if u.granularity == "weight":
            key, i, j = u.ref
            out[u.uid] = float(abs(net.params[key][i, j]))
        else:
            out[u.uid] = sum(_incoming_l1(net, l, i) for l, i in _neurons_of(net, u))
    return out


def shapley_game(net: MaskedNetwork, units: list, X, labels) -> CoalitionalGame:
    """Game whose payoff is the accuracy of the net keeping only the coalition's units."""

    def payoff(mask: int) -> float:
        dropped = [u for k, u in enumerate(units) if not mask >> k & 1]
        return accuracy(prune(net, dropped, rewire=False, warn=False), X, labels)

    return CoalitionalGame([u.uid for u in units], payoff, mask_payoff=True)


def attribute(net: MaskedNetwork, units: list, config: PruneConfig, rng, X=None, labels=None) -> dict:
    if not units:
        raise ArgumentError("no units to attribute")
    if config.criterion == "random":
        draws = rng.random(len(units))
        return {u.uid: float(d) for u, d in zip(units, draws)}
    if config.criterion == "magnitude":
        return magnitude_scores(net, units)
    if X is None or labels is None:
        raise ArgumentError("the Shapley criterion needs evaluation data")
    game = shapley_game(net, units, X, labels)
    res = solve(game, config.shapley_method, config.shapley_budget, rng)
    return {u.uid: res.values[u.uid] for u in units}


# -- selection ---------------------------------------------------------------

def _select_group(items: list, amount: tuple) -> list:
    kind, value = amount
    items = sorted(items, key=lambda t: (t[1], t[0]))
    if kind == "k":
        return [uid for uid, _ in items[: int(value)]]
    if kind == "p":
        return [uid for uid, _ in items[: int(np.floor(float(value) * len(items)))]]
    chosen, total = [], 0.0
    for uid, score in items:
        chosen.append(uid)
        total += score
        if total >= float(value):
            break
    return chosen


def select_candidates(scores: dict, amount: tuple, scope: str = "global", layers: dict | None = None) -> list:
    """Lowest-scored unit ids per the amount rule; ties broken by ascending id."""
    if not scores:
        raise ArgumentError("no scores to select from")
    kind, value = amount
    if kind == "k" and int(value) > len(scores):
        raise ArgumentError(f"k = {value} exceeds the {len(scores)} available units")
    if scope == "global":
        return sorted(_select_group(list(scores.items()), amount))
    if layers is None:
        raise ArgumentError("per-layer scope needs the unit layers")
    groups: dict = {}
    for uid, s in scores.items():
        groups.setdefault(layers[uid], []).append((uid, s))
    out = []
    for l in sorted(groups):
        out.extend(_select_group(groups[l], amount))
    return sorted(out)


# -- pruning -----------------------------------------------------------------

def _kill_neuron(net: MaskedNetwork, l: int, i: int) -> tuple:
    preds, succs = [], []
    for s, key in net.incoming(l):
        for j in np.nonzero(net.masks[key][i])[0].tolist():
            preds.append((s, j))
        net.masks[key][i, :] = 0.0
        net.params[key][i, :] = 0.0
    for key in net.weight_keys():
        s, t = (int(x) for x in key.split(".")[1:])
        if s != l:
            continue
        for k in np.nonzero(net.masks[key][:, i])[0].tolist():
            succs.append((t, k))
        net.masks[key][:, i] = 0.0
        net.params[key][:, i] = 0.0
    net.params[f"b.{l}"][i] = 0.0
    net.masks[f"b.{l}"][i] = 0.0
    net.alive[str(l)][i] = 0.0
    return preds, succs


def prune(net: MaskedNetwork, units: list, rewire: bool = False, warn: bool = True) -> MaskedNetwork:
    """Copy of ``net`` with ``units`` masked out.

    With ``rewire``, every predecessor of a removed neuron is connected to each
    of its successors through a new weight that starts at 0.
    """
    out = net.copy()
    for u in units:
        if not is_live(out, u):
            if warn:
                warnings.warn(f"unit {u.uid} is already pruned", stacklevel=2)
            continue
        if u.granularity == "weight":
            key, i, j = u.ref
            out.masks[key][i, j] = 0.0
            out.params[key][i, j] = 0.0
            continue
        removed = set(_neurons_of(out, u))
        preds, succs = set(), set()
        for l, i in sorted(removed):
            p, s = _kill_neuron(out, l, i)
            preds.update(p)
            succs.update(s)
        if rewire:
            preds -= removed
            succs -= removed
            for s, j in sorted(preds):
                if not out.alive[str(s)][j] > 0:
                    continue
                for t, k in sorted(succs):
                    if not out.alive[str(t)][k] > 0:
                        continue
                    key = out.ensure_weight(s, t)
                    if out.masks[key][k, j] == 0:
                        out.masks[key][k, j] = 1.0
                        out.params[key][k, j] = 0.0
    return out


# -- schedules ---------------------------------------------------------------

@dataclass
class ScheduleStep:
    step: int
    sparsity: float
    accuracy: float
    f1_macro: float
    loss: float
    removed: list = field(default_factory=list)
    removed_score: float = 0.0


def run_schedule(
    net: MaskedNetwork,
    train_set: tuple,
    eval_set: tuple,
    config: PruneConfig,
    scheme: TrainScheme,
    rng,
) -> tuple:
    """Attribute, select, prune and optionally retrain until the stop rule fires.

    ``train_set`` is ``(X, one_hot)`` and ``eval_set`` is ``(X, labels)``.
    Returns the final network and one ``ScheduleStep`` per step, starting
    with the unpruned state as step 0.
    """
    X_eval, y_eval = eval_set
    total = len(enumerate_units(net, config.granularity))
    if total == 0:
        raise ArgumentError(f"the network has no {config.granularity} units")
    retrain = replace(scheme, epochs=max(1, config.retrain_epochs), standardize_inputs=False)

    def record(step, current, removed=(), score=0.0):
        m = evaluate(current, X_eval, y_eval)
        dead = total - len(enumerate_units(current, config.granularity))
        return ScheduleStep(step, dead / total, m["accuracy"], m["f1_macro"], m["loss"], list(removed), score)

    history = [record(0, net)]
    initial_acc = history[0].accuracy
    removed_mass = 0.0
    kind, value = config.stop
    step = 0
    while step < config.max_steps:
        if kind == "steps" and step >= int(value):
            break
        if kind == "sparsity" and history[-1].sparsity >= float(value):
            break
        units = enumerate_units(net, config.granularity)
        if not units:
            break
        scores = attribute(net, units, config, rng, X_eval, y_eval)
        layers = {u.uid: u.layer for u in units}
        chosen = select_candidates(scores, config.amount, config.scope, layers)
        if not chosen:
            break
        by_id = {u.uid: u for u in units}
        net = prune(net, [by_id[c] for c in chosen], rewire=config.rewire)
        if config.retrain_epochs > 0:
            train(net, *train_set, retrain)
        step += 1
        score = float(sum(scores[c] for c in chosen))
        removed_mass += score
        history.append(record(step, net, [by_id[c].ref for c in chosen], score))
        if kind == "bucket" and removed_mass >= float(value):
            break
        if kind == "perf" and history[-1].accuracy < initial_acc - float(value):
            break
    return net, history

"""Evolutionary search over graphs, evaluators and operator studies."""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Protocol

import numpy as np

from ..errors import ArgumentError, OperatorInapplicableError, RetryExhaustedError
from ..generators import sample_uniform_connected_dag, sample_uniform_dag
from ..graph import Dag, density
from ..neural.network import build_network
from ..neural.training import evaluate, train
from ..rng import derive_rng, randbelow
from ..themes import enumerate_cts
from .operators import OPERATORS, SpaceConstraints, fix_io_labels, vary_until_valid

OP_NAMES = ("resample", "relabel", "rewire", "contract", "distract")


@dataclass
class EvalRecord:
    graph: Dag
    score: float
    cost: float = 0.0
    evaluator: str = ""
    seed: tuple = ()
    generation: int = 0


class Evaluator(Protocol):
    tag: str

    def evaluate(self, graph: Dag, rng: np.random.Generator) -> float: ...


class SyntheticEvaluator:
    """Deterministic scores computed from graph structure alone."""

    def __init__(self, name: str = "density", target: float = 0.3):
        kinds = {
            "density": lambda g: 0.0 - abs((density(g) if g.order >= 2 else 0.0) - target),
            "order": lambda g: g.order / 10.0,
            "size": lambda g: g.size / 10.0,
            "constant": lambda g: 0.0,
        }
        if name not in kinds:
            raise ArgumentError(f"unknown synthetic evaluator {name!r}")
        self._fn = kinds[name]
        self.tag = f"synthetic:{name}"

    def evaluate(self, graph: Dag, rng=None) -> float:
        return float(self._fn(graph))


class TrainedEvaluator:
    """Build, train and score the network induced by a graph, averaged over realizations."""

    def __init__(self, train_set, eval_set, spec_template, scheme, realizations: int = 1, metric: str = "accuracy"):
        self.train_set = train_set
        self.eval_set = eval_set
        self.spec = spec_template
        self.scheme = scheme
        self.realizations = realizations
        self.metric = metric
        self.tag = f"trained:{metric}"

    def evaluate(self, graph: Dag, rng) -> float:
        scores = []
        for _ in range(self.realizations):
            seed = int(rng.integers(0, 2**63))
            net = build_network(graph, replace(self.spec, seed=seed))
            train(net, *self.train_set, replace(self.scheme, seed=seed))
            scores.append(evaluate(net, *self.eval_set)[self.metric])
        return float(np.mean(scores))


# -- space samplers ----------------------------------------------------------

def udag_sampler(n: int, connected: bool = True) -> Callable:
    def sample(rng):
        return sample_uniform_connected_dag(n, rng, max_trials=1000) if connected else sample_uniform_dag(n, rng)

    return sample


def theme_sampler(order: int) -> Callable:
    themes = enumerate_cts(order)

    def sample(rng):
        return themes[randbelow(rng, len(themes))]

    return sample


def labeled_sampler(base: Callable, constraints: SpaceConstraints) -> Callable:
    """Wrap a sampler so that every graph carries io and alphabet labels."""

    def sample(rng):
        for _ in range(1000):
            g = base(rng)
            g = fix_io_labels(g.with_labels([""] * g.order), constraints, rng)
            if constraints.is_valid(g):
                return g
        raise RetryExhaustedError("space sampler produced no valid graph")

    return sample


# -- evolution ---------------------------------------------------------------

@dataclass
class EvolutionResult:
    best: EvalRecord
    history: list = field(default_factory=list)
    best_per_generation: list = field(default_factory=list)


def _parse_mix(op_mix: dict) -> tuple:
    names = [k for k in OP_NAMES if op_mix.get(k, 0) > 0]
    unknown = set(op_mix) - set(OP_NAMES)
    if unknown or not names:
        raise ArgumentError(f"op mix needs positive weights over {OP_NAMES}")
    w = np.array([float(op_mix[k]) for k in names])
    return names, w / w.sum()


def _vary(parent: Dag, op: str, sampler, constraints, rng) -> Dag:
    if op == "resample":
        return sampler(rng)
    try:
        if constraints is not None:
            return vary_until_valid(parent, op, constraints, rng)
        return OPERATORS[op](parent, rng)
    except (RetryExhaustedError, OperatorInapplicableError):
        return sampler(rng)


def evolve(
    sampler: Callable,
    evaluator,
    pop_size: int,
    generations: int,
    survivor_fraction: float,
    op_mix: dict,
    constraints: SpaceConstraints | None,
    seed: int,
    threads: int = 1,
) -> EvolutionResult:
    """Elitist evolution: evaluate, keep the best fraction, refill by variation.

    Candidate ``j`` of generation ``t`` draws from its own stream derived from
    ``(seed, t, j)``, so results do not depend on ``threads``.  An operator
    that cannot produce a valid child falls back to resampling.
    """
    if pop_size < 2:
        raise ArgumentError("population size must be at least 2")
    if not 0 < survivor_fraction < 1:
        raise ArgumentError("survivor fraction must lie in (0, 1)")
    if generations < 1:
        raise ArgumentError("need at least one generation")
    names, weights = _parse_mix(op_mix)
    keep = max(1, math.ceil(survivor_fraction * pop_size))

    def score(item):
        t, j, g = item
        start = time.perf_counter()
        s = evaluator.evaluate(g, derive_rng(seed, t, j, 1))
        return EvalRecord(g, float(s), time.perf_counter() - start, evaluator.tag, (seed, t, j), t)

    population = [(0, j, sampler(derive_rng(seed, 0, j, 0))) for j in range(pop_size)]
    survivors: list = []
    history: list = []
    best_curve: list = []
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for t in range(generations):
            fresh = list(pool.map(score, population)) if pool else [score(x) for x in population]
            history.extend(fresh)
            ranked = sorted(survivors + fresh, key=lambda r: (-r.score, r.generation, r.seed))
            survivors = ranked[:keep]
            best_curve.append(survivors[0].score)
            if t == generations - 1:
                break
            population = []
            for j in range(pop_size - keep):
                rng = derive_rng(seed, t + 1, j, 0)
                parent = survivors[randbelow(rng, len(survivors))].graph
                op = names[int(rng.choice(len(names), p=weights))]
                population.append((t + 1, j, _vary(parent, op, sampler, constraints, rng)))
    finally:
        if pool:
            pool.shutdown()
    return EvolutionResult(survivors[0], history, best_curve)


# -- operator studies --------------------------------------------------------

@dataclass
class DeltaRow:
    source: int
    target: int
    source_score: float
    target_score: float
    delta: float
    skipped: bool = False


def operator_study(
    op: str,
    sampler: Callable,
    evaluator,
    n_sources: int = 100,
    n_target: int = 20,
    seed: int = 0,
    constraints: SpaceConstraints | None = None,
) -> list:
    """Score change of ``n_target`` independent applications of ``op`` per sampled source."""
    if n_sources < 1 or n_target < 1:
        raise ArgumentError("n_sources and n_target must be positive")
    if op not in OPERATORS:
        raise ArgumentError(f"unknown operator {op!r}")
    rows = []
    for i in range(n_sources):
        g = sampler(derive_rng(seed, i, 0))
        base = evaluator.evaluate(g, derive_rng(seed, i, 1))
        for j in range(n_target):
            rng = derive_rng(seed, i, j + 2)
            try:
                if constraints is not None:
                    h = vary_until_valid(g, op, constraints, rng)
                else:
                    h = OPERATORS[op](g, rng)
            except (OperatorInapplicableError, RetryExhaustedError):
                rows.append(DeltaRow(i, j, base, float("nan"), float("nan"), True))
                continue
            s = evaluator.evaluate(h, rng)
            rows.append(DeltaRow(i, j, base, s, s - base))
    return rows

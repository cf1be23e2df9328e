from __future__ import annotations

import math

import numpy as np
import pytest

from dagnet.errors import ArgumentError, OperatorInapplicableError, RetryExhaustedError
from dagnet.features import FEATURE_NAMES, feature_matrix
from dagnet.graph import Dag, is_isomorphic, path_dag
from dagnet.nas import (
    SpaceConstraints,
    SyntheticEvaluator,
    contract,
    distract,
    evolve,
    fit_predictor,
    fix_io_labels,
    operator_study,
    pearson,
    r_squared,
    relabel,
    rewire,
    spearman,
    udag_sampler,
    vary_until_valid,
)
from dagnet.rng import derive_rng, make_rng

SPACE = SpaceConstraints()


def labeled(g, seed=0, constraints=SPACE):
    return fix_io_labels(g, constraints, make_rng(seed))


class TestOperators:
    def test_rewire_path(self):
        for s in range(10):
            assert rewire(path_dag(3), make_rng(s)).edges == frozenset({(0, 2), (1, 2)})

    def test_rewire_inapplicable(self):
        with pytest.raises(OperatorInapplicableError):
            rewire(Dag.from_edges(3, [(0, 1), (0, 2), (1, 2)]), make_rng(0))

    def test_contract_path(self):
        out = contract(path_dag(3), make_rng(0))
        assert out == path_dag(2)

    def test_contract_skips_cycles(self):
        # Contracting 0->2 in the transitive triangle would close a cycle through 1.
        tri = Dag.from_edges(3, [(0, 1), (1, 2), (0, 2)])
        for s in range(20):
            out = contract(tri, make_rng(s))
            assert out.order == 2 and out.size == 1

    def test_distract_path(self):
        for s in range(10):
            out = distract(path_dag(3), make_rng(s))
            assert out.order == 4 and is_isomorphic(out, path_dag(4))

    def test_distract_over_limit(self):
        g = labeled(path_dag(7))
        assert SPACE.is_valid(g)
        with pytest.raises(RetryExhaustedError):
            vary_until_valid(g, "distract", SPACE, make_rng(0))

    def test_relabel_single_label(self):
        space = SpaceConstraints(label_alphabet=("CONV",))
        g = labeled(path_dag(5), constraints=space)
        out = relabel(g, make_rng(1), space)
        assert out == g and is_isomorphic(out, g)

    def test_relabel_keeps_io(self):
        g = labeled(path_dag(5))
        rng = make_rng(2)
        for _ in range(30):
            g = relabel(g, rng, SPACE)
            assert g.labels[0] == "INPUT" and g.labels[-1] == "OUTPUT"
            assert SPACE.is_valid(g)

    def test_outputs_stay_valid(self):
        rng = make_rng(3)
        sampler = udag_sampler(5)
        for _ in range(100):
            g = labeled(sampler(rng))
            if not SPACE.is_valid(g):
                continue
            for op in ("relabel", "rewire", "contract", "distract"):
                try:
                    assert SPACE.is_valid(vary_until_valid(g, op, SPACE, rng))
                except RetryExhaustedError:
                    pass

    def test_constraint_violations(self):
        g = Dag.from_edges(3, [(0, 2), (1, 2)])
        assert "single_source_sink" in SPACE.violations(g)
        assert "labels" in SPACE.violations(g)


class TestEvolution:
    def run(self, ops, seed=0, threads=1):
        return evolve(udag_sampler(6), SyntheticEvaluator("density", 0.5), 8, 6, 0.25, ops, None, seed, threads)

    def test_best_monotone(self):
        res = self.run({"rewire": 1, "contract": 1, "distract": 1})
        curve = res.best_per_generation
        assert curve == sorted(curve) and res.best.score == curve[-1]
        assert len(res.history) == 8 + 5 * 6

    def test_resample_only(self):
        res = self.run({"resample": 1})
        assert len(res.best_per_generation) == 6 and all(r.graph.order == 6 for r in res.history)

    def test_threads_do_not_change_results(self):
        a = self.run({"rewire": 1, "resample": 1}, threads=1)
        b = self.run({"rewire": 1, "resample": 1}, threads=3)
        assert [r.graph for r in a.history] == [r.graph for r in b.history]
        assert [r.score for r in a.history] == [r.score for r in b.history]

    def test_bad_arguments(self):
        with pytest.raises(ArgumentError):
            self.run({"mutate": 1})
        with pytest.raises(ArgumentError):
            evolve(udag_sampler(4), SyntheticEvaluator(), 1, 2, 0.5, {"resample": 1}, None, 0)


class TestOperatorStudy:
    def test_constant_evaluator(self):
        rows = operator_study("rewire", udag_sampler(5), SyntheticEvaluator("constant"), 10, 5)
        assert all(r.delta == 0 for r in rows if not r.skipped)

    def test_order_deltas(self):
        ev = SyntheticEvaluator("order")
        up = operator_study("distract", udag_sampler(5), ev, 10, 5)
        down = operator_study("contract", udag_sampler(5), ev, 10, 5)
        assert all(math.isclose(r.delta, 0.1) for r in up)
        assert all(math.isclose(r.delta, -0.1) for r in down if not r.skipped)

    def test_row_count(self):
        rows = operator_study("relabel", udag_sampler(4), SyntheticEvaluator("constant"), 100, 20)
        assert len(rows) == 2000
        assert not any(r.skipped for r in rows)


class TestPredictor:
    def test_mean_predictor(self):
        y = np.array([1.0, 2.0, 4.0, 7.0])
        assert r_squared(y, np.full(4, y.mean())) == 0
        assert r_squared(y, y) == 1

    def test_correlations(self):
        a = np.array([1.0, 5.0, 2.0, 8.0])
        assert spearman(a, a) == 1
        assert spearman(a, -a) == -1
        assert pearson(a, 2 * a + 1) == pytest.approx(1)

    def test_recovers_linear_target(self):
        rng = make_rng(4)
        sampler = udag_sampler(7, connected=False)
        graphs = [sampler(derive_rng(4, i)) for i in range(80)]
        X = feature_matrix(graphs)
        coef = rng.normal(size=len(FEATURE_NAMES))
        model, diag = fit_predictor(graphs, X @ coef + 0.5, seed=1)
        assert diag["r2"] > 0.999
        assert np.allclose(model.predict(graphs), X @ coef + 0.5, atol=1e-6)

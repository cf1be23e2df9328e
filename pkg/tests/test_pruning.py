from __future__ import annotations

import numpy as np
import pytest

from dagnet.errors import ArgumentError
from dagnet.graph import Dag, path_dag
from dagnet.neural import BuildSpec, TrainScheme, accuracy, build_network, train
from dagnet.pruning import (
    PruneConfig,
    attribute,
    enumerate_units,
    magnitude_scores,
    prune,
    run_schedule,
    select_candidates,
    shapley_game,
)
from dagnet.rng import make_rng
from dagnet.shapley import shapley_exact


def toy_data(seed=0, n=60):
    rng = make_rng(seed)
    X = rng.normal(size=(n, 2))
    y = (X[:, 0] > X[:, 1]).astype(int)
    return X, y


def trained_net(graph, scale, seed=0):
    X, y = toy_data(seed)
    net = build_network(graph, BuildSpec(2, 2, scale, proportion_concentration=1e9, seed=seed))
    train(net, X, np.eye(2)[y], TrainScheme(0.1, 10, 5, seed=seed, standardize_inputs=False))
    return net


class TestUnits:
    def test_counts(self):
        net = trained_net(path_dag(4), 12)
        weights = sum(int(net.masks[k].sum()) for k in net.weight_keys())
        assert len(enumerate_units(net, "weight")) == weights
        assert len(enumerate_units(net, "neuron")) == sum(net.layer_sizes[1:3])
        assert len(enumerate_units(net, "block")) == 2
        with pytest.raises(ArgumentError):
            enumerate_units(net, "layer")

    def test_neuron_magnitude(self):
        net = build_network(Dag.from_edges(4, [(0, 2), (1, 2), (2, 3)]), BuildSpec(2, 2, 4, seed=0))
        net.params["W.0.1"][:] = [[0.5, -0.3]]
        units = enumerate_units(net, "neuron")
        assert len(units) == 1
        assert magnitude_scores(net, units)[units[0].uid] == pytest.approx(0.8)


class TestSelection:
    scores = {0: 0.2, 1: 0.4, 2: 0.6, 3: 0.8}

    def test_k(self):
        assert select_candidates(self.scores, ("k", 1)) == [0]

    def test_fraction(self):
        assert select_candidates(self.scores, ("p", 0.5)) == [0, 1]

    def test_bucket(self):
        assert select_candidates(self.scores, ("bucket", 0.7)) == [0, 1, 2]

    def test_k_too_large(self):
        with pytest.raises(ArgumentError):
            select_candidates(self.scores, ("k", 5))

    def test_ties_by_id(self):
        assert select_candidates({3: 1.0, 1: 1.0, 2: 1.0}, ("k", 2)) == [1, 2]

    def test_layer_scope(self):
        layers = {0: 1, 1: 1, 2: 2, 3: 2}
        assert select_candidates(self.scores, ("k", 1), "layer", layers) == [0, 2]


class TestPrune:
    def test_weight_prune_matches_manual_zeroing(self):
        net = trained_net(path_dag(4), 12)
        units = enumerate_units(net, "weight")
        chosen = units[::3]
        pruned = prune(net, chosen)
        manual = net.copy()
        for u in chosen:
            key, i, j = u.ref
            manual.params[key][i, j] = 0.0
        X, _ = toy_data(1)
        assert np.array_equal(pruned.forward(X), manual.forward(X))
        assert pruned.check_mask_invariant()
        assert len(enumerate_units(net, "weight")) == len(units)

    def test_neuron_prune_clears_row_and_column(self):
        net = trained_net(path_dag(4), 12)
        unit = enumerate_units(net, "neuron")[0]
        l, i = unit.ref
        pruned = prune(net, [unit])
        assert pruned.alive[str(l)][i] == 0
        assert all(np.all(pruned.masks[key][i] == 0) for _, key in pruned.incoming(l))
        assert len(enumerate_units(pruned, "neuron")) == len(enumerate_units(net, "neuron")) - 1

    def test_rewire_adds_zero_weights(self):
        net = trained_net(path_dag(3), 9)
        block = enumerate_units(net, "block")[0]
        plain = prune(net, [block])
        wired = prune(net, [block], rewire=True)
        assert "W.0.2" in wired.masks
        assert np.all(wired.masks["W.0.2"] == 1) and np.all(wired.params["W.0.2"] == 0)
        X, _ = toy_data(2)
        assert np.array_equal(wired.forward(X), plain.forward(X))

    def test_repeat_warns(self):
        net = trained_net(path_dag(3), 9)
        unit = enumerate_units(net, "weight")[0]
        once = prune(net, [unit])
        with pytest.warns(UserWarning):
            prune(once, [unit])


class TestSchedule:
    def run(self, **kw):
        net = trained_net(path_dag(4), 12)
        X, y = toy_data(3)
        cfg = PruneConfig(**kw)
        return run_schedule(net, (X, np.eye(2)[y]), (X, y), cfg, TrainScheme(0.1, 10, 1), make_rng(0))

    def test_steps(self):
        _, hist = self.run(stop=("steps", 3))
        assert len(hist) == 4 and hist[0].sparsity == 0

    def test_sparsity_target(self):
        _, hist = self.run(amount=("p", 0.1), stop=("sparsity", 0.5))
        assert hist[-1].sparsity >= 0.5 and hist[-2].sparsity < 0.5

    def test_empty_stops_after_all_units(self):
        _, hist = self.run(granularity="block", stop=("empty", 0))
        assert len(hist) == 3 and hist[-1].sparsity == 1.0

    def test_sparsity_monotone(self):
        for crit in ("random", "magnitude"):
            _, hist = self.run(criterion=crit, amount=("k", 3), stop=("steps", 6), retrain_epochs=1)
            s = [h.sparsity for h in hist]
            assert s == sorted(s)

    def test_bad_config(self):
        with pytest.raises(ArgumentError):
            PruneConfig(amount=("p", 0.0))
        with pytest.raises(ArgumentError):
            PruneConfig(stop=("sparsity", 2))


class TestShapleyAttribution:
    def test_efficiency(self):
        net = trained_net(path_dag(4), 8)
        units = enumerate_units(net, "neuron")
        assert 2 <= len(units) <= 8
        X, y = toy_data(4)
        scores = attribute(net, units, PruneConfig(granularity="neuron", criterion="shapley"), make_rng(0), X, y)
        full = accuracy(net, X, y)
        empty = accuracy(prune(net, units, warn=False), X, y)
        assert sum(scores.values()) == pytest.approx(full - empty)

    def test_game_matches_direct_pruning(self):
        net = trained_net(path_dag(4), 8)
        units = enumerate_units(net, "neuron")
        X, y = toy_data(5)
        game = shapley_game(net, units, X, y)
        assert game.value(game.grand) == accuracy(net, X, y)
        phi = shapley_exact(game).as_array(game.players)
        assert np.isfinite(phi).all()

    def test_needs_data(self):
        net = trained_net(path_dag(3), 6)
        with pytest.raises(ArgumentError):
            attribute(net, enumerate_units(net, "neuron"), PruneConfig(criterion="shapley"), make_rng(0))

from __future__ import annotations

import json

import numpy as np
import pytest

from dagnet.errors import ArgumentError, BudgetError, FormatError, SizeError
from dagnet.rng import derive_rng, make_rng
from dagnet.shapley import (
    LISTING_TABLE,
    CoalitionalGame,
    SvarmSampler,
    game_from_table,
    game_to_dict,
    glove_game,
    listing_game,
    load_game,
    shapley_exact,
    shapley_permutation_mc,
    shapley_stratified,
    shapley_subset_mc,
    shapley_svarm,
    solve,
    stratum_allocation,
    unsc_game,
    verify_min_bound,
)

LISTING = np.array([178.333333333, 68.333333333, 53.333333333])
GLOVE = np.array([1 / 6, 1 / 6, 2 / 3])


def random_game(rng, n):
    table = rng.random(1 << n)
    table[0] = 0.0
    return CoalitionalGame(list(range(n)), lambda m, t=table: t[m], mask_payoff=True)


class TestGames:
    def test_listing_table(self):
        game = listing_game()
        assert game.n == 3 and game.value(game.grand) == 300
        assert game_to_dict(game)["payoffs"] == {k: float(v) for k, v in LISTING_TABLE.items()}

    def test_missing_coalition(self, tmp_path):
        table = dict(LISTING_TABLE)
        del table["ab"]
        with pytest.raises(FormatError):
            game_from_table(["a", "b", "c"], table)
        path = tmp_path / "g.json"
        path.write_text(json.dumps({"players": ["a", "b", "c"], "payoffs": table}))
        with pytest.raises(FormatError):
            load_game(path)

    def test_load_roundtrip(self, tmp_path):
        path = tmp_path / "g.json"
        path.write_text(json.dumps(game_to_dict(listing_game())))
        assert np.allclose(shapley_exact(load_game(path)).as_array("abc"), LISTING)

    def test_duplicate_players(self):
        with pytest.raises(ArgumentError):
            CoalitionalGame([1, 1], lambda s: 0.0)

    def test_memoized(self):
        calls = []
        game = CoalitionalGame([0, 1], lambda s: calls.append(s) or len(s))
        game.value(3)
        game.value(3)
        assert len(calls) == 1 and game.eval_count == 1


class TestExact:
    def test_glove(self):
        assert np.allclose(shapley_exact(glove_game()).as_array([1, 2, 3]), GLOVE)

    def test_listing(self):
        assert np.allclose(shapley_exact(listing_game()).as_array("abc"), LISTING)

    def test_unsc(self):
        game = unsc_game()
        phi = shapley_exact(game).as_array(game.players)
        assert phi.sum() == pytest.approx(1.0)
        assert phi[0] == pytest.approx(421 / 2145)
        assert phi[5] == pytest.approx(4 / 2145)

    def test_axioms(self):
        rng = make_rng(0)
        for _ in range(50):
            n = int(rng.integers(1, 7))
            game = random_game(rng, n)
            phi = shapley_exact(game).as_array(game.players)
            assert phi.sum() == pytest.approx(game.value(game.grand))

    def test_dummy_and_symmetry(self):
        game = CoalitionalGame([0, 1, 2], lambda s: float(len(s & {0, 1}) ** 2))
        phi = shapley_exact(game).as_array([0, 1, 2])
        assert phi[2] == 0 and phi[0] == pytest.approx(phi[1])

    def test_size_limit(self):
        with pytest.raises(SizeError):
            shapley_exact(CoalitionalGame(list(range(21)), lambda s: 0.0))


class TestMonteCarlo:
    def test_all_permutations_exact(self):
        for game, want in ((glove_game(), GLOVE), (listing_game(), LISTING)):
            res = shapley_permutation_mc(game, 0, make_rng(0), all_permutations=True)
            assert np.allclose(res.as_array(game.players), want)
            assert res.samples_used == 6

    def test_exhaustive_subset_exact(self):
        rng = make_rng(1)
        for n in range(1, 7):
            game = random_game(rng, n)
            got = shapley_subset_mc(game, 0, rng, exhaustive=True).as_array(game.players)
            assert np.allclose(got, shapley_exact(game).as_array(game.players))

    def test_permutation_efficiency_per_sample(self):
        game = random_game(make_rng(2), 6)
        phi = shapley_permutation_mc(game, 37, make_rng(3)).as_array(game.players)
        assert phi.sum() == pytest.approx(game.value(game.grand))

    def test_subset_mc_listing(self):
        errs = [
            np.abs(shapley_subset_mc(listing_game(), 5000, derive_rng(4, t)).as_array("abc") - LISTING).mean()
            for t in range(5)
        ]
        assert np.mean(errs) < 5

    def test_determinism(self):
        a = shapley_permutation_mc(listing_game(), 100, make_rng(5)).values
        b = shapley_permutation_mc(listing_game(), 100, make_rng(5)).values
        assert a == b


class TestStratified:
    def test_allocation(self):
        alloc, rest = stratum_allocation(3, 9)
        assert alloc.tolist() == [1, 3, 4] and rest == 1

    def test_small_game_enumerates(self):
        res = shapley_stratified(listing_game(), 30, make_rng(6))
        assert np.allclose(res.as_array("abc"), LISTING)

    def test_converges(self):
        game = random_game(make_rng(7), 8)
        exact = shapley_exact(game).as_array(game.players)
        err = np.abs(shapley_stratified(game, 4000, make_rng(8)).as_array(game.players) - exact).max()
        assert err < 0.03

    def test_needs_m_at_least_n(self):
        with pytest.raises(ArgumentError):
            shapley_stratified(listing_game(), 2, make_rng(0))


class TestSvarm:
    def test_warmup_and_budget(self):
        res = shapley_svarm(listing_game(), 101, make_rng(9))
        assert res.meta["warmup"] == 6
        assert res.samples_used <= 101 and res.samples_used == 6 + 2 * 47

    def test_budget_floor(self):
        with pytest.raises(BudgetError):
            shapley_svarm(listing_game(), 7, make_rng(0))
        shapley_svarm(listing_game(), 8, make_rng(0))

    def test_listing_accuracy(self):
        errs = [
            np.abs(shapley_svarm(listing_game(), 20_000, derive_rng(10, t)).as_array("abc") - LISTING).mean()
            for t in range(5)
        ]
        assert np.mean(errs) < 5

    def test_path_matches_final(self):
        res = shapley_svarm(glove_game(), 200, make_rng(11), return_path=True)
        path = res.meta["path"]
        assert path.shape == (98, 3)
        assert np.allclose(path[-1], res.as_array([1, 2, 3]))

    def test_shapley_sampler_unbiased_uniform_biased(self):
        # Uniform size draws over-weight extreme coalitions on the glove game.
        def mean_error(kind):
            runs = [
                shapley_svarm(glove_game(), 4000, derive_rng(12, t), SvarmSampler(kind)).as_array([1, 2, 3])
                for t in range(40)
            ]
            return np.abs(np.mean(runs, axis=0) - GLOVE).mean()

        assert mean_error("shapley") < 0.02
        assert mean_error("uniform") > 0.1

    def test_unknown_sampler(self):
        with pytest.raises(ArgumentError):
            SvarmSampler("beta")


class TestBound:
    @pytest.mark.parametrize("n", [2, 3])
    def test_minimum(self, n):
        w = verify_min_bound(n)
        assert w.min_phi == pytest.approx(-(n - 1) / n)
        assert w.payoff[""] == 0 and set(w.payoff.values()) <= {0.0, 1.0}

    def test_dispatch(self):
        assert solve(glove_game(), "exact", 0, make_rng(0)).method == "exact"
        with pytest.raises(ArgumentError):
            solve(glove_game(), "kernel", 10, make_rng(0))

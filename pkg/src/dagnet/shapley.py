"""Coalitional games and Shapley value solvers.

Coalitions are bitmasks over player indices ``0..n-1``; player ``i`` is bit
``1 << i``.  Payoffs are memoized per coalition, so a stochastic payoff is
frozen at its first evaluation.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ArgumentError, BudgetError, FormatError, SizeError

MAX_EXACT_PLAYERS = 20
MAX_MASK_PLAYERS = 62


class CoalitionalGame:
    """Players plus a memoized payoff over coalitions.

    ``payoff`` receives a frozenset of player ids, or the raw bitmask when
    ``mask_payoff`` is set.
    """

    def __init__(self, players: Sequence, payoff: Callable, mask_payoff: bool = False):
        self.players = list(players)
        if len(set(self.players)) != len(self.players):
            raise ArgumentError("player ids must be distinct")
        if self.n > MAX_MASK_PLAYERS:
            raise SizeError(f"at most {MAX_MASK_PLAYERS} players are supported")
        self._payoff = payoff
        self._mask_payoff = mask_payoff
        self._memo: dict = {}
        self.calls = 0

    @property
    def n(self) -> int:
        return len(self.players)

    @property
    def eval_count(self) -> int:
        return len(self._memo)

    @property
    def grand(self) -> int:
        return (1 << self.n) - 1

    def members(self, mask: int) -> frozenset:
        return frozenset(p for i, p in enumerate(self.players) if mask >> i & 1)

    def mask_of(self, coalition) -> int:
        index = {p: i for i, p in enumerate(self.players)}
        m = 0
        for p in coalition:
            m |= 1 << index[p]
        return m

    def value(self, mask: int) -> float:
        self.calls += 1
        mask = int(mask)
        if mask not in self._memo:
            arg = mask if self._mask_payoff else self.members(mask)
            self._memo[mask] = float(self._payoff(arg))
        return self._memo[mask]

    def values(self, masks) -> np.ndarray:
        """Vectorized lookup; each distinct coalition is evaluated once."""
        masks = np.asarray(masks, dtype=np.int64)
        uniq, inv = np.unique(masks, return_inverse=True)
        vals = np.array([self.value(int(m)) for m in uniq], dtype=float)
        return vals[inv].reshape(masks.shape)

    def all_values(self) -> np.ndarray:
        if self.n > MAX_EXACT_PLAYERS:
            raise SizeError(f"full enumeration is limited to {MAX_EXACT_PLAYERS} players")
        return np.array([self.value(m) for m in range(1 << self.n)], dtype=float)

    def reset_memo(self) -> None:
        self._memo.clear()
        self.calls = 0


@dataclass
class ShapleyResult:
    values: dict
    method: str
    samples_used: int = 0
    payoff_evals: int = 0
    meta: dict = field(default_factory=dict)

    def as_array(self, players: Sequence) -> np.ndarray:
        return np.array([self.values[p] for p in players], dtype=float)


# -- game construction -------------------------------------------------------

def coalition_key(players: Sequence, members) -> str:
    ids = sorted(str(p) for p in members)
    if all(len(str(p)) == 1 for p in players):
        return "".join(ids)
    return ",".join(ids)


def _parse_key(key: str, players: Sequence) -> frozenset:
    names = {str(p): p for p in players}
    if all(len(str(p)) == 1 for p in players):
        parts = list(key)
    else:
        parts = [x for x in key.split(",") if x]
    if len(set(parts)) != len(parts) or any(x not in names for x in parts):
        raise FormatError(f"coalition key {key!r} does not name distinct players")
    return frozenset(names[x] for x in parts)


def game_from_table(players: Sequence, table: dict) -> CoalitionalGame:
    """Game from an explicit payoff for every coalition (keys like ``"ac"``)."""
    players = list(players)
    n = len(players)
    if n > MAX_EXACT_PLAYERS:
        raise SizeError(f"payoff tables are limited to {MAX_EXACT_PLAYERS} players")
    payoffs = {}
    for key, val in table.items():
        members = _parse_key(str(key), players)
        if members in payoffs:
            raise FormatError(f"coalition {key!r} is listed twice")
        payoffs[members] = float(val)
    missing = [
        coalition_key(players, c)
        for r in range(n + 1)
        for c in itertools.combinations(players, r)
        if frozenset(c) not in payoffs
    ]
    if missing:
        raise FormatError(f"payoff table is missing coalitions {missing[:5]}")
    return CoalitionalGame(players, payoffs.__getitem__)


def game_to_dict(game: CoalitionalGame) -> dict:
    players = [str(p) for p in game.players]
    payoffs = {coalition_key(players, [str(p) for p in game.members(m)]): game.value(m) for m in range(1 << game.n)}
    return {"players": players, "payoffs": payoffs}


def load_game(path) -> CoalitionalGame:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(str(exc)) from exc
    if not isinstance(doc, dict) or "players" not in doc or "payoffs" not in doc:
        raise FormatError("game document needs 'players' and 'payoffs'")
    return game_from_table(doc["players"], doc["payoffs"])


def glove_game() -> CoalitionalGame:
    """Players 1 and 2 hold left gloves, player 3 a right glove."""
    return CoalitionalGame([1, 2, 3], lambda s: 1.0 if len(s) > 1 and 3 in s else 0.0)


def unsc_game(permanent: int = 5, rotating: int = 10, quorum: int = 9) -> CoalitionalGame:
    """Voting game: a motion passes with every permanent member and ``quorum`` votes."""
    n = permanent + rotating
    perm_mask = (1 << permanent) - 1

    def payoff(mask: int) -> float:
        return 1.0 if mask & perm_mask == perm_mask and bin(mask).count("1") >= quorum else 0.0

    return CoalitionalGame(list(range(1, n + 1)), payoff, mask_payoff=True)


LISTING_TABLE = {"": 0, "a": 100, "b": 0, "c": 0, "ab": 150, "ac": 120, "bc": 0, "abc": 300}


def listing_game() -> CoalitionalGame:
    return game_from_table(["a", "b", "c"], LISTING_TABLE)


# -- helpers -----------------------------------------------------------------

def _popcount(masks: np.ndarray) -> np.ndarray:
    masks = np.asarray(masks, dtype=np.int64)
    out = np.zeros(masks.shape, dtype=np.int64)
    m = masks.copy()
    while np.any(m):
        out += m & 1
        m >>= 1
    return out


def shapley_weights(n: int) -> np.ndarray:
    """``w[s] = s! (n-s-1)! / n!`` for coalition sizes ``s = 0..n-1``."""
    return np.array([1.0 / (n * math.comb(n - 1, s)) for s in range(n)])


def _result(game, values, method, samples, evals_before, **meta) -> ShapleyResult:
    return ShapleyResult(
        {p: float(values[i]) for i, p in enumerate(game.players)},
        method,
        int(samples),
        game.eval_count - evals_before,
        dict(meta),
    )


def _random_subsets_of_size(rng, pool: np.ndarray, k: int, count: int) -> np.ndarray:
    """``count`` uniform size-``k`` subsets of ``pool`` as bitmasks."""
    if count == 0:
        return np.zeros(0, dtype=np.int64)
    if k == 0:
        return np.zeros(count, dtype=np.int64)
    keys = rng.random((count, len(pool)))
    picks = pool[np.argsort(keys, axis=1)[:, :k]]
    return np.sum(np.left_shift(np.int64(1), picks.astype(np.int64)), axis=1)


# -- solvers -----------------------------------------------------------------

def shapley_exact(game: CoalitionalGame) -> ShapleyResult:
    """Exact values by the subset formula over all ``2^n`` coalitions."""
    n = game.n
    if n > MAX_EXACT_PLAYERS:
        raise SizeError(f"exact Shapley values are limited to {MAX_EXACT_PLAYERS} players")
    before = game.eval_count
    v = game.all_values()
    masks = np.arange(1 << n, dtype=np.int64)
    sizes = _popcount(masks)
    w = shapley_weights(n) if n else np.zeros(0)
    phi = np.zeros(n)
    for i in range(n):
        without = masks[(masks >> i) & 1 == 0]
        marg = v[without | (1 << i)] - v[without]
        phi[i] = np.sum(w[sizes[without]] * marg)
    return _result(game, phi, "exact", 1 << n, before)


def shapley_permutation_mc(
    game: CoalitionalGame, r: int, rng: np.random.Generator, all_permutations: bool = False
) -> ShapleyResult:
    """Average marginal contribution over ``r`` random orders (or all ``n!``)."""
    n = game.n
    before = game.eval_count
    if all_permutations:
        if n > 10:
            raise SizeError("full permutation iteration is limited to 10 players")
        perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64).reshape(-1, n)
    else:
        if r < 1:
            raise ArgumentError("r must be positive")
        perms = rng.permuted(np.tile(np.arange(n, dtype=np.int64), (r, 1)), axis=1)
    bits = np.left_shift(np.int64(1), perms)
    after = np.cumsum(bits, axis=1)
    prefix = after - bits
    marg = game.values(after) - game.values(prefix)
    phi = np.zeros(n)
    np.add.at(phi, perms.ravel(), marg.ravel())
    phi /= perms.shape[0]
    return _result(game, phi, "perm-mc", perms.shape[0], before)


def shapley_subset_mc(
    game: CoalitionalGame, R: int, rng: np.random.Generator, exhaustive: bool = False
) -> ShapleyResult:
    """Self-normalized weighted average of marginals over random coalitions.

    For player ``i`` every sampled coalition ``S`` without ``i`` contributes
    ``v(S + i) - v(S)`` with weight ``|S|! (n - |S| - 1)!``.
    """
    n = game.n
    before = game.eval_count
    if exhaustive:
        if n > MAX_EXACT_PLAYERS:
            raise SizeError(f"exhaustive sampling is limited to {MAX_EXACT_PLAYERS} players")
        masks = np.arange(1 << n, dtype=np.int64)
    else:
        if R < 1:
            raise ArgumentError("R must be positive")
        masks = rng.integers(0, 1 << n, size=R, dtype=np.int64)
    sizes = _popcount(masks)
    w_all = shapley_weights(n)
    v_masks = game.values(masks)
    phi = np.zeros(n)
    for i in range(n):
        sel = (masks >> i) & 1 == 0
        if not np.any(sel):
            continue
        w = w_all[sizes[sel]]
        marg = game.values(masks[sel] | (1 << i)) - v_masks[sel]
        phi[i] = np.sum(w * marg) / np.sum(w)
    return _result(game, phi, "subset-mc", len(masks), before)


def stratum_allocation(n: int, m: int) -> tuple:
    """Per-stratum sample counts ``floor(m (k+1)^(2/3) / sum_j (j+1)^(2/3))`` and the remainder."""
    weights = np.array([(k + 1) ** (2.0 / 3.0) for k in range(n)])
    alloc = np.floor(m * weights / weights.sum()).astype(int)
    return alloc, int(m - alloc.sum())


def shapley_stratified(game: CoalitionalGame, m: int, rng: np.random.Generator, delta: float = 0.05) -> ShapleyResult:
    """Stratified sampling by coalition size with ``m`` samples per player.

    Leftover samples go first to strata that received none, then to distinct
    uniformly chosen strata.  A stratum whose allocation covers all of its
    coalitions is enumerated exactly.  ``delta`` is only recorded.
    """
    n = game.n
    if m < n:
        raise ArgumentError("m must be at least the number of players")
    before = game.eval_count
    base, rest = stratum_allocation(n, m)
    phi = np.zeros(n)
    used = 0
    for i in range(n):
        alloc = base.copy()
        left = rest
        for k in range(n):
            if left and alloc[k] == 0:
                alloc[k] += 1
                left -= 1
        if left:
            alloc[rng.choice(n, size=left, replace=False)] += 1
        pool = np.array([j for j in range(n) if j != i], dtype=np.int64)
        means = np.zeros(n)
        for k in range(n):
            total = math.comb(n - 1, k)
            if alloc[k] >= total:
                subsets = np.array(
                    [sum(1 << int(j) for j in c) for c in itertools.combinations(pool, k)], dtype=np.int64
                )
            else:
                subsets = _random_subsets_of_size(rng, pool, k, int(alloc[k]))
            used += len(subsets)
            means[k] = np.mean(game.values(subsets | (1 << i)) - game.values(subsets))
        phi[i] = means.mean()
    return _result(game, phi, "stratified", used, before, delta=delta)


# -- SVARM -------------------------------------------------------------------

class SvarmSampler:
    """Coalition distributions used by ``shapley_svarm``.

    ``"shapley"`` draws sizes with probability proportional to ``1/s`` for the
    positive part and ``1/(n-s)`` for the negative part, which makes both
    running means unbiased.  ``"uniform"`` draws sizes uniformly.
    """

    def __init__(self, kind: str = "shapley"):
        if kind not in ("shapley", "uniform"):
            raise ArgumentError(f"unknown SVARM sampler {kind!r}")
        self.kind = kind

    @staticmethod
    def _subsets(rng, n: int, k: np.ndarray) -> np.ndarray:
        """One uniform subset of ``0..n-1`` of size ``k[j]`` per row."""
        ranks = np.argsort(np.argsort(rng.random((len(k), n)), axis=1), axis=1)
        member = ranks < k[:, None]
        return np.sum(member.astype(np.int64) << np.arange(n, dtype=np.int64), axis=1)

    def _sizes(self, rng, sizes: np.ndarray, weights: np.ndarray, count: int) -> np.ndarray:
        if self.kind == "uniform":
            return sizes[rng.integers(0, len(sizes), size=count)]
        return rng.choice(sizes, size=count, p=weights / weights.sum())

    def warmup(self, rng, n: int, i: int) -> int:
        """Coalition of ``N \\ {i}``: uniform size, then uniform members."""
        pool = np.array([j for j in range(n) if j != i], dtype=np.int64)
        k = int(rng.integers(0, n))
        return int(_random_subsets_of_size(rng, pool, k, 1)[0])

    def positive(self, rng, n: int, count: int) -> np.ndarray:
        sizes = np.arange(1, n + 1)
        return self._subsets(rng, n, self._sizes(rng, sizes, 1.0 / sizes, count))

    def negative(self, rng, n: int, count: int) -> np.ndarray:
        sizes = np.arange(0, n)
        return self._subsets(rng, n, self._sizes(rng, sizes, 1.0 / (n - sizes), count))


def shapley_svarm(
    game: CoalitionalGame,
    T: int,
    rng: np.random.Generator,
    sampler: SvarmSampler | None = None,
    return_path: bool = False,
) -> ShapleyResult:
    """Signed running-mean estimator using at most ``T`` payoff queries.

    After a warm-up of ``2n`` queries, each step queries one coalition ``A+``
    (updating the positive mean of its members) and one ``A-`` (updating the
    negative mean of its non-members).  Running means are accumulated with
    cumulative sums; ``return_path`` keeps the estimate after every step in
    ``meta["path"]`` together with the sampled coalitions.
    """
    n = game.n
    if T < 2 * n + 2:
        raise BudgetError(f"budget must be at least 2n + 2 = {2 * n + 2}")
    sampler = sampler or SvarmSampler()
    before = game.eval_count
    plus0 = np.zeros(n)
    minus0 = np.zeros(n)
    for i in range(n):
        a_plus = sampler.warmup(rng, n, i)
        a_minus = sampler.warmup(rng, n, i)
        plus0[i] = game.value(a_plus | (1 << i))
        minus0[i] = game.value(a_minus)
    warmup = 2 * n
    steps = (T - warmup) // 2
    a_plus = sampler.positive(rng, n, steps)
    a_minus = sampler.negative(rng, n, steps)
    v_plus = game.values(a_plus)
    v_minus = game.values(a_minus)
    idx = np.arange(n, dtype=np.int64)
    ins = ((a_plus[:, None] >> idx) & 1).astype(float)
    outs = 1.0 - ((a_minus[:, None] >> idx) & 1).astype(float)
    meta = {"warmup": warmup, "sampler": sampler.kind}
    if return_path:
        sum_p = plus0 + np.vstack([np.zeros(n), np.cumsum(ins * v_plus[:, None], axis=0)])
        cnt_p = 1.0 + np.vstack([np.zeros(n), np.cumsum(ins, axis=0)])
        sum_m = minus0 + np.vstack([np.zeros(n), np.cumsum(outs * v_minus[:, None], axis=0)])
        cnt_m = 1.0 + np.vstack([np.zeros(n), np.cumsum(outs, axis=0)])
        meta.update(path=sum_p / cnt_p - sum_m / cnt_m, plus_coalitions=a_plus, minus_coalitions=a_minus)
    plus = (plus0 + ins.T @ v_plus) / (1.0 + ins.sum(axis=0))
    minus = (minus0 + outs.T @ v_minus) / (1.0 + outs.sum(axis=0))
    return _result(game, plus - minus, "svarm", warmup + 2 * steps, before, **meta)


SOLVERS = {
    "exact": lambda game, budget, rng: shapley_exact(game),
    "perm-mc": lambda game, budget, rng: shapley_permutation_mc(game, budget, rng),
    "subset-mc": lambda game, budget, rng: shapley_subset_mc(game, budget, rng),
    "stratified": lambda game, budget, rng: shapley_stratified(game, budget, rng),
    "svarm": lambda game, budget, rng: shapley_svarm(game, budget, rng),
}


def solve(game: CoalitionalGame, method: str, budget: int, rng: np.random.Generator) -> ShapleyResult:
    if method not in SOLVERS:
        raise ArgumentError(f"unknown Shapley method {method!r}")
    return SOLVERS[method](game, budget, rng)


# -- lower bound verification ------------------------------------------------

@dataclass(frozen=True)
class BoundWitness:
    min_phi: float
    player: int
    payoff: dict  # coalition key -> value


def verify_min_bound(n: int) -> BoundWitness:
    """Smallest Shapley value over every {0,1}-valued payoff with ``v(empty) = 0``."""
    if n not in (2, 3):
        raise ArgumentError("the exhaustive bound check supports n = 2 or 3")
    players = list(range(n))
    coalitions = 1 << n
    best = None
    for bits in range(1 << (coalitions - 1)):
        table = np.zeros(coalitions)
        table[1:] = [(bits >> (m - 1)) & 1 for m in range(1, coalitions)]
        game = CoalitionalGame(players, lambda mask, t=table: t[mask], mask_payoff=True)
        phi = shapley_exact(game).as_array(players)
        i = int(np.argmin(phi))
        if best is None or phi[i] < best[0] - 1e-15:
            best = (float(phi[i]), i, table.copy())
    names = "abc"[:n]
    payoff = {
        "".join(names[j] for j in range(n) if m >> j & 1): float(best[2][m]) for m in range(coalitions)
    }
    return BoundWitness(best[0], best[1], payoff)

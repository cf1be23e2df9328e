"""Linear performance prediction from structural graph features."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from ..errors import ArgumentError
from ..features import FEATURE_NAMES, feature_matrix
from ..rng import make_rng


def r_squared(y, y_hat) -> float:
    """``1 - RSS/TSS``; a constant target scores 1 when fit exactly and 0 otherwise."""
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    rss = float(np.sum((y - y_hat) ** 2))
    tss = float(np.sum((y - y.mean()) ** 2))
    if tss == 0.0:
        return 1.0 if rss == 0.0 else 0.0
    return 1.0 - rss / tss


def pearson(a, b) -> float:
    a = np.asarray(a, dtype=float) - np.mean(a)
    b = np.asarray(b, dtype=float) - np.mean(b)
    denom = np.sqrt(np.sum(a * a) * np.sum(b * b))
    return float(np.sum(a * b) / denom) if denom > 0 else 0.0


def spearman(a, b) -> float:
    """Pearson correlation of average ranks."""
    return pearson(rankdata(a), rankdata(b))


@dataclass
class LinearModel:
    coef: np.ndarray
    intercept: float
    feature_names: tuple = FEATURE_NAMES

    def predict_features(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.coef + self.intercept

    def predict(self, graphs) -> np.ndarray:
        return self.predict_features(feature_matrix(graphs))

    def to_dict(self) -> dict:
        return {
            "intercept": self.intercept,
            "coef": {k: float(c) for k, c in zip(self.feature_names, self.coef)},
        }


def fit_ols(X, y) -> LinearModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    design = np.hstack([np.ones((X.shape[0], 1)), X])
    beta, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < design.shape[1]:
        warnings.warn(f"design matrix is rank deficient ({rank} < {design.shape[1]}); using the minimum-norm fit")
    return LinearModel(beta[1:], float(beta[0]))


def fit_predictor(graphs, scores, seed: int = 0, test_fraction: float = 0.3) -> tuple:
    """OLS from structural features to scores with held-out diagnostics."""
    graphs = list(graphs)
    if len(graphs) != len(scores):
        raise ArgumentError("need one score per graph")
    return fit_predictor_features(feature_matrix(graphs), scores, seed, test_fraction)


def fit_predictor_features(X, scores, seed: int = 0, test_fraction: float = 0.3) -> tuple:
    """Random held-out split, OLS on the rest; returns (model, diagnostics)."""
    X = np.asarray(X, dtype=float)
    scores = np.asarray(scores, dtype=float)
    if X.ndim != 2 or X.shape[0] != len(scores):
        raise ArgumentError("need one feature row per score")
    if not 0 < test_fraction < 1:
        raise ArgumentError("test fraction must lie in (0, 1)")
    n_test = max(2, int(np.floor(test_fraction * len(scores))))
    if len(scores) - n_test < 2:
        raise ArgumentError("too few records for a held-out split")
    perm = make_rng(seed).permutation(len(scores))
    test, train_idx = perm[:n_test], perm[n_test:]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        model = fit_ols(X[train_idx], scores[train_idx])
    pred = model.predict_features(X[test])
    diag = {
        "r2": r_squared(scores[test], pred),
        "pearson": pearson(scores[test], pred),
        "spearman": spearman(scores[test], pred),
        "n_train": int(len(train_idx)),
        "n_test": int(len(test)),
    }
    return model, diag

"""Graph variation operators, evolutionary search and performance prediction."""
from .operators import (
    OPERATORS,
    SpaceConstraints,
    contract,
    distract,
    fix_io_labels,
    relabel,
    rewire,
    vary_until_valid,
)
from .predictor import LinearModel, fit_predictor, fit_predictor_features, pearson, r_squared, spearman
from .search import (
    EvalRecord,
    SyntheticEvaluator,
    TrainedEvaluator,
    evolve,
    labeled_sampler,
    operator_study,
    theme_sampler,
    udag_sampler,
)

__all__ = [
    "OPERATORS",
    "EvalRecord",
    "LinearModel",
    "SpaceConstraints",
    "SyntheticEvaluator",
    "TrainedEvaluator",
    "contract",
    "distract",
    "evolve",
    "fit_predictor",
    "fit_predictor_features",
    "fix_io_labels",
    "labeled_sampler",
    "operator_study",
    "pearson",
    "r_squared",
    "relabel",
    "rewire",
    "spearman",
    "theme_sampler",
    "udag_sampler",
    "vary_until_valid",
]

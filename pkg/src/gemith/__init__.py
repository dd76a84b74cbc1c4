"""Regression ensembles with hyperparameters tuned inside the weight optimization."""

__version__ = "0.1.0"

from .dataset import (
    Dataset,
    DatasetError,
    FoldPlan,
    Friedman1,
    load_bundled,
    load_csv,
    make_fold_plan,
    standardize_apply,
    standardize_fit,
    synthetic_friedman1,
    train_test_split,
)
from .ensembles import (
    METHODS,
    bem,
    enumerate_combinations,
    evaluate,
    fit_methods,
    gem,
    gem_ith,
    select_base_learners,
    stacked,
)
from .estimators import BEMRegressor, GEMITHRegressor, GEMRegressor, StackedRegressor
from .learners import HyperConfig, LearnerSpec, default_spaces
from .oob import OobCache, OobMatrix, oob_matrix, oob_predict
from .search import SearchParams, bayes_candidates
from .simplex_qp import solve_gem_weights

__all__ = [
    "BEMRegressor", "Dataset", "DatasetError", "FoldPlan", "Friedman1", "GEMITHRegressor", "GEMRegressor",
    "HyperConfig", "LearnerSpec", "METHODS", "OobCache", "OobMatrix", "SearchParams", "StackedRegressor",
    "bayes_candidates", "bem", "default_spaces", "enumerate_combinations", "evaluate", "fit_methods", "gem",
    "gem_ith", "load_bundled", "load_csv", "make_fold_plan", "oob_matrix", "oob_predict",
    "select_base_learners", "solve_gem_weights", "stacked", "standardize_apply", "standardize_fit",
    "synthetic_friedman1", "train_test_split",
]

from .linear import ElasticNetRegressor, RidgeRegressor, SingularSystemWarning
from .neighbors import KNNRegressor
from .registry import LEARNERS, FittedModel, default_spaces, fit, make_estimator, predict
from .spaces import Categorical, Continuous, HyperConfig, HyperSpace, Integer, LearnerSpec
from .tree import GradientBoosting, RandomForest, RegressionTree, bagged_tree, build_tree

__all__ = [
    "LEARNERS",
    "Categorical",
    "Continuous",
    "ElasticNetRegressor",
    "FittedModel",
    "GradientBoosting",
    "HyperConfig",
    "HyperSpace",
    "Integer",
    "KNNRegressor",
    "LearnerSpec",
    "RandomForest",
    "RegressionTree",
    "RidgeRegressor",
    "SingularSystemWarning",
    "bagged_tree",
    "build_tree",
    "default_spaces",
    "fit",
    "make_estimator",
    "predict",
]

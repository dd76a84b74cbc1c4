from dataclasses import dataclass

import numpy as np

from ..utils import check_matrix, check_vector
from .linear import ElasticNetRegressor, RidgeRegressor
from .neighbors import KNNRegressor
from .spaces import Categorical, Continuous, HyperSpace, Integer, LearnerSpec
from .tree import GradientBoosting, RandomForest, RegressionTree

# kind -> (estimator class, fixed constructor arguments, takes a seed)
LEARNERS = {
    "ridge": (RidgeRegressor, {}, False),
    "elastic_net": (ElasticNetRegressor, {}, False),
    "knn": (KNNRegressor, {}, False),
    "tree": (RegressionTree, {}, True),
    "random_forest": (RandomForest, {}, True),
    "gradient_boosting": (GradientBoosting, {"max_depth": 3}, False),
}


def default_spaces():
    """The six built-in learners with their search ranges.

    Grids such as ``10^range(-5, 0)`` become continuous log-uniform ranges
    over the same span; ``range(a, b)`` integer grids keep their
    exclusive upper end.
    """
    return [
        LearnerSpec("ridge", HyperSpace(alpha=Continuous(1e-5, 1.0, log=True))),
        LearnerSpec(
            "elastic_net",
            HyperSpace(alpha=Continuous(1e-5, 1.0, log=True), l1_ratio=Continuous(1e-5, 1.0, log=True)),
        ),
        LearnerSpec("knn", HyperSpace(n_neighbors=Integer(2, 10))),
        LearnerSpec("tree", HyperSpace(max_depth=Integer(4, 22))),
        LearnerSpec(
            "random_forest",
            HyperSpace(n_estimators=Categorical((100, 200, 500)), max_depth=Integer(4, 9)),
        ),
        LearnerSpec(
            "gradient_boosting",
            HyperSpace(n_estimators=Categorical((100, 200, 500)), learning_rate=Continuous(0.5, 2.0)),
        ),
    ]


def make_estimator(kind, params, seed=0):
    """Unfitted estimator of ``kind`` configured with ``params``."""
    cls, fixed, seeded = LEARNERS[kind]
    kwargs = {**fixed, **params}
    if seeded:
        kwargs["random_state"] = int(seed)
    return cls(**kwargs)


@dataclass(frozen=True)
class FittedModel:
    learner: str
    config: object
    estimator: object

    def predict(self, X):
        return predict(self, X)


def fit(spec, config, X, y, seed=0):
    """Validate ``config`` against ``spec`` and fit the learner."""
    if config.learner != spec.kind:
        raise ValueError(f"config for {config.learner!r} given to learner {spec.kind!r}")
    spec.space.validate(config.params)
    X = check_matrix(X)
    y = check_vector(y, X.shape[0])
    est = make_estimator(spec.kind, config.params, seed).fit(X, y)
    return FittedModel(spec.name, config, est)


def predict(model, X):
    X = check_matrix(X)
    expected = model.estimator.n_features_in_
    if X.shape[1] != expected:
        raise ValueError(f"X has {X.shape[1]} features, model was fitted on {expected}")
    out = model.estimator.predict(X)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError(f"{model.learner} produced non-finite predictions")
    return out

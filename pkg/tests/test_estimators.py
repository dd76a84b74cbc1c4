import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.model_selection import cross_val_score
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import StandardScaler

from gemith.dataset import synthetic_friedman1
from gemith.estimators import BEMRegressor, GEMITHRegressor, GEMRegressor, StackedRegressor
from gemith.learners import default_spaces

CHEAP = [s for s in default_spaces() if s.kind in ("ridge", "knn", "tree")]
FAST = dict(learners=CHEAP, n_select=3, n_trials=4, n_startup=2, b=2, n_folds=3)


@pytest.fixture(scope="module")
def data():
    ds = synthetic_friedman1(90, seed=5)
    return ds.features, ds.target


@pytest.mark.parametrize("cls", [BEMRegressor, GEMRegressor, GEMITHRegressor, StackedRegressor])
def test_fit_predict(cls, data):
    X, y = data
    est = cls(**FAST).fit(X, y)
    pred = est.predict(X[:7])
    assert pred.shape == (7,) and np.all(np.isfinite(pred))
    assert est.n_features_in_ == X.shape[1]


def test_weights_and_objective_ordering(data):
    X, y = data
    bem = BEMRegressor(**FAST).fit(X, y)
    gem = GEMRegressor(**FAST).fit(X, y)
    ith = GEMITHRegressor(**FAST).fit(X, y)
    assert ith.oob_objective_ <= gem.oob_objective_ <= bem.oob_objective_
    assert gem.weights_.sum() == pytest.approx(1.0)
    assert ith.gem_ith_result_.objective == ith.oob_objective_


def test_selection_runs_for_large_pools(data):
    X, y = data
    est = GEMRegressor(learners=CHEAP, n_select=2, n_trials=3, n_startup=1, b=1, n_folds=3).fit(X, y)
    assert len(est.specs_) == 2 and est.selection_ is not None


def test_clone_and_params():
    est = GEMITHRegressor(combo_cap=7, random_state=3)
    params = clone(est).get_params()
    assert params["combo_cap"] == 7 and params["random_state"] == 3
    assert StackedRegressor(meta="knn")._method_name() == "STACKED-KNN"


def test_deterministic(data):
    X, y = data
    a = GEMITHRegressor(**FAST, random_state=1).fit(X, y).predict(X)
    b = GEMITHRegressor(**FAST, random_state=1).fit(X, y).predict(X)
    assert np.array_equal(a, b)


def test_pipeline_and_cross_val(data):
    X, y = data
    pipe = make_pipeline(StandardScaler(), BEMRegressor(**FAST))
    scores = cross_val_score(pipe, X, y, cv=2)
    assert scores.shape == (2,) and np.all(np.isfinite(scores))


def test_not_fitted():
    with pytest.raises(NotFittedError):
        GEMRegressor().predict(np.ones((2, 3)))

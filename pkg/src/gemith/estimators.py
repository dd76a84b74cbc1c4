"""scikit-learn compatible ensemble regressors.

These wrap the functional pipeline in :mod:`gemith.ensembles` so the
ensembles compose with ``Pipeline``, ``cross_val_score``, ``clone`` and
friends. Standardization is left to the caller, e.g.
``make_pipeline(StandardScaler(), GEMITHRegressor())``.
"""

from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from .dataset import Dataset, make_fold_plan
from .ensembles import DEFAULT_COMBO_CAP, fit_methods, predict_test, run_searches, select_base_learners
from .learners import default_spaces
from .oob import OobCache
from .search import SearchParams
from .utils import derive_seed


class _EnsembleRegressor(RegressorMixin, BaseEstimator):
    _method = None

    def __init__(self, learners=None, n_select=4, n_folds=5, n_trials=30, n_startup=5, gamma=0.25,
                 n_ei_candidates=24, b=12, random_state=0):
        self.learners = learners
        self.n_select = n_select
        self.n_folds = n_folds
        self.n_trials = n_trials
        self.n_startup = n_startup
        self.gamma = gamma
        self.n_ei_candidates = n_ei_candidates
        self.b = b
        self.random_state = random_state

    def _search_params(self):
        return SearchParams(self.n_trials, self.n_startup, self.gamma, self.n_ei_candidates, self.b)

    def _method_name(self):
        return self._method

    def _extra_kwargs(self):
        return {}

    def fit(self, X, y):
        X, y = validate_data(self, X, y, y_numeric=True)
        ds = Dataset(X, y)
        seed = int(self.random_state or 0)
        plan = make_fold_plan(ds.n, self.n_folds, derive_seed(seed, "folds"))
        search = self._search_params()
        cache = OobCache()
        pool = list(self.learners) if self.learners is not None else default_spaces()
        if len(pool) > self.n_select:
            self.selection_ = select_base_learners(ds, pool, plan, search, seed, cache, self.n_select)
            specs = self.selection_.specs
            searches = [self.selection_.searches[s.name] for s in specs]
        else:
            self.selection_ = None
            specs = pool
            searches = run_searches(ds, specs, plan, search, seed, cache)
        models, extras = fit_methods(
            ds, specs, plan, search, seed, [self._method_name()], cache, searches, **self._extra_kwargs()
        )
        self.model_ = models[self._method_name()]
        self.gem_ith_result_ = extras.get("gem_ith")
        self.specs_ = self.model_.specs
        self.configs_ = self.model_.configs
        self.weights_ = None if self.model_.weights is None else self.model_.weights.w
        self.oob_objective_ = self.model_.objective
        return self

    def predict(self, X):
        check_is_fitted(self)
        X = validate_data(self, X, reset=False)
        return predict_test(self.model_, X)


class BEMRegressor(_EnsembleRegressor):
    """Equal-weight average of individually tuned base learners."""

    _method = "BEM"


class GEMRegressor(_EnsembleRegressor):
    """Individually tuned base learners blended with optimal simplex weights."""

    _method = "GEM"


class GEMITHRegressor(_EnsembleRegressor):
    """Base-learner configs and simplex weights chosen jointly.

    Each learner contributes its ``b`` best searched configs; every
    combination (or ``combo_cap`` of them, always including the
    individually best one) is blended optimally and the lowest out-of-fold
    MSE wins.
    """

    _method = "GEM-ITH"

    def __init__(self, learners=None, n_select=4, n_folds=5, n_trials=30, n_startup=5, gamma=0.25,
                 n_ei_candidates=24, b=12, combo_cap=DEFAULT_COMBO_CAP, random_state=0):
        super().__init__(learners, n_select, n_folds, n_trials, n_startup, gamma, n_ei_candidates, b, random_state)
        self.combo_cap = combo_cap

    def _extra_kwargs(self):
        return {"combo_cap": self.combo_cap}


class StackedRegressor(_EnsembleRegressor):
    """Second-level ``meta`` learner ("ols", "rf" or "knn") on OOB predictions."""

    def __init__(self, learners=None, meta="ols", n_select=4, n_folds=5, n_trials=30, n_startup=5, gamma=0.25,
                 n_ei_candidates=24, b=12, random_state=0):
        super().__init__(learners, n_select, n_folds, n_trials, n_startup, gamma, n_ei_candidates, b, random_state)
        self.meta = meta

    def _method_name(self):
        return f"STACKED-{str(self.meta).upper()}"

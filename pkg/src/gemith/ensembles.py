"""Ensemble construction: BEM, GEM, GEM-ITH and stacked meta-learners.

All simplex-weighted methods share one pipeline. Each base learner is
searched once (:func:`gemith.search.bayes_candidates`); GEM keeps every
learner's best config, GEM-ITH enumerates the cross product of the ``b``
best configs per learner and keeps the combination whose optimal weights
give the lowest out-of-fold MSE. The GEM combination is always part of the
enumeration, so GEM-ITH can never do worse on the training objective.
"""

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .learners import registry
from .learners.spaces import Categorical, HyperConfig, HyperSpace, LearnerSpec
from .oob import OobCache, OobMatrix, oob_matrix, oob_predict
from .search import SearchParams, bayes_candidates
from .simplex_qp import SimplexWeights, ensemble_mse, solve_gem_weights
from .utils import check_matrix, derive_seed, make_rng, mse

SIMPLEX_METHODS = ("BEM", "GEM", "GEM-ITH")
STACKED_METHODS = ("STACKED-OLS", "STACKED-RF", "STACKED-KNN")
METHODS = SIMPLEX_METHODS + STACKED_METHODS

DEFAULT_COMBO_CAP = 25_000

# Fixed second-level learners. Ridge with a vanishing penalty stands in for OLS.
META_LEARNERS = {
    "ols": ("ridge", {"alpha": 1e-8}),
    "rf": ("random_forest", {"n_estimators": 200, "max_depth": 6}),
    "knn": ("knn", {"n_neighbors": 5}),
}


@dataclass
class EnsembleModel:
    method: str
    specs: list
    configs: list
    weights: SimplexWeights = None
    meta: object = None
    base_models: list = field(default_factory=list)
    objective: float = float("nan")

    def predict(self, X):
        return predict_test(self, X)


@dataclass
class GemIthResult:
    best_index: int
    objective: float
    weights: SimplexWeights
    configs: list
    combinations: list
    objectives: np.ndarray
    n_total: int
    subsampled: bool
    model: EnsembleModel = None


def refit(specs, configs, ds, seed=0):
    """Fit each chosen config on the full training set."""
    return [
        registry.fit(spec, cfg, ds.features, ds.target, derive_seed(seed, "refit", spec.kind))
        for spec, cfg in zip(specs, configs)
    ]


def _check_distinct(specs):
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise ValueError(f"learner names must be distinct, got {names}")


def bem(M):
    """Uniform weights over the columns of ``M``."""
    w = np.full(M.k, 1.0 / M.k)
    return SimplexWeights(w=w, objective=ensemble_mse(w, M), method="uniform")


def run_searches(ds, specs, plan, search, seed=0, cache=None):
    """``bayes_candidates`` for every learner, in order."""
    return [bayes_candidates(ds, spec, plan, search, seed, cache) for spec in specs]


def gem(ds_train, specs, plan, search=None, seed=0, cache=None, searches=None, refit_models=True):
    """Tune each learner on its own, then blend the tuned learners."""
    _check_distinct(specs)
    search = search or SearchParams()
    cache = cache if cache is not None else OobCache()
    if searches is None:
        searches = run_searches(ds_train, specs, plan, search, seed, cache)
    configs = [s.best for s in searches]
    M = oob_matrix(ds_train, list(zip(specs, configs)), plan, seed, cache)
    weights = solve_gem_weights(M)
    base = refit(specs, configs, ds_train, seed) if refit_models else []
    return EnsembleModel("GEM", list(specs), configs, weights, None, base, weights.objective)


def _combination_stream(sizes, combo_cap, seed):
    """Which index tuples to evaluate, rank-1 combination first.

    Everything in lexicographic order when the product fits under the cap;
    otherwise the first ``combo_cap`` distinct tuples of a seeded random
    stream, so a larger cap always evaluates a superset.
    """
    total = math.prod(sizes)
    if combo_cap is None or total <= combo_cap:
        return list(itertools.product(*(range(s) for s in sizes))), total, False
    rng = make_rng(derive_seed(seed, "combos"))
    first = tuple(0 for _ in sizes)
    seen = {first}
    combos = [first]
    while len(combos) < combo_cap:
        combo = tuple(int(rng.integers(s)) for s in sizes)
        if combo not in seen:
            seen.add(combo)
            combos.append(combo)
    return combos, total, True


def enumerate_combinations(ds_train, specs, candidates, plan, seed=0, cache=None, combo_cap=DEFAULT_COMBO_CAP):
    """Solve the blending problem for every candidate combination.

    ``candidates[j]`` is the ranked config list of learner ``j``. With a
    memoizing cache each (learner, config) OOB vector is computed once;
    with ``OobCache(memoize=False)`` every combination retrains its
    learners, as in the plain nested loop.
    """
    if not specs or len(specs) != len(candidates) or any(not c for c in candidates):
        raise ValueError("need one non-empty candidate list per learner")
    cache = cache if cache is not None else OobCache()
    sizes = [len(c) for c in candidates]
    combos, total, subsampled = _combination_stream(sizes, combo_cap, seed)
    if subsampled:
        warnings.warn(
            f"evaluating {len(combos)} of {total} combinations (combo_cap={combo_cap})",
            RuntimeWarning,
            stacklevel=2,
        )
    y = ds_train.target

    if cache.memoize:
        columns = [
            [oob_predict(ds_train, spec, cfg, plan, seed, cache).predictions for cfg in cands]
            for spec, cands in zip(specs, candidates)
        ]

        def matrix(combo):
            return OobMatrix(np.column_stack([columns[j][i] for j, i in enumerate(combo)]), y)
    else:

        def matrix(combo):
            items = [(spec, candidates[j][i]) for j, (spec, i) in enumerate(zip(specs, combo))]
            return oob_matrix(ds_train, items, plan, seed, cache)

    objectives = np.empty(len(combos))
    best_idx, best_w = 0, None
    for h, combo in enumerate(combos):
        sw = solve_gem_weights(matrix(combo))
        objectives[h] = sw.objective
        # strict < keeps the lowest index on ties
        if best_w is None or sw.objective < objectives[best_idx]:
            best_idx, best_w = h, sw
    best_combo = combos[best_idx]
    configs = [candidates[j][i] for j, i in enumerate(best_combo)]
    return GemIthResult(
        best_index=best_idx,
        objective=float(objectives[best_idx]),
        weights=best_w,
        configs=configs,
        combinations=combos,
        objectives=objectives,
        n_total=total,
        subsampled=subsampled,
    )


def gem_ith(ds_train, specs, plan, search=None, seed=0, combo_cap=DEFAULT_COMBO_CAP, cache=None, searches=None,
            refit_models=True):
    """Choose configs and weights jointly over the ``b^k`` candidate grid."""
    _check_distinct(specs)
    search = search or SearchParams()
    cache = cache if cache is not None else OobCache()
    if searches is None:
        searches = run_searches(ds_train, specs, plan, search, seed, cache)
    result = enumerate_combinations(
        ds_train, specs, [s.candidates for s in searches], plan, seed, cache, combo_cap
    )
    base = refit(specs, result.configs, ds_train, seed) if refit_models else []
    result.model = EnsembleModel(
        "GEM-ITH", list(specs), result.configs, result.weights, None, base, result.objective
    )
    return result


def meta_spec(meta, params=None):
    """``LearnerSpec`` and fixed config of a named second-level learner."""
    kind, values = META_LEARNERS[meta]
    values = {**values, **(params or {})}
    space = HyperSpace({k: Categorical((v,)) for k, v in values.items()})
    return LearnerSpec(kind, space, name=f"meta_{meta}"), HyperConfig(kind, values)


def stacked(meta, M, seed=0, specs=(), configs=(), base_models=(), params=None):
    """Fit a second-level learner on the OOB columns of ``M``.

    ``meta`` is ``"ols"``, ``"rf"`` or ``"knn"``; ``params`` overrides its
    fixed config. The returned model's ``objective`` is the meta-learner's
    training MSE on ``M``.
    """
    if meta not in META_LEARNERS:
        raise ValueError(f"meta must be one of {sorted(META_LEARNERS)}, got {meta!r}")
    spec, config = meta_spec(meta, params)
    fitted = registry.fit(spec, config, M.predictions, M.y, derive_seed(seed, "meta", meta))
    train_mse = mse(M.y, registry.predict(fitted, M.predictions))
    return EnsembleModel(
        f"STACKED-{meta.upper()}", list(specs), list(configs), None, fitted, list(base_models), train_mse
    )


def base_predictions(model, X):
    X = check_matrix(X)
    if not model.base_models:
        raise ValueError(f"{model.method} model has no refitted base learners")
    return np.column_stack([registry.predict(b, X) for b in model.base_models])


def predict_test(model, X):
    P = base_predictions(model, X)
    if model.weights is not None:
        return P @ model.weights.w
    return registry.predict(model.meta, P)


def evaluate(model, test):
    return mse(test.target, predict_test(model, test.features))


@dataclass
class Selection:
    specs: list
    order: list
    mse: dict
    survivors: list
    pruned: list
    correlation: np.ndarray
    searches: dict


def _greedy_min_max(corr, n_pick):
    """Lowest-correlation pair, then repeatedly the learner whose largest
    correlation with the chosen set is smallest. Ties go to lower indices."""
    m = corr.shape[0]
    best_pair, best_val = (0, 1), np.inf
    for i in range(m):
        for j in range(i + 1, m):
            if corr[i, j] < best_val:
                best_pair, best_val = (i, j), corr[i, j]
    chosen = list(best_pair)
    while len(chosen) < n_pick:
        rest = [i for i in range(m) if i not in chosen]
        scores = [max(corr[i, c] for c in chosen) for i in rest]
        chosen.append(rest[int(np.argmin(scores))])
    return chosen


def select_base_learners(ds_train, pool, plan, search=None, seed=0, cache=None, n_select=4):
    """Prune weak learners, then pick a low-correlation subset.

    1. tune every pool learner and record its OOB MSE;
    2. drop learners whose MSE exceeds the pool mean, restoring the best
       dropped ones if fewer than ``n_select`` survive;
    3. Pearson correlations between survivors' OOB vectors (a constant
       vector counts as uncorrelated);
    4. greedy min-max selection of ``n_select`` survivors.

    The chosen specs are returned in pool order.
    """
    if len(pool) < n_select:
        raise ValueError(f"pool has {len(pool)} learners, need at least {n_select}")
    _check_distinct(pool)
    search = search or SearchParams()
    cache = cache if cache is not None else OobCache()
    searches, vectors, errors = {}, {}, {}
    for spec in pool:
        res = bayes_candidates(ds_train, spec, plan, search, seed, cache)
        searches[spec.name] = res
        vectors[spec.name] = oob_predict(ds_train, spec, res.best, plan, seed, cache).predictions
        errors[spec.name] = mse(ds_train.target, vectors[spec.name])

    mean_err = float(np.mean(list(errors.values())))
    survivors = [s for s in pool if errors[s.name] <= mean_err]
    dropped = sorted((s for s in pool if errors[s.name] > mean_err), key=lambda s: errors[s.name])
    while len(survivors) < n_select:
        survivors.append(dropped.pop(0))
    survivors = [s for s in pool if s in survivors]
    pruned = [s.name for s in pool if s not in survivors]

    V = np.column_stack([vectors[s.name] for s in survivors])
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = np.corrcoef(V, rowvar=False)
    corr = np.nan_to_num(np.atleast_2d(corr), nan=0.0)
    np.fill_diagonal(corr, 1.0)

    if len(survivors) == n_select:
        order = list(range(n_select))
    else:
        order = _greedy_min_max(corr, n_select)
    picked = {survivors[i].name for i in order}
    return Selection(
        specs=[s for s in pool if s.name in picked],
        order=[survivors[i].name for i in order],
        mse=errors,
        survivors=[s.name for s in survivors],
        pruned=pruned,
        correlation=corr,
        searches=searches,
    )


def fit_methods(ds_train, specs, plan, search=None, seed=0, methods=METHODS, cache=None, searches=None,
                combo_cap=DEFAULT_COMBO_CAP, base_models=None):
    """Build every requested ensemble from one shared search.

    Returns ``(models, extras)`` where ``models`` maps method name to a
    refitted :class:`EnsembleModel` and ``extras`` holds the searches and,
    if requested, the full :class:`GemIthResult`.
    """
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise ValueError(f"unknown methods {unknown}; choose from {list(METHODS)}")
    _check_distinct(specs)
    search = search or SearchParams()
    cache = cache if cache is not None else OobCache()
    if searches is None:
        searches = run_searches(ds_train, specs, plan, search, seed, cache)
    configs = [s.best for s in searches]
    M = oob_matrix(ds_train, list(zip(specs, configs)), plan, seed, cache)
    base = base_models if base_models is not None else refit(specs, configs, ds_train, seed)

    models, extras = {}, {"searches": searches, "oob_matrix": M}
    for method in methods:
        if method == "BEM":
            w = bem(M)
            models[method] = EnsembleModel("BEM", list(specs), configs, w, None, base, w.objective)
        elif method == "GEM":
            w = solve_gem_weights(M)
            models[method] = EnsembleModel("GEM", list(specs), configs, w, None, base, w.objective)
        elif method == "GEM-ITH":
            res = gem_ith(ds_train, specs, plan, search, seed, combo_cap, cache, searches)
            extras["gem_ith"] = res
            models[method] = res.model
        else:
            meta = method.split("-", 1)[1].lower()
            models[method] = stacked(meta, M, seed, specs, configs, base)
    return models, extras

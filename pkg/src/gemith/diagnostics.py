"""Monte-Carlo bias-variance decomposition on synthetic data.

Fixed-design estimator: one test grid is drawn once, then ``reps``
independent training sets are drawn, fitted and evaluated on that grid.
With ``F[r, i]`` the prediction of repetition ``r`` at grid point ``x_i``:

* ``bias_sq  = mean_i (mean_r F[r, i] - f(x_i))**2``
* ``variance = mean_i var_r F[r, i]``
* ``total_mse = mean_{r,i} (y[r, i] - F[r, i])**2`` with fresh noisy
  targets ``y[r, i] = f(x_i) + eps`` for every repetition.

The noise term is the generator's known ``noise_sd**2``.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np
from sklearn.base import clone

from .utils import derive_seed, make_rng


@dataclass(frozen=True)
class BVReport:
    bias_sq: float
    variance: float
    noise_var: float
    total_mse: float
    decomposition_gap: float
    reps: int
    n_train: int
    n_test: int

    @property
    def relative_gap(self):
        return self.decomposition_gap / max(self.total_mse, 1e-12)

    def to_dict(self):
        return {**asdict(self), "relative_gap": self.relative_gap}


def _as_fit_proc(model):
    """Accept ``fit_proc(X, y, seed) -> predictor`` or an sklearn estimator."""
    if hasattr(model, "fit") and hasattr(model, "predict"):

        def fit_proc(X, y, seed):
            est = clone(model)
            if "random_state" in est.get_params():
                est.set_params(random_state=int(seed) & 0x7FFFFFFF)
            return est.fit(X, y)

        return fit_proc
    return model


def _predictor(fitted):
    return fitted.predict if hasattr(fitted, "predict") else fitted


def bias_variance_estimate(fit_proc, gen, n_train=200, n_test=500, reps=200, seed=0):
    if reps < 2:
        raise ValueError("reps must be >= 2")
    fit_proc = _as_fit_proc(fit_proc)
    grid_rng = make_rng(derive_seed(seed, "grid"))
    X_test = gen.sample_features(n_test, grid_rng)
    f_test = gen.f(X_test)

    preds = np.empty((reps, n_test))
    sq_err = np.empty(reps)
    for r in range(reps):
        train = gen.sample(n_train, derive_seed(seed, "train", r))
        fitted = fit_proc(train.features, train.target, derive_seed(seed, "fit", r))
        preds[r] = np.asarray(_predictor(fitted)(X_test), dtype=float)
        noise = gen.noise_sd * make_rng(derive_seed(seed, "noise", r)).standard_normal(n_test)
        resid = f_test + noise - preds[r]
        sq_err[r] = math.fsum(resid * resid) / n_test

    mean_pred = preds.mean(axis=0)
    bias_sq = math.fsum((mean_pred - f_test) ** 2) / n_test
    variance = math.fsum(preds.var(axis=0)) / n_test
    total = math.fsum(sq_err) / reps
    noise_var = gen.noise_sd**2
    return BVReport(
        bias_sq=bias_sq,
        variance=variance,
        noise_var=noise_var,
        total_mse=total,
        decomposition_gap=abs(total - (bias_sq + variance + noise_var)),
        reps=reps,
        n_train=n_train,
        n_test=n_test,
    )

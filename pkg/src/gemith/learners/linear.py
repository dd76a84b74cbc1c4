import warnings

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted, validate_data


class SingularSystemWarning(RuntimeWarning):
    """The penalized normal equations were singular; a min-norm solution was used."""


class RidgeRegressor(RegressorMixin, BaseEstimator):
    """Ridge regression minimizing ``||y - Xb - c||^2 + alpha ||b||^2``.

    The intercept ``c`` is not penalized (the problem is solved on centered
    data). A singular system (``alpha = 0`` with rank-deficient X) falls back
    to the minimum-norm least-squares solution and emits
    :class:`SingularSystemWarning`.
    """

    def __init__(self, alpha=1.0):
        self.alpha = alpha

    def fit(self, X, y):
        X, y = validate_data(self, X, y, y_numeric=True)
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        x_mean = X.mean(axis=0)
        y_mean = y.mean()
        Xc = X - x_mean
        yc = y - y_mean
        A = Xc.T @ Xc + self.alpha * np.eye(X.shape[1])
        b = Xc.T @ yc
        coef = None
        if np.linalg.cond(A) < 1.0 / np.finfo(float).eps:
            coef = np.linalg.solve(A, b)
        if coef is None or not np.all(np.isfinite(coef)):
            warnings.warn(
                f"singular system for alpha={self.alpha}; using minimum-norm solution",
                SingularSystemWarning,
                stacklevel=2,
            )
            coef = np.linalg.lstsq(A, b, rcond=None)[0]
        self.coef_ = coef
        self.intercept_ = float(y_mean - x_mean @ coef)
        return self

    def predict(self, X):
        check_is_fitted(self)
        X = validate_data(self, X, reset=False)
        return X @ self.coef_ + self.intercept_


def _soft_threshold(z, t):
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


class ElasticNetRegressor(RegressorMixin, BaseEstimator):
    """Elastic net by cyclic coordinate descent.

    Objective::

        (1 / 2n) ||y - Xb - c||^2 + alpha * (l1_ratio ||b||_1 + (1 - l1_ratio) / 2 ||b||^2)

    Sweeps run on the centered Gram matrix and stop once the largest
    coefficient change in a sweep drops below ``tol`` or after ``max_iter``
    sweeps.
    """

    def __init__(self, alpha=1.0, l1_ratio=0.5, tol=1e-8, max_iter=10_000):
        self.alpha = alpha
        self.l1_ratio = l1_ratio
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y):
        X, y = validate_data(self, X, y, y_numeric=True)
        if self.alpha < 0 or not 0.0 <= self.l1_ratio <= 1.0:
            raise ValueError("need alpha >= 0 and 0 <= l1_ratio <= 1")
        n, p = X.shape
        x_mean = X.mean(axis=0)
        y_mean = y.mean()
        Xc = X - x_mean
        G = Xc.T @ Xc / n
        c = Xc.T @ (y - y_mean) / n
        l1 = self.alpha * self.l1_ratio
        l2 = self.alpha * (1.0 - self.l1_ratio)
        diag = np.diag(G) + l2

        beta = np.zeros(p)
        Gb = np.zeros(p)  # G @ beta, kept in sync
        n_iter = 0
        for n_iter in range(1, self.max_iter + 1):
            max_change = 0.0
            for j in range(p):
                if diag[j] == 0.0:
                    continue
                old = beta[j]
                rho = c[j] - Gb[j] + G[j, j] * old
                new = _soft_threshold(rho, l1) / diag[j]
                if new != old:
                    Gb += G[:, j] * (new - old)
                    beta[j] = new
                    max_change = max(max_change, abs(new - old))
            if max_change < self.tol:
                break
        self.n_iter_ = n_iter
        self.coef_ = beta
        self.intercept_ = float(y_mean - x_mean @ beta)
        return self

    def predict(self, X):
        check_is_fitted(self)
        X = validate_data(self, X, reset=False)
        return X @ self.coef_ + self.intercept_

"""CART regression trees and the two tree ensembles built on them.

Trees are stored as flat arrays (``feature``, ``threshold``, ``left``,
``right``, ``value``); leaves have ``feature == -1``. A row goes left when
``x[feature] <= threshold``.
"""

import math

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from ..utils import derive_seed, make_rng


class _Tree:
    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=float)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=float)

    @property
    def node_count(self):
        return self.feature.shape[0]

    def apply(self, X):
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = np.arange(X.shape[0])
        while active.size:
            f = self.feature[node[active]]
            internal = f >= 0
            active = active[internal]
            if not active.size:
                break
            f = f[internal]
            cur = node[active]
            go_left = X[active, f] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])
        return node

    def predict(self, X):
        return self.value[self.apply(X)]


def _best_split(Xn, yn):
    """Exhaustive variance-reduction split over the columns of ``Xn``.

    Returns ``(column, threshold)`` or ``None`` when every column is
    constant. Ties go to the lowest column, then the lowest threshold.
    """
    n = yn.shape[0]
    order = np.argsort(Xn, axis=0, kind="stable")
    xs = np.take_along_axis(Xn, order, axis=0)
    ys = yn[order]
    left_sum = np.cumsum(ys, axis=0)[:-1]
    total = left_sum[-1] + ys[-1]
    n_left = np.arange(1, n, dtype=float)[:, None]
    # maximizing this is minimizing the summed child SSE
    score = left_sum**2 / n_left + (total - left_sum) ** 2 / (n - n_left)
    valid = xs[1:] > xs[:-1]
    if not valid.any():
        return None
    score = np.where(valid, score, -np.inf)
    flat = int(np.argmax(score.T))  # column-major: lowest column wins ties
    col, pos = divmod(flat, n - 1)
    lo, hi = xs[pos, col], xs[pos + 1, col]
    thr = lo + (hi - lo) / 2.0
    if not lo <= thr < hi:
        thr = lo
    return col, thr


def build_tree(X, y, max_depth=None, max_features=None, rng=None):
    """Grow a CART tree on validated arrays (min leaf size 1)."""
    n, p = X.shape
    depth_cap = math.inf if max_depth is None else max_depth
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(rows):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float(np.mean(y[rows])))
        return len(feature) - 1

    root = new_node(np.arange(n))
    stack = [(root, np.arange(n), 0)]
    while stack:
        node, rows, depth = stack.pop()
        if depth >= depth_cap or rows.size < 2:
            continue
        yn = y[rows]
        if np.all(yn == yn[0]):
            continue
        if max_features is not None and max_features < p:
            cols = np.sort(rng.choice(p, size=max_features, replace=False))
        else:
            cols = np.arange(p)
        split = _best_split(X[np.ix_(rows, cols)], yn)
        if split is None:
            continue
        col, thr = split
        f = int(cols[col])
        go_left = X[rows, f] <= thr
        l_rows, r_rows = rows[go_left], rows[~go_left]
        feature[node] = f
        threshold[node] = thr
        left[node] = new_node(l_rows)
        right[node] = new_node(r_rows)
        # push right first so the left subtree is numbered first
        stack.append((right[node], r_rows, depth + 1))
        stack.append((left[node], l_rows, depth + 1))
    return _Tree(feature, threshold, left, right, value)


class RegressionTree(RegressorMixin, BaseEstimator):
    """CART regression tree with squared-error splitting.

    ``max_features`` limits the columns examined at each split (a random
    subset drawn from ``random_state``); ``None`` examines all of them and
    makes the tree fully deterministic.
    """

    def __init__(self, max_depth=None, max_features=None, random_state=0):
        self.max_depth = max_depth
        self.max_features = max_features
        self.random_state = random_state

    def fit(self, X, y):
        X, y = validate_data(self, X, y, y_numeric=True)
        rng = make_rng(self.random_state or 0)
        self.tree_ = build_tree(X, y, self.max_depth, self.max_features, rng)
        return self

    def predict(self, X):
        check_is_fitted(self)
        X = validate_data(self, X, reset=False)
        return self.tree_.predict(X)


def bagged_tree(X, y, seed, max_depth=None, max_features=None):
    """One forest member: a bootstrap sample of rows, then a randomized tree."""
    rng = make_rng(seed)
    rows = rng.integers(0, X.shape[0], size=X.shape[0])
    return build_tree(X[rows], y[rows], max_depth, max_features, rng)


class RandomForest(RegressorMixin, BaseEstimator):
    """Bagged CART trees, ``ceil(p / 3)`` candidate features per split."""

    def __init__(self, n_estimators=100, max_depth=None, max_features="third", random_state=0):
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.max_features = max_features
        self.random_state = random_state

    def _n_split_features(self, p):
        if self.max_features == "third":
            return max(1, math.ceil(p / 3))
        if self.max_features is None:
            return p
        return int(self.max_features)

    def fit(self, X, y):
        X, y = validate_data(self, X, y, y_numeric=True)
        m = self._n_split_features(X.shape[1])
        seed = self.random_state or 0
        self.estimators_ = [
            bagged_tree(X, y, derive_seed(seed, "tree", i), self.max_depth, m)
            for i in range(self.n_estimators)
        ]
        return self

    def predict(self, X):
        check_is_fitted(self)
        X = validate_data(self, X, reset=False)
        total = np.zeros(X.shape[0])
        for tree in self.estimators_:
            total += tree.predict(X)
        return total / len(self.estimators_)


class GradientBoosting(RegressorMixin, BaseEstimator):
    """Least-squares boosting of fixed-depth trees, starting from mean(y)."""

    def __init__(self, n_estimators=100, learning_rate=0.1, max_depth=3):
        self.n_estimators = n_estimators
        self.learning_rate = learning_rate
        self.max_depth = max_depth

    def fit(self, X, y):
        X, y = validate_data(self, X, y, y_numeric=True)
        self.init_ = float(np.mean(y))
        pred = np.full(y.shape[0], self.init_)
        self.estimators_ = []
        if self.learning_rate == 0.0:
            return self
        for _ in range(self.n_estimators):
            tree = build_tree(X, y - pred, self.max_depth)
            self.estimators_.append(tree)
            pred = pred + self.learning_rate * tree.predict(X)
        return self

    def predict(self, X):
        check_is_fitted(self)
        X = validate_data(self, X, reset=False)
        pred = np.full(X.shape[0], self.init_)
        for tree in self.estimators_:
            pred = pred + self.learning_rate * tree.predict(X)
        return pred

"""Regression datasets: CSV loading, splitting, fold plans, scaling and
synthetic generators.

Every random choice goes through :func:`gemith.utils.make_rng` (PCG64), and
shuffles are numpy's Fisher-Yates ``permutation``, so identical seeds give
identical partitions on every platform.
"""

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .utils import check_matrix, hash64, make_rng


class DatasetError(ValueError):
    """Raised for malformed input files or invalid dataset operations."""


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    target: np.ndarray
    feature_names: tuple = ()
    target_name: str = "y"

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        y = np.asarray(self.target, dtype=float).ravel()
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise DatasetError(f"features must be a non-empty n x p matrix, got shape {X.shape}")
        if y.shape[0] != X.shape[0]:
            raise DatasetError(f"target length {y.shape[0]} does not match {X.shape[0]} rows")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise DatasetError("dataset contains NaN or infinite values")
        names = tuple(self.feature_names) or tuple(f"x{j + 1}" for j in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise DatasetError(f"{len(names)} feature names for {X.shape[1]} columns")
        if len(set(names)) != len(names):
            raise DatasetError("feature names must be distinct")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "target", y)
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def p(self):
        return self.features.shape[1]

    def subset(self, rows):
        rows = np.asarray(rows, dtype=int)
        return Dataset(self.features[rows], self.target[rows], self.feature_names, self.target_name)


def load_csv(path, target):
    """Read a comma-separated file with a header row.

    ``target`` is a column name or a 0-based column index. Cells must parse
    as floats; the error message names the 1-based data row and the column.
    """
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"no such file: {path}")
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DatasetError(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    if isinstance(target, str) and not target.lstrip("-").isdigit():
        if target not in header:
            raise DatasetError(f"target column {target!r} not found in {header}")
        t_idx = header.index(target)
    else:
        t_idx = int(target)
        if not 0 <= t_idx < len(header):
            raise DatasetError(f"target index {t_idx} out of range for {len(header)} columns")
    body = [r for r in rows[1:] if any(cell.strip() for cell in r)]
    if not body:
        raise DatasetError(f"{path} has a header but no data rows")
    if len(header) < 2:
        raise DatasetError("need at least one feature column besides the target")

    values = np.empty((len(body), len(header)))
    for i, row in enumerate(body, start=1):
        if len(row) != len(header):
            raise DatasetError(f"row {i} has {len(row)} cells, header has {len(header)}")
        for j, cell in enumerate(row):
            try:
                values[i - 1, j] = float(cell)
            except ValueError:
                raise DatasetError(
                    f"cannot parse {cell!r} as a number at row {i}, column {header[j]!r}"
                ) from None
    if not np.all(np.isfinite(values)):
        bad_row, bad_col = np.argwhere(~np.isfinite(values))[0]
        raise DatasetError(f"non-finite value at row {bad_row + 1}, column {header[bad_col]!r}")

    keep = [j for j in range(len(header)) if j != t_idx]
    return Dataset(values[:, keep], values[:, t_idx], tuple(header[j] for j in keep), header[t_idx])


def save_csv(ds, path):
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(ds.feature_names) + [ds.target_name])
        for x, y in zip(ds.features, ds.target):
            writer.writerow([repr(float(v)) for v in x] + [repr(float(y))])


def _round_half_up(x):
    return int(math.floor(x + 0.5))


def train_test_split(ds, test_fraction=0.2, seed=0):
    """Shuffle rows and hold out ``round(test_fraction * n)`` of them.

    Both halves keep the original relative row order.
    """
    if not 0.0 < test_fraction < 1.0:
        raise DatasetError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    n_test = _round_half_up(test_fraction * ds.n)
    if n_test < 1 or ds.n - n_test < 2:
        raise DatasetError(
            f"test_fraction={test_fraction} on n={ds.n} gives {n_test} test / "
            f"{ds.n - n_test} train rows; need >= 1 test and >= 2 train"
        )
    perm = make_rng(seed).permutation(ds.n)
    test_rows = np.sort(perm[:n_test])
    train_rows = np.sort(perm[n_test:])
    return ds.subset(train_rows), ds.subset(test_rows)


@dataclass(frozen=True)
class FoldPlan:
    n: int
    m: int
    assignment: np.ndarray = field(repr=False)
    seed: int = 0

    def __post_init__(self):
        a = np.asarray(self.assignment, dtype=np.int64)
        if a.shape != (self.n,):
            raise DatasetError(f"assignment has shape {a.shape}, expected ({self.n},)")
        if a.min() < 0 or a.max() >= self.m:
            raise DatasetError("fold index out of range")
        counts = np.bincount(a, minlength=self.m)
        if counts.min() == 0:
            raise DatasetError("every fold must hold at least one row")
        a.setflags(write=False)
        object.__setattr__(self, "assignment", a)

    def folds(self):
        """Yield ``(fold, train_rows, held_out_rows)`` for each fold."""
        for i in range(self.m):
            held = np.flatnonzero(self.assignment == i)
            train = np.flatnonzero(self.assignment != i)
            yield i, train, held

    @property
    def key(self):
        """Stable identifier of the row-to-fold assignment."""
        text = f"{self.n}:{self.m}:" + ",".join(map(str, self.assignment.tolist()))
        return format(hash64(text), "016x")


def make_fold_plan(n, m=5, seed=0):
    """Balanced random assignment of ``n`` rows to ``m`` folds."""
    if m < 2 or m > n:
        raise DatasetError(f"need 2 <= m <= n, got m={m}, n={n}")
    perm = make_rng(seed).permutation(n)
    assignment = np.empty(n, dtype=np.int64)
    assignment[perm] = np.arange(n) % m
    return FoldPlan(n=n, m=m, assignment=assignment, seed=seed)


@dataclass(frozen=True)
class Scaler:
    mean: np.ndarray
    scale: np.ndarray

    @property
    def p(self):
        return self.mean.shape[0]


def standardize_fit(ds):
    X = ds.features
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    # constant columns map to zeros instead of NaN
    scale = np.where(scale > 0, scale, 1.0)
    return Scaler(mean=mean, scale=scale)


def _check_scaler(scaler, ds):
    if ds.p != scaler.p:
        raise DatasetError(f"scaler was fitted on {scaler.p} features, dataset has {ds.p}")


def standardize_apply(scaler, ds):
    _check_scaler(scaler, ds)
    X = (ds.features - scaler.mean) / scaler.scale
    return Dataset(X, ds.target, ds.feature_names, ds.target_name)


def standardize_inverse(scaler, ds):
    _check_scaler(scaler, ds)
    X = ds.features * scaler.scale + scaler.mean
    return Dataset(X, ds.target, ds.feature_names, ds.target_name)


class SyntheticGenerator:
    """A regression problem with known noiseless response ``f``.

    Subclasses define ``n_features``, ``sample_features`` and ``f``.
    Sampling draws the features first and then one standard normal per row,
    so the feature matrix does not depend on ``noise_sd``.
    """

    n_features = 1

    def __init__(self, noise_sd=1.0):
        if noise_sd < 0:
            raise ValueError("noise_sd must be >= 0")
        self.noise_sd = float(noise_sd)

    def sample_features(self, n, rng):
        raise NotImplementedError

    def f(self, X):
        raise NotImplementedError

    def sample(self, n, seed):
        if n < 1:
            raise ValueError("n must be >= 1")
        rng = make_rng(seed)
        X = self.sample_features(n, rng)
        eps = rng.standard_normal(n)
        y = self.f(X) + self.noise_sd * eps
        names = tuple(f"x{j + 1}" for j in range(X.shape[1]))
        return Dataset(X, y, names, "y")


class Friedman1(SyntheticGenerator):
    """``10 sin(pi x1 x2) + 20 (x3 - 0.5)^2 + 10 x4 + 5 x5``; x6..x10 are noise."""

    n_features = 10

    def sample_features(self, n, rng):
        return rng.uniform(0.0, 1.0, size=(n, self.n_features))

    def f(self, X):
        X = check_matrix(X)
        return (
            10.0 * np.sin(np.pi * X[:, 0] * X[:, 1])
            + 20.0 * (X[:, 2] - 0.5) ** 2
            + 10.0 * X[:, 3]
            + 5.0 * X[:, 4]
        )


class LinearGenerator(SyntheticGenerator):
    """``intercept + X @ coef`` with uniform(-1, 1) features."""

    def __init__(self, coef=(2.0,), intercept=1.0, noise_sd=0.0):
        super().__init__(noise_sd)
        self.coef = np.asarray(coef, dtype=float).ravel()
        self.intercept = float(intercept)
        self.n_features = self.coef.shape[0]

    def sample_features(self, n, rng):
        return rng.uniform(-1.0, 1.0, size=(n, self.n_features))

    def f(self, X):
        return self.intercept + check_matrix(X) @ self.coef


class ConstantGenerator(SyntheticGenerator):
    """``f(x) = value`` everywhere; handy for sanity checks."""

    def __init__(self, value=1.0, n_features=1, noise_sd=0.0):
        super().__init__(noise_sd)
        self.value = float(value)
        self.n_features = int(n_features)

    def sample_features(self, n, rng):
        return rng.uniform(0.0, 1.0, size=(n, self.n_features))

    def f(self, X):
        return np.full(check_matrix(X).shape[0], self.value)


def synthetic_friedman1(n, noise_sd=1.0, seed=0):
    return Friedman1(noise_sd).sample(n, seed)


GENERATORS = {
    "friedman1": Friedman1,
    "linear": LinearGenerator,
    "constant": ConstantGenerator,
}

BUNDLED = {"diabetes": "progression"}


def load_bundled(name):
    """Load a CSV shipped with the package (currently only ``"diabetes"``)."""
    if name not in BUNDLED:
        raise DatasetError(f"unknown bundled dataset {name!r}; choose from {sorted(BUNDLED)}")
    return load_csv(bundled_path(name), BUNDLED[name])


def bundled_path(name):
    return Path(__file__).parent / "data" / f"{name}.csv"

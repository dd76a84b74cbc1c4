"""Out-of-fold prediction vectors and matrices with memoization.

An out-of-fold (OOB) vector holds, for every row, the prediction of a model
trained with that row's fold held out. It depends only on the data, the
learner, its config, the fold plan and the seed, so it is cached under that
key. GEM-ITH therefore needs ``b * k`` OOB vectors, not ``b^k * k``.

On-disk cache format: one JSON file per key, named ``<hash>.json`` where
``hash`` is the 64-bit BLAKE2b of the key text in hex. The file stores the
full key (checked on read, so hash collisions are detected) and the
predictions as ``float.hex`` strings, which round-trip exactly.
"""

import json
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .learners import registry
from .utils import derive_seed, hash64, mse

CACHE_ENV = "GEMITH_CACHE_DIR"


@dataclass(frozen=True)
class OobKey:
    learner: str
    config: str
    plan: str
    seed: int
    data: str = ""

    @property
    def text(self):
        return f"{self.data}|{self.learner}|{self.config}|{self.plan}|{self.seed}"

    @property
    def hash(self):
        return format(hash64(self.text), "016x")


@dataclass(frozen=True)
class OobVector:
    predictions: np.ndarray
    key: OobKey

    def mse(self, y):
        return mse(y, self.predictions)


@dataclass(frozen=True)
class OobMatrix:
    """``n x k`` out-of-fold predictions plus the aligned target."""

    predictions: np.ndarray
    y: np.ndarray
    keys: tuple = field(default=(), compare=False)

    def __post_init__(self):
        P = np.asarray(self.predictions, dtype=float)
        if P.ndim == 1:
            P = P.reshape(-1, 1)
        y = np.asarray(self.y, dtype=float).ravel()
        if P.ndim != 2 or P.shape[1] < 1 or P.shape[0] < 1:
            raise ValueError(f"need an n x k matrix with k >= 1, got shape {P.shape}")
        if P.shape[0] != y.shape[0]:
            raise ValueError(f"{P.shape[0]} prediction rows but {y.shape[0]} targets")
        object.__setattr__(self, "predictions", P)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "keys", tuple(self.keys))

    @property
    def n(self):
        return self.predictions.shape[0]

    @property
    def k(self):
        return self.predictions.shape[1]

    @classmethod
    def from_vectors(cls, vectors, y):
        return cls(np.column_stack([v.predictions for v in vectors]), y, tuple(v.key for v in vectors))


class OobCache:
    """Thread-safe memo of OOB vectors keyed by :class:`OobKey`.

    ``fit_count`` counts the per-fold model fits actually performed; a cache
    hit adds nothing. With ``memoize=False`` nothing is stored, which replays the
    naive retrain-every-time loop while still counting fits.
    """

    def __init__(self, directory=None, memoize=True):
        self.memoize = memoize
        self.directory = Path(directory) if directory else None
        if self.directory is not None:
            self.directory.mkdir(parents=True, exist_ok=True)
        self._store = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0
        self.fit_count = 0

    @classmethod
    def from_env(cls):
        return cls(os.environ.get(CACHE_ENV) or None)

    def _path(self, key):
        return self.directory / f"{key.hash}.json"

    def get(self, key):
        if not self.memoize:
            return None
        with self._lock:
            hit = self._store.get(key.text)
            if hit is None and self.directory is not None:
                hit = self._read(key)
                if hit is not None:
                    self._store[key.text] = hit
            if hit is not None:
                self.hits += 1
            else:
                self.misses += 1
            return hit

    def put(self, key, predictions):
        if not self.memoize:
            return
        with self._lock:
            self._store[key.text] = predictions
            if self.directory is not None:
                self._write(key, predictions)

    def record_fits(self, count):
        with self._lock:
            self.fit_count += count

    def _read(self, key):
        path = self._path(key)
        if not path.is_file():
            return None
        data = json.loads(path.read_text())
        if data.get("key") != key.text:
            return None  # 64-bit hash collision: treat as a miss
        return np.array([float.fromhex(v) for v in data["predictions"]])

    def _write(self, key, predictions):
        payload = {"key": key.text, "predictions": [float(v).hex() for v in predictions]}
        tmp = self._path(key).with_suffix(".tmp")
        tmp.write_text(json.dumps(payload))
        tmp.replace(self._path(key))

    def __len__(self):
        return len(self._store)


def data_fingerprint(ds):
    """Hash of the exact feature and target bytes."""
    buf = np.ascontiguousarray(ds.features).tobytes() + np.ascontiguousarray(ds.target).tobytes()
    return format(hash64(buf), "016x")


def fold_seed(seed, fold, kind):
    return derive_seed(seed, "fold", fold, kind)


def oob_predict(ds, spec, config, plan, seed=0, cache=None):
    """Out-of-fold predictions of one learner/config, in original row order."""
    if plan.n != ds.n:
        raise ValueError(f"fold plan covers {plan.n} rows, dataset has {ds.n}")
    key = OobKey(spec.kind, config.key, plan.key, int(seed), data_fingerprint(ds))
    if cache is not None:
        stored = cache.get(key)
        if stored is not None:
            return OobVector(stored, key)

    preds = np.empty(ds.n)
    for fold, train_rows, held_rows in plan.folds():
        assert train_rows.size > 0, "fold plan left an empty training set"
        model = registry.fit(
            spec, config, ds.features[train_rows], ds.target[train_rows], fold_seed(seed, fold, spec.kind)
        )
        preds[held_rows] = registry.predict(model, ds.features[held_rows])
    if cache is not None:
        cache.record_fits(plan.m)
        cache.put(key, preds)
    preds.setflags(write=False)
    return OobVector(preds, key)


class OobFitError(RuntimeError):
    def __init__(self, learner, config, cause):
        super().__init__(f"fitting {learner} with {config.key} failed: {cause}")
        self.learner = learner
        self.config = config


def oob_matrix(ds, items, plan, seed=0, cache=None):
    """Stack the OOB vectors of ``(spec, config)`` items column by column."""
    if not items:
        raise ValueError("oob_matrix needs at least one (spec, config) item")
    vectors = []
    for spec, config in items:
        try:
            vectors.append(oob_predict(ds, spec, config, plan, seed, cache))
        except Exception as exc:
            raise OobFitError(spec.name, config, exc) from exc
    return OobMatrix.from_vectors(vectors, ds.target)

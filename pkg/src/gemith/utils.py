"""Seeding, hashing and input validation helpers shared across modules."""

import hashlib
import numbers

import numpy as np

MASK64 = (1 << 64) - 1


def hash64(data):
    """Stable 64-bit hash of a string or bytes (BLAKE2b, 8-byte digest)."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    digest = hashlib.blake2b(data, digest_size=8).digest()
    return int.from_bytes(digest, "big")


def derive_seed(seed, *parts):
    """Combine an integer seed with labels into a new 64-bit seed.

    The result only depends on the values, never on call order, so
    parallel workers that derive their own seeds stay reproducible.
    """
    label = ":".join(str(p) for p in parts)
    return (int(seed) ^ hash64(label)) & MASK64


def make_rng(seed):
    """Seeded PCG64 generator; the only PRNG used by the package."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(int(seed) & MASK64))


def render_value(value):
    """Canonical text for a hyperparameter value (17 significant digits)."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, numbers.Integral):
        return str(int(value))
    if isinstance(value, numbers.Real):
        return format(float(value), ".17g")
    return str(value)


def check_matrix(X, name="X"):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {X.shape}")
    if X.shape[0] < 1 or X.shape[1] < 1:
        raise ValueError(f"{name} must have at least one row and one column")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains NaN or infinite values")
    return X


def check_vector(y, n=None, name="y"):
    y = np.asarray(y, dtype=float).ravel()
    if n is not None and y.shape[0] != n:
        raise ValueError(f"{name} has length {y.shape[0]}, expected {n}")
    if not np.all(np.isfinite(y)):
        raise ValueError(f"{name} contains NaN or infinite values")
    return y


def mse(y_true, y_pred):
    diff = np.asarray(y_true, dtype=float) - np.asarray(y_pred, dtype=float)
    return float(np.mean(diff * diff))

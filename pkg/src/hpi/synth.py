"""Synthetic binary-classification generators with known structure.

Three families, all seeded and fully deterministic:

* ``interaction`` — the label signal is a product of feature pairs
  (XOR-like), invisible to depth-1 trees, so tree depth matters a lot.
* ``additive`` — the signal is a sum of monotone per-feature effects,
  learnable by stumps, so tree depth matters little.
* ``separable-noise`` — labels are a hard linear threshold of the first
  half of the features; the remaining columns are pure noise.
"""

from __future__ import annotations

import numpy as np

from .data import Dataset, rng_from_seed
from .errors import ConfigError, DataError

GENERATORS = ("interaction", "additive", "separable-noise")


def _finish(features: np.ndarray, labels: np.ndarray) -> Dataset:
    if labels.min() == labels.max():
        raise DataError("generated labels collapsed to a single class; change n or seed")
    names = tuple(f"x{j + 1}" for j in range(features.shape[1]))
    return Dataset(features=features, labels=labels, feature_names=names, label_name="y")


def make_interaction(n: int, d: int, seed: int) -> Dataset:
    """Labels driven by products of feature pairs."""
    if d < 2:
        raise ConfigError("interaction data needs at least 2 features")
    rng = rng_from_seed(seed)
    X = rng.standard_normal((n, d))
    logit = 3.0 * X[:, 0] * X[:, 1]
    if d >= 4:
        logit = logit + 1.5 * X[:, 2] * X[:, 3]
    p = 1.0 / (1.0 + np.exp(-logit))
    y = (rng.random(n) < p).astype(np.int8)
    return _finish(X, y)


def make_additive(n: int, d: int, seed: int) -> Dataset:
    """Labels driven by a sum of monotone single-feature effects."""
    rng = rng_from_seed(seed)
    X = rng.standard_normal((n, d))
    weights = 1.5 * 0.75 ** np.arange(d)
    logit = np.tanh(X) @ weights
    p = 1.0 / (1.0 + np.exp(-2.0 * logit))
    y = (rng.random(n) < p).astype(np.int8)
    return _finish(X, y)


def make_separable_noise(n: int, d: int, seed: int) -> Dataset:
    """Hard linear threshold on half the features; the rest are noise."""
    rng = rng_from_seed(seed)
    X = rng.standard_normal((n, d))
    d_signal = max(1, (d + 1) // 2)
    w = rng.standard_normal(d_signal)
    w /= np.linalg.norm(w)
    y = (X[:, :d_signal] @ w > 0.0).astype(np.int8)
    return _finish(X, y)


def make_synthetic(generator: str, n: int, d: int, seed: int) -> Dataset:
    if n < 2:
        raise ConfigError("synthetic datasets need n >= 2")
    if d < 1:
        raise ConfigError("synthetic datasets need d >= 1")
    if generator == "interaction":
        return make_interaction(n, d, seed)
    if generator == "additive":
        return make_additive(n, d, seed)
    if generator == "separable-noise":
        return make_separable_noise(n, d, seed)
    raise ConfigError(f"unknown generator {generator!r}; choose from {GENERATORS}")

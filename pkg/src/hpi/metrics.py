"""Loss functions for scoring fitted models on a test split.

All three metrics map (scores, labels) to a single float in the metric's
natural orientation; AUC and accuracy are higher-is-better, log-loss is
lower-is-better. Importance math consumes the values as-is (variance is
insensitive to orientation); tuning negates higher-is-better metrics
internally so it can always minimize.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.stats import rankdata

from .errors import ConfigError, DataError

LOG_LOSS_EPS = 1e-12


def _check_pair(scores: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise DataError("scores and labels must be equal-length vectors")
    return scores, labels


def auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Area under the ROC curve via the Mann-Whitney rank statistic.

    Ties between a positive and a negative score earn half credit
    (midranks). Requires both classes present.
    """
    scores, labels = _check_pair(scores, labels)
    if len(scores) < 2:
        raise DataError("auc needs at least two observations")
    n_pos = int(np.sum(labels == 1))
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("auc is undefined when only one class is present")
    ranks = rankdata(scores, method="average")
    rank_sum = float(np.sum(ranks[labels == 1]))
    u = rank_sum - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def log_loss(probabilities: np.ndarray, labels: np.ndarray) -> float:
    """Mean negative log-likelihood with probabilities clipped to [eps, 1-eps]."""
    probs, labels = _check_pair(probabilities, labels)
    p = np.clip(probs, LOG_LOSS_EPS, 1.0 - LOG_LOSS_EPS)
    y = labels.astype(np.float64)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log1p(-p)))


def accuracy(scores: np.ndarray, labels: np.ndarray, threshold: float = 0.5) -> float:
    """Fraction of rows where (score >= threshold) matches the label."""
    scores, labels = _check_pair(scores, labels)
    predicted = (scores >= threshold).astype(np.int64)
    return float(np.mean(predicted == np.asarray(labels, dtype=np.int64)))


@dataclass(frozen=True)
class Metric:
    """A named loss function plus its orientation."""

    kind: str
    higher_is_better: bool
    fn: Callable[[np.ndarray, np.ndarray], float]

    def __call__(self, scores: np.ndarray, labels: np.ndarray) -> float:
        return self.fn(scores, labels)

    def as_risk(self, value: float) -> float:
        """Value on a to-be-minimized scale (used by tuning argmins)."""
        return -value if self.higher_is_better else value


_METRICS = {
    "auc": Metric(kind="auc", higher_is_better=True, fn=auc),
    "logloss": Metric(kind="logloss", higher_is_better=False, fn=log_loss),
    "accuracy": Metric(kind="accuracy", higher_is_better=True, fn=accuracy),
}


def get_metric(name: str) -> Metric:
    try:
        return _METRICS[name]
    except KeyError:
        raise ConfigError(
            f"unknown metric {name!r}; choose from {sorted(_METRICS)}"
        ) from None


METRIC_NAMES = tuple(sorted(_METRICS))

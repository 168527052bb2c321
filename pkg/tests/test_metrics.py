from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hpi.errors import DataError
from hpi.metrics import accuracy, auc, get_metric, log_loss


def brute_force_auc(scores, labels):
    """O(n_pos * n_neg) pairwise oracle with midrank tie credit."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    wins = sum(1.0 for p in pos for q in neg if p > q)
    ties = sum(1.0 for p in pos for q in neg if p == q)
    return (wins + 0.5 * ties) / (len(pos) * len(neg))


class TestAuc:
    def test_perfect_separation(self):
        assert auc([0.9, 0.1], [1, 0]) == 1.0

    def test_all_ties_half(self):
        assert auc([0.3, 0.3, 0.3, 0.3], [1, 0, 1, 0]) == 0.5

    def test_hand_computed_pairs(self):
        # 4 positive-negative pairs: 2 wins, 2 losses
        assert auc([0.8, 0.3, 0.4, 0.9], [1, 0, 1, 0]) == 0.5

    def test_single_class_rejected(self):
        with pytest.raises(DataError):
            auc([0.1, 0.2], [1, 1])

    def test_length_mismatch(self):
        with pytest.raises(DataError):
            auc([0.1, 0.2], [1, 0, 1])

    @given(
        st.lists(st.floats(-5, 5, allow_nan=False), min_size=2, max_size=40),
        st.randoms(use_true_random=False),
    )
    @settings(max_examples=120, deadline=None)
    def test_matches_brute_force(self, scores, rnd):
        labels = [rnd.randint(0, 1) for _ in scores]
        if len(set(labels)) < 2:
            labels[0], labels[1] = 0, 1
        fast = auc(scores, labels)
        slow = brute_force_auc(scores, labels)
        assert abs(fast - slow) <= 1e-12

    @given(
        st.lists(
            st.floats(-3, 3, allow_nan=False).map(lambda x: round(x, 4)),
            min_size=2,
            max_size=30,
            unique=True,
        )
    )
    @settings(max_examples=80, deadline=None)
    def test_monotone_transform_invariance(self, scores):
        labels = [i % 2 for i in range(len(scores))]
        base = auc(scores, labels)
        transformed = auc([math.exp(2.0 * s) for s in scores], labels)
        assert abs(base - transformed) <= 1e-12

    @given(st.lists(st.floats(-3, 3, allow_nan=False), min_size=2, max_size=30, unique=True))
    @settings(max_examples=80, deadline=None)
    def test_negation_complement(self, scores):
        labels = [i % 2 for i in range(len(scores))]
        assert abs(auc(scores, labels) + auc([-s for s in scores], labels) - 1.0) <= 1e-12


class TestLogLoss:
    def test_symmetric_half(self):
        assert abs(log_loss([0.5, 0.5], [0, 1]) - math.log(2)) <= 1e-12

    def test_near_perfect(self):
        assert log_loss([1.0 - 1e-12], [1]) <= 1e-11

    def test_hand_value(self):
        value = log_loss([0.9, 0.1], [1, 0])
        assert abs(value - (-math.log(0.9))) <= 1e-12

    def test_clipping_survives_extremes(self):
        assert math.isfinite(log_loss([0.0, 1.0], [1, 0]))

    def test_length_mismatch(self):
        with pytest.raises(DataError):
            log_loss([0.5], [0, 1])


class TestAccuracy:
    def test_all_correct(self):
        assert accuracy([0.9, 0.1], [1, 0]) == 1.0

    def test_all_wrong(self):
        assert accuracy([0.9, 0.1], [0, 1]) == 0.0

    def test_threshold_inclusive(self):
        assert accuracy([0.5], [1]) == 1.0


def test_metric_registry_orientation():
    assert get_metric("auc").higher_is_better
    assert get_metric("accuracy").higher_is_better
    assert not get_metric("logloss").higher_is_better
    assert get_metric("auc").as_risk(0.8) == -0.8
    assert get_metric("logloss").as_risk(0.8) == 0.8


def test_unknown_metric():
    from hpi.errors import ConfigError

    with pytest.raises(ConfigError):
        get_metric("rmse")

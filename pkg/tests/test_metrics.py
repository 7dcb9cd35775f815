import numpy as np
import pytest
from sklearn.metrics import roc_auc_score

from graphdeconv import (
    ContractViolationError,
    ranking_auc,
    relative_error,
    support_accuracy,
    threshold_support,
)


def test_relative_error_basic():
    X = np.array([[3.0, 0.0], [0.0, 4.0]])
    assert relative_error(X, X) == 0.0
    assert relative_error(np.zeros_like(X), X) == 1.0
    assert relative_error(2 * X, X) == pytest.approx(1.0)
    with pytest.raises(ContractViolationError):
        relative_error(X, np.zeros_like(X))
    with pytest.raises(ContractViolationError):
        relative_error(X, np.eye(3))


def test_threshold_support_is_strict():
    x = np.array([0.05, 0.1, 0.11, -0.2])
    assert np.array_equal(threshold_support(x, 0.1), [False, False, True, True])
    assert np.array_equal(threshold_support(x), [False, False, True, True])


def test_support_accuracy():
    truth = np.array([1.0, 0.0, -2.0, 0.0])
    assert support_accuracy(truth, truth) == 1.0
    est = np.array([1.0, 0.0, 0.0, 0.0])  # one of two active entries found
    assert support_accuracy(est, truth) == 0.5
    assert support_accuracy(np.zeros(4), truth) == 0.0
    # spurious activations outside the true support are not penalized
    assert support_accuracy(np.ones(4), truth) == 1.0
    with pytest.raises(ContractViolationError):
        support_accuracy(est, np.zeros(4))


def test_support_accuracy_threshold():
    truth = np.array([1.0, 0.0])
    est = np.array([0.4, 0.0])
    assert support_accuracy(est, truth, kappa=0.5) == 0.0
    assert support_accuracy(est, truth, kappa=0.3) == 1.0


def test_ranking_auc_hand_cases():
    labels = np.array([True, True, False, False])
    assert ranking_auc(np.array([4.0, 3.0, 2.0, 1.0]), labels) == 1.0
    assert ranking_auc(np.array([1.0, 2.0, 3.0, 4.0]), labels) == 0.0
    # one positive tied with one negative: half credit for that pair
    scores = np.array([3.0, 2.0, 2.0, 1.0])
    assert ranking_auc(scores, labels) == pytest.approx(0.875)
    # all scores equal: chance level
    assert ranking_auc(np.ones(4), labels) == pytest.approx(0.5)


def test_ranking_auc_matches_sklearn(rng):
    for _ in range(20):
        n = int(rng.integers(5, 60))
        labels = rng.random(n) < 0.4
        if labels.all() or not labels.any():
            continue
        scores = np.round(rng.standard_normal(n), 1)  # force some ties
        assert ranking_auc(scores, labels) == pytest.approx(
            roc_auc_score(labels, scores), abs=1e-12
        )


def test_ranking_auc_requires_both_classes():
    with pytest.raises(ContractViolationError):
        ranking_auc(np.array([1.0, 2.0]), np.array([True, True]))
    with pytest.raises(ContractViolationError):
        ranking_auc(np.array([1.0, 2.0]), np.array([False, False]))
    with pytest.raises(ContractViolationError):
        ranking_auc(np.array([1.0, 2.0]), np.array([True]))

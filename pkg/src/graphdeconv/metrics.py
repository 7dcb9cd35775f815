"""Evaluation metrics: relative error, support accuracy, ranking AUC."""

from __future__ import annotations

import numpy as np

from .exceptions import ContractViolationError
from .validation import as_float_array

DEFAULT_SUPPORT_THRESHOLD = 0.1


def relative_error(estimate, truth):
    """Frobenius-norm relative error ||estimate - truth|| / ||truth||."""
    est = as_float_array(estimate, "estimate")
    ref = as_float_array(truth, "truth")
    if est.shape != ref.shape:
        raise ContractViolationError(
            f"shape mismatch: {est.shape} vs {ref.shape}"
        )
    denom = float(np.linalg.norm(ref))
    if denom == 0.0:
        raise ContractViolationError("truth is identically zero")
    return float(np.linalg.norm(est - ref)) / denom


def threshold_support(M, kappa=DEFAULT_SUPPORT_THRESHOLD):
    """Boolean mask of entries strictly larger than kappa in magnitude."""
    M = as_float_array(M, "M")
    if kappa < 0:
        raise ContractViolationError(f"kappa must be >= 0, got {kappa}")
    return np.abs(M) > kappa


def support_accuracy(estimate, truth, kappa=DEFAULT_SUPPORT_THRESHOLD):
    """Fraction of the true above-threshold support hit by the estimate.

    |supp(estimate) intersect supp(truth)| / |supp(truth)|, with supports
    thresholded at kappa.  Requires the thresholded truth support to be
    non-empty.
    """
    est = threshold_support(estimate, kappa)
    ref = threshold_support(truth, kappa)
    if est.shape != ref.shape:
        raise ContractViolationError(
            f"shape mismatch: {est.shape} vs {ref.shape}"
        )
    total = int(ref.sum())
    if total == 0:
        raise ContractViolationError(
            "true support is empty at this threshold"
        )
    return float(np.logical_and(est, ref).sum()) / total


def ranking_auc(scores, labels):
    """Area under the ROC curve by the rank statistic, ties averaged.

    Equals the probability that a uniformly random positive outscores a
    uniformly random negative (ties counting one half).  Both classes
    must be present.
    """
    scores = as_float_array(scores, "scores").ravel()
    labels = np.asarray(labels).ravel()
    if scores.shape != labels.shape:
        raise ContractViolationError("scores and labels must match in length")
    pos = labels.astype(bool)
    n_pos = int(pos.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ContractViolationError("need at least one positive and one negative")

    order = np.argsort(scores, kind="mergesort")
    sorted_scores = scores[order]
    # Average ranks within tie groups.
    new_group = np.r_[True, sorted_scores[1:] != sorted_scores[:-1]]
    group = np.cumsum(new_group) - 1
    counts = np.bincount(group)
    ends = np.cumsum(counts)
    starts = ends - counts
    avg_rank = (starts + ends + 1) / 2.0  # 1-based ranks start+1 .. end
    ranks = np.empty(scores.size)
    ranks[order] = avg_rank[group]
    rank_sum = float(ranks[pos].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)

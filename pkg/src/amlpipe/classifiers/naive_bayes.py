"""Gaussian and multinomial naive Bayes.

The multinomial variant adapts continuous tabular features by binning each
column into equal-width bins over its training range; the bin index plays
the role of a non-negative count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GaussianNBParams:
    class_log_prior: np.ndarray  # (2,)
    means: np.ndarray            # (2, m)
    variances: np.ndarray        # (2, m), floored


@dataclass(frozen=True)
class MultinomialNBParams:
    class_log_prior: np.ndarray    # (2,)
    feature_log_prob: np.ndarray   # (2, m)
    bin_mins: np.ndarray           # (m,)
    bin_widths: np.ndarray         # (m,), 0 for constant columns
    n_bins: int


def fit_gaussian(X, y, var_floor: float) -> GaussianNBParams:
    n = len(y)
    means = np.empty((2, X.shape[1]))
    variances = np.empty((2, X.shape[1]))
    priors = np.empty(2)
    for cls in (0, 1):
        rows = X[y == cls]
        priors[cls] = len(rows) / n
        means[cls] = rows.mean(axis=0)
        variances[cls] = np.maximum(rows.var(axis=0), var_floor)
    return GaussianNBParams(
        class_log_prior=np.log(priors), means=means, variances=variances
    )


def predict_proba_gaussian(params: GaussianNBParams, X) -> np.ndarray:
    joint = np.empty((len(X), 2))
    for cls in (0, 1):
        var = params.variances[cls]
        log_pdf = -0.5 * (
            np.log(2.0 * np.pi * var) + (X - params.means[cls]) ** 2 / var
        )
        joint[:, cls] = params.class_log_prior[cls] + log_pdf.sum(axis=1)
    # P(1 | x) via the stable two-class log-odds.
    return _two_class_posterior(joint)


def bin_features(X, mins, widths, n_bins: int) -> np.ndarray:
    """Equal-width bin indices over the training range, clipped to the bins."""
    X = np.asarray(X, dtype=np.float64)
    safe = np.where(widths == 0.0, 1.0, widths)
    bins = np.floor((X - mins) / safe * n_bins).astype(np.int64)
    bins = np.clip(bins, 0, n_bins - 1)
    bins[:, widths == 0.0] = 0
    return bins


def fit_multinomial(X, y, alpha: float, n_bins: int) -> MultinomialNBParams:
    mins = X.min(axis=0)
    widths = X.max(axis=0) - mins
    counts = bin_features(X, mins, widths, n_bins)

    n = len(y)
    m = X.shape[1]
    priors = np.empty(2)
    feature_log_prob = np.empty((2, m))
    for cls in (0, 1):
        rows = counts[y == cls]
        priors[cls] = len(rows) / n
        totals = rows.sum(axis=0).astype(np.float64)
        smoothed = totals + alpha
        feature_log_prob[cls] = np.log(smoothed / smoothed.sum())
    return MultinomialNBParams(
        class_log_prior=np.log(priors),
        feature_log_prob=feature_log_prob,
        bin_mins=mins,
        bin_widths=widths,
        n_bins=n_bins,
    )


def predict_proba_multinomial(params: MultinomialNBParams, X) -> np.ndarray:
    counts = bin_features(X, params.bin_mins, params.bin_widths, params.n_bins)
    joint = counts @ params.feature_log_prob.T + params.class_log_prior
    return _two_class_posterior(joint)


def _two_class_posterior(joint: np.ndarray) -> np.ndarray:
    delta = joint[:, 1] - joint[:, 0]
    out = np.empty(len(delta))
    pos = delta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-delta[pos]))
    ez = np.exp(delta[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out

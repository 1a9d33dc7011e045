"""Mutual-information scoring of scalar features and the associated error bounds.

All information quantities are in bits.
"""
from __future__ import annotations

import warnings

import numpy as np

from .errors import ValidationError

__all__ = [
    "entropy",
    "gaussian_mi",
    "histogram_mi",
    "itfe_scores",
    "fano_bounds",
]

_LOG2_2PIE = np.log2(2 * np.pi * np.e)


def entropy(priors) -> float:
    p = np.asarray(priors, float)
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def _class_stats(feature, labels):
    classes, inverse, counts = np.unique(labels, return_inverse=True, return_counts=True)
    if classes.size < 2:
        raise ValidationError("mutual information needs at least two classes")
    if counts.min() < 2:
        raise ValidationError("mutual information needs at least two trials per class")
    priors = counts / counts.sum()
    means = np.bincount(inverse, weights=feature) / counts
    var = np.bincount(inverse, weights=(feature - means[inverse]) ** 2) / counts
    return priors, means, var


def gaussian_mi(feature, labels, n_points: int = 512, width: float = 6.0,
                bias_correct: bool = True) -> float:
    """I(c; f) with each class-conditional density taken as a fitted Gaussian.

    The mixture entropy is integrated with the trapezoid rule on
    ``n_points`` nodes spanning ``width`` mixture standard deviations on
    each side of the mixture mean.  With ``bias_correct`` the asymptotic
    plug-in bias ``(n_classes - 1) / (n ln 2)`` bits (one mean and one
    variance per extra class) is subtracted; it is the same for every
    feature of a data set, so rankings are unaffected.
    """
    feature = np.asarray(feature, float)
    labels = np.asarray(labels)
    priors, means, var = _class_stats(feature, labels)
    mix_mean = priors @ means
    mix_var = priors @ (var + means ** 2) - mix_mean ** 2
    if not mix_var > 0:
        warnings.warn("degenerate feature with zero variance; mutual information set to 0", RuntimeWarning)
        return 0.0
    var = np.maximum(var, 1e-12 * mix_var)
    sd = np.sqrt(mix_var)
    x = np.linspace(mix_mean - width * sd, mix_mean + width * sd, n_points)
    dens = priors[:, None] * np.exp(-0.5 * (x - means[:, None]) ** 2 / var[:, None]) / np.sqrt(2 * np.pi * var[:, None])
    p = dens.sum(axis=0)
    integrand = np.zeros_like(p)
    pos = p > 0
    integrand[pos] = -p[pos] * np.log2(p[pos])
    h_mix = np.trapezoid(integrand, x)
    h_cond = priors @ (0.5 * (_LOG2_2PIE + np.log2(var)))
    mi = h_mix - h_cond
    if bias_correct:
        mi -= (priors.size - 1) / (feature.size * np.log(2))
    return float(np.clip(mi, 0.0, entropy(priors)))


def histogram_mi(feature, labels, bins: int = 16) -> float:
    """Plug-in estimate on equal-width bins; a cross-check for :func:`gaussian_mi`."""
    feature = np.asarray(feature, float)
    labels = np.asarray(labels)
    _class_stats(feature, labels)
    if np.ptp(feature) == 0:
        warnings.warn("degenerate feature with zero variance; mutual information set to 0", RuntimeWarning)
        return 0.0
    edges = np.linspace(feature.min(), feature.max(), bins + 1)
    b = np.clip(np.searchsorted(edges, feature, side="right") - 1, 0, bins - 1)
    classes, ci = np.unique(labels, return_inverse=True)
    joint = np.zeros((classes.size, bins))
    np.add.at(joint, (ci, b), 1.0)
    joint /= joint.sum()
    pc = joint.sum(axis=1, keepdims=True)
    pb = joint.sum(axis=0, keepdims=True)
    nz = joint > 0
    return float(max(0.0, np.sum(joint[nz] * np.log2(joint[nz] / (pc @ pb)[nz]))))


def itfe_scores(features, labels, estimator: str = "gaussian") -> np.ndarray:
    """Per-column mutual information between a feature matrix and the labels.

    ``features`` is (n_trials, n_filters).
    """
    features = np.asarray(features, float)
    if features.ndim != 2:
        raise ValidationError("features must be (n_trials, n_filters)")
    try:
        fn = {"gaussian": gaussian_mi, "histogram": histogram_mi}[estimator]
    except KeyError:
        raise ValidationError(f"unknown MI estimator {estimator!r}") from None
    return np.array([fn(features[:, j], labels) for j in range(features.shape[1])])


def fano_bounds(mi: float, priors) -> tuple[float, float]:
    """Fano lower bound and exponential upper bound on the Bayes error.

    Each is clamped to [0, 1] on its own; no ordering between them is enforced.
    """
    priors = np.asarray(priors, float)
    if mi < 0:
        raise ValidationError("mutual information must be non-negative")
    if abs(priors.sum() - 1) > 1e-9 or np.any(priors < 0):
        raise ValidationError("class priors must be non-negative and sum to 1")
    h = entropy(priors)
    n = priors.size
    lower = (h - mi - 1.0) / np.log2(n) if n > 1 else 0.0
    upper = 1.0 - 2.0 ** (mi - h)
    return float(np.clip(lower, 0, 1)), float(np.clip(upper, 0, 1))

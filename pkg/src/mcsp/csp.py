"""Two-class and multiclass common spatial patterns.

Filters are rows of ``W`` and act on a trial as ``Z = W @ E``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .covariance import ClassCovarianceSet, SpatialCovariance
from .dataio import Trial
from .errors import NumericalError, ValidationError
from .itfe import itfe_scores
from .jad import ffdiag

__all__ = [
    "SpatialFilterBank",
    "FeatureVector",
    "canonical_signs",
    "csp_two_class",
    "median_score",
    "median_score_matrix",
    "median_discriminability",
    "select_extremes",
    "extract_features",
    "filter_log_variances",
    "multiclass_csp",
]


@dataclass
class SpatialFilterBank:
    W: np.ndarray
    scores: np.ndarray
    selected: list[int]
    eigvals_per_class: np.ndarray | None = None
    method: str = ""
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.W = np.asarray(self.W, float)
        self.scores = np.asarray(self.scores, float)
        self.selected = [int(i) for i in self.selected]
        k = self.W.shape[0]
        if not np.all(np.isfinite(self.W)) or np.any(np.linalg.norm(self.W, axis=1) == 0):
            raise ValidationError("filter rows must be finite and nonzero")
        if len(set(self.selected)) != len(self.selected) or any(not 0 <= i < k for i in self.selected):
            raise ValidationError(f"selected filter indices must be distinct and within 0..{k - 1}")

    @property
    def selected_filters(self) -> np.ndarray:
        return self.W[self.selected]


@dataclass
class FeatureVector:
    values: np.ndarray
    label: int
    trial_id: int


def canonical_signs(W: np.ndarray) -> np.ndarray:
    """Flip rows so each row's largest-magnitude entry is positive."""
    W = np.array(W, float)
    peak = W[np.arange(W.shape[0]), np.argmax(np.abs(W), axis=1)]
    return W * np.where(peak < 0, -1.0, 1.0)[:, None]


def _mat(c):
    return np.asarray(getattr(c, "matrix", c), float)


def csp_two_class(C1, C2) -> SpatialFilterBank:
    """Whitening of the composite covariance followed by one eigendecomposition.

    Rows of ``W`` are sorted by decreasing class-1 eigenvalue; the class-1 and
    class-2 eigenvalues sum to one for every filter.
    """
    C1, C2 = _mat(C1), _mat(C2)
    if C1.shape != C2.shape or C1.shape[0] != C1.shape[1]:
        raise ValidationError("class covariances must be square and of equal size")
    composite = C1 + C2
    vals, vecs = np.linalg.eigh(composite)
    if vals[0] <= 1e-10:
        raise NumericalError(
            f"composite covariance is rank deficient (min eigenvalue {vals[0]:.3g}); "
            "reduce the channel count before CSP"
        )
    order = np.argsort(vals)[::-1]
    P = (vecs[:, order] / np.sqrt(vals[order])).T
    S1 = P @ C1 @ P.T
    S1 = 0.5 * (S1 + S1.T)
    lam, B = np.linalg.eigh(S1)
    order = np.argsort(lam)[::-1]
    W = canonical_signs(B[:, order].T @ P)
    lam1 = np.einsum("in,nm,im->i", W, C1, W)
    lam2 = np.einsum("in,nm,im->i", W, C2, W)
    return SpatialFilterBank(
        W, lam1, list(range(W.shape[0])), np.vstack([lam1, lam2]), method="csp-two-class"
    )


def select_extremes(n_filters: int, m: int) -> list[int]:
    """First ``m`` and last ``m`` filter indices."""
    if not 1 <= m <= n_filters // 2:
        raise ValidationError(f"m must lie in 1..{n_filters // 2}, got {m}")
    return list(range(m)) + list(range(n_filters - m, n_filters))


def _filtered_power(W, trials):
    # W_j E E' W_j' == ||W_j E||^2
    return np.array([np.sum((W @ t.data) ** 2, axis=1) for t in trials])


def median_score_matrix(W, trials, n_classes: int | None = None) -> np.ndarray:
    """(n_classes, n_filters) median-power ratios, one row per numerator class."""
    W = np.asarray(getattr(W, "W", W), float)
    trials = list(trials)
    labels = np.array([t.label for t in trials])
    n_classes = n_classes or int(labels.max())
    if trials and W.shape[1] != trials[0].n_channels:
        raise ValidationError(f"filters have {W.shape[1]} taps, trials have {trials[0].n_channels} channels")
    power = _filtered_power(W, trials)
    med = np.empty((n_classes, W.shape[0]))
    for c in range(1, n_classes + 1):
        sel = labels == c
        if not sel.any():
            raise ValidationError(f"class {c} has no trials for median scoring")
        med[c - 1] = np.median(power[sel], axis=0)
    return med / med.sum(axis=0)


def median_score(W, trials, numerator_class: int = 1, n_classes: int | None = None) -> np.ndarray:
    """Median filtered power of ``numerator_class`` over the sum across classes, in [0, 1]."""
    return median_score_matrix(W, trials, n_classes)[numerator_class - 1]


def median_discriminability(W, trials, n_classes: int | None = None) -> np.ndarray:
    """Largest deviation of any class's median ratio from the chance value 1/n_classes."""
    ratios = median_score_matrix(W, trials, n_classes)
    return np.max(np.abs(ratios - 1.0 / ratios.shape[0]), axis=0)


def extract_features(trial: Trial, W, selected=None) -> FeatureVector:
    """Normalized log-variance of the selected filter outputs."""
    if isinstance(W, SpatialFilterBank):
        selected = W.selected if selected is None else selected
        W = W.W
    selected = list(selected)
    if len(selected) < 2:
        raise ValidationError("need at least two selected filters")
    Z = np.asarray(W)[selected] @ trial.data
    var = Z.var(axis=1)
    bad = np.flatnonzero(var <= 0)
    if bad.size:
        raise NumericalError(f"trial {trial.id}: filter {selected[int(bad[0])]} output has zero variance")
    return FeatureVector(np.log(var / var.sum()), trial.label, trial.id)


def filter_log_variances(W, trials) -> np.ndarray:
    """(n_trials, n_filters) log-variance features normalized over every filter."""
    W = np.asarray(W, float)
    return np.array([extract_features(t, W, range(W.shape[0])).values for t in trials])


def multiclass_csp(ccs: ClassCovarianceSet, k: int, trials, *, estimator: str = "gaussian",
                   max_iter: int = 100, tol: float = 1e-9) -> SpatialFilterBank:
    """Joint diagonalization of the class averages, then MI-ranked filter selection.

    ``trials`` provide the per-filter features for scoring; outlier trials
    may be included since they only enter the ranking, not the filters.
    """
    if ccs.n_classes < 2:
        raise ValidationError("multiclass CSP needs at least two classes")
    covs = ccs.matrices()
    n = covs[0].shape[0]
    if not 1 <= k <= n:
        raise ValidationError(f"k must lie in 1..{n}, got {k}")
    jad = ffdiag(covs, max_iter=max_iter, tol=tol)
    jad.W = canonical_signs(jad.W)
    W = jad.W
    trials = list(trials)
    feats = filter_log_variances(W, trials)
    scores = itfe_scores(feats, [t.label for t in trials], estimator)
    selected = np.argsort(-scores, kind="stable")[:k]
    return SpatialFilterBank(
        W, scores, selected.tolist(), jad.diagonals(covs),
        method=f"ffdiag+{estimator}-mi",
        info={"converged": jad.converged, "n_iter": jad.n_iter, "objective": jad.objective[-1]},
    )

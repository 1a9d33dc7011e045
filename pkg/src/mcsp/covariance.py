"""Spatial covariance estimation, norm-based trial screening and class averaging."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataio import Trial
from .errors import NumericalError, ValidationError

__all__ = [
    "SpatialCovariance",
    "ClassAverage",
    "ClassCovarianceSet",
    "spatial_covariance",
    "trial_norms",
    "outlier_mask",
    "class_outlier_mask",
    "class_average",
]


@dataclass
class SpatialCovariance:
    matrix: np.ndarray
    normalized: bool

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError(f"covariance must be square, got shape {m.shape}")
        self.matrix = m

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


@dataclass
class ClassAverage:
    label: int
    cov: SpatialCovariance
    n_retained: int
    n_rejected: int
    rejected_ids: list[int] = field(default_factory=list)


@dataclass
class ClassCovarianceSet:
    per_class: list[ClassAverage]
    outlier_ids: list[int]

    @property
    def n_classes(self) -> int:
        return len(self.per_class)

    def matrices(self) -> list[np.ndarray]:
        return [ca.cov.matrix for ca in self.per_class]


def _scatter(data: np.ndarray) -> np.ndarray:
    c = data @ data.T
    # exact symmetry; matmul rounding can differ across the diagonal
    return 0.5 * (c + c.T)


def spatial_covariance(trial: Trial, normalize: bool = True) -> SpatialCovariance:
    """``E E'``, optionally divided by its trace."""
    c = _scatter(trial.data)
    if normalize:
        tr = np.trace(c)
        if not tr > 0:
            raise NumericalError(f"trial {trial.id}: zero trace, cannot normalize covariance")
        c = c / tr
    return SpatialCovariance(c, normalize)


def trial_norms(trials: list[Trial]) -> np.ndarray:
    """Frobenius norm of the un-normalized scatter ``E E'`` of each trial.

    The trace-normalized matrices all have unit trace, so their magnitudes
    carry no information about artifact amplitude; the raw scatter does.
    """
    if not trials:
        raise ValidationError("trial_norms needs at least one trial")
    n = trials[0].n_channels
    out = np.empty(len(trials))
    for i, tr in enumerate(trials):
        if tr.n_channels != n:
            raise ValidationError(f"trial {tr.id}: {tr.n_channels} channels, expected {n}")
        out[i] = np.linalg.norm(_scatter(tr.data), "fro")
    return out


def outlier_mask(norms, z_threshold: float) -> np.ndarray:
    """True where ``|z-score| > z_threshold``; nothing is flagged when the spread is zero."""
    norms = np.asarray(norms, dtype=np.float64)
    if norms.size < 2:
        raise ValidationError("outlier_mask needs at least two norms")
    if not z_threshold > 0:
        raise ValidationError(f"z_threshold must be positive, got {z_threshold}")
    std = norms.std()
    if std == 0 or std <= 1e-14 * np.abs(norms).max():
        return np.zeros(norms.size, dtype=bool)
    z = (norms - norms.mean()) / std
    return np.abs(z) > z_threshold


def class_outlier_mask(trials: list[Trial], z_threshold: float) -> np.ndarray:
    """Per-class screening: z-scores are computed within each class."""
    mask = np.zeros(len(trials), dtype=bool)
    labels = np.array([t.label for t in trials])
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        if idx.size < 2:
            continue
        mask[idx] = outlier_mask(trial_norms([trials[i] for i in idx]), z_threshold)
    return mask


def class_average(trials: list[Trial], labels=None, mask=None, n_classes: int | None = None) -> ClassCovarianceSet:
    """Mean trace-normalized covariance of the retained trials of each class.

    ``mask`` flags trials to drop.  Summation follows trial order so results
    are reproducible bit for bit.
    """
    if labels is None:
        labels = [t.label for t in trials]
    labels = np.asarray(labels, dtype=int)
    if mask is None:
        mask = np.zeros(len(trials), dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if not (len(trials) == labels.size == mask.size):
        raise ValidationError("trials, labels and mask must have equal length")
    classes = range(1, n_classes + 1) if n_classes else sorted(set(labels.tolist()))

    per_class = []
    outliers = []
    for c in classes:
        idx = np.flatnonzero(labels == c)
        kept = [i for i in idx if not mask[i]]
        dropped = [int(trials[i].id) for i in idx if mask[i]]
        if not kept:
            raise ValidationError(f"class {c} has no trials left after outlier rejection")
        acc = np.zeros((trials[kept[0]].n_channels,) * 2)
        for i in kept:
            acc += spatial_covariance(trials[i], normalize=True).matrix
        per_class.append(
            ClassAverage(int(c), SpatialCovariance(acc / len(kept), True), len(kept), len(dropped), dropped)
        )
        outliers.extend(dropped)
    return ClassCovarianceSet(per_class, outliers)

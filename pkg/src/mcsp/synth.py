"""Ground-truth generator for multiclass motor-imagery-like trials.

Each trial is ``mixing @ sources + noise`` where source ``c - 1`` carries
extra variance for class ``c``.  Artifact trials are the clean trial plus a
rank-one burst along a random direction, scaled by ``outlier_gain``.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy import signal
from scipy.stats import ortho_group

from .dataio import Trial, TrialSet
from .errors import ValidationError

__all__ = ["SynthSpec", "GroundTruth", "default_profile", "generate", "generate_session"]


def default_profile(n_channels: int, n_classes: int, contrast: float = 4.0) -> np.ndarray:
    """Unit source variances, with source ``c - 1`` raised to ``contrast`` for class ``c``."""
    prof = np.ones((n_classes, n_channels))
    for c in range(min(n_classes, n_channels)):
        prof[c, c] = contrast
    return prof


@dataclass
class SynthSpec:
    n_channels: int = 22
    n_classes: int = 4
    trials_per_class: int = 72
    samples_per_trial: int = 500
    fs: float = 250.0
    mixing: np.ndarray | None = None
    class_variance_profile: np.ndarray | None = None
    noise_variance: float = 0.1
    outlier_rate: float = 0.0
    outlier_gain: float = 20.0
    seed: int = 0
    band_limited: bool = False
    contrast: float = 4.0

    def resolved(self) -> "SynthSpec":
        """Copy with the random mixing and the default profile filled in, validated."""
        if self.n_channels < 2 or self.n_classes < 1 or self.trials_per_class < 1 or self.samples_per_trial < 2:
            raise ValidationError("synth: need n_channels >= 2, n_classes >= 1, trials >= 1, samples >= 2")
        if not 0 <= self.outlier_rate < 1:
            raise ValidationError(f"synth: outlier_rate must lie in [0, 1), got {self.outlier_rate}")
        if self.noise_variance < 0 or self.outlier_gain <= 0:
            raise ValidationError("synth: noise_variance must be >= 0 and outlier_gain > 0")
        mixing = self.mixing
        if mixing is None:
            rng = np.random.default_rng(np.random.SeedSequence([self.seed, 0x4D4958]))
            mixing = ortho_group.rvs(self.n_channels, random_state=rng)
        mixing = np.asarray(mixing, float)
        if mixing.shape != (self.n_channels, self.n_channels):
            raise ValidationError(f"synth: mixing must be {self.n_channels}x{self.n_channels}")
        if np.linalg.cond(mixing) >= 1e6:
            raise ValidationError("synth: mixing matrix is ill-conditioned (cond >= 1e6)")
        prof = self.class_variance_profile
        if prof is None:
            prof = default_profile(self.n_channels, self.n_classes, self.contrast)
        prof = np.asarray(prof, float)
        if prof.shape != (self.n_classes, self.n_channels) or np.any(prof <= 0):
            raise ValidationError("synth: profile must be (n_classes, n_channels) of positive variances")
        out = SynthSpec(**{**self.__dict__, "mixing": mixing, "class_variance_profile": prof})
        return out


@dataclass
class GroundTruth:
    mixing: np.ndarray
    profiles: np.ndarray
    noise_variance: float
    outlier: np.ndarray  # bool per trial, in trial order
    outlier_ids: list[int] = field(default_factory=list)

    def class_covariance(self, label: int, normalize: bool = True) -> np.ndarray:
        """Population covariance of class ``label`` (per-sample, source-level)."""
        a = self.mixing
        c = a @ np.diag(self.profiles[label - 1]) @ a.T + self.noise_variance * np.eye(a.shape[0])
        return c / np.trace(c) if normalize else c

    def to_json(self) -> str:
        d = asdict(self)
        d["mixing"] = self.mixing.tolist()
        d["profiles"] = self.profiles.tolist()
        d["outlier"] = self.outlier.astype(int).tolist()
        return json.dumps(d)


def _sources(rng, n, t, band, fs):
    s = rng.standard_normal((n, t))
    if band:
        sos = signal.butter(4, [8.0, 30.0], btype="bandpass", fs=fs, output="sos")
        s = signal.sosfiltfilt(sos, s, axis=1)
        s /= s.std(axis=1, keepdims=True)
    return s


def generate(spec: SynthSpec) -> tuple[TrialSet, GroundTruth]:
    spec = spec.resolved()
    n, t = spec.n_channels, spec.samples_per_trial
    labels = np.repeat(np.arange(1, spec.n_classes + 1), spec.trials_per_class)
    root = np.random.SeedSequence(spec.seed)
    order_rng = np.random.default_rng(root.spawn(1)[0])
    labels = labels[order_rng.permutation(labels.size)]

    n_out = int(round(spec.outlier_rate * spec.trials_per_class))
    flagged = np.zeros(labels.size, dtype=bool)
    for c in range(1, spec.n_classes + 1):
        idx = np.flatnonzero(labels == c)
        if n_out:
            flagged[order_rng.choice(idx, size=n_out, replace=False)] = True

    trial_seeds = root.spawn(labels.size + 1)[1:]
    trials = []
    for i, (label, seed) in enumerate(zip(labels, trial_seeds)):
        rng = np.random.default_rng(seed)
        src = _sources(rng, n, t, spec.band_limited, spec.fs)
        src *= np.sqrt(spec.class_variance_profile[label - 1])[:, None]
        data = spec.mixing @ src
        if spec.noise_variance:
            data += np.sqrt(spec.noise_variance) * rng.standard_normal((n, t))
        if flagged[i]:
            u = rng.standard_normal(n)
            u /= np.linalg.norm(u)
            power = np.sum(spec.class_variance_profile[label - 1]) + n * spec.noise_variance
            burst = np.sqrt(power) * rng.standard_normal(t)
            data = spec.outlier_gain * (data + np.outer(u, burst))
        trials.append(Trial(i, int(label), spec.fs, data))

    ts = TrialSet(spec.n_classes, spec.fs, trials, n)
    gt = GroundTruth(
        spec.mixing, spec.class_variance_profile, spec.noise_variance, flagged,
        [int(i) for i in np.flatnonzero(flagged)],
    )
    return ts, gt


def generate_session(spec: SynthSpec) -> tuple[TrialSet, TrialSet, GroundTruth]:
    """Training and evaluation sets sharing one mixing matrix and class profile.

    The evaluation set uses an independent seed derived from ``spec.seed``
    and carries no artifact trials.
    """
    spec = spec.resolved()
    train, gt = generate(spec)
    test_seed = int(np.random.SeedSequence([spec.seed, 1]).generate_state(1)[0])
    test, _ = generate(replace(spec, seed=test_seed, outlier_rate=0.0))
    return train, test, gt

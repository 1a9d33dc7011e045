"""Band-pass filtering and epoch windowing."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from .dataio import Trial
from .errors import NumericalError, ValidationError

__all__ = ["IIRFilterSpec", "design_bandpass", "apply_filter", "epoch", "frequency_response"]


@dataclass(frozen=True)
class IIRFilterSpec:
    order: int
    low_hz: float
    high_hz: float
    fs: float
    sections: np.ndarray  # (n_sections, 6) in scipy ``sos`` layout

    def poles(self) -> np.ndarray:
        return np.concatenate([np.roots(s[3:]) for s in self.sections])


def design_bandpass(order: int, low_hz: float, high_hz: float, fs: float) -> IIRFilterSpec:
    """Butterworth band-pass as cascaded second-order sections.

    The bilinear transform pre-warps both band edges, so the -3 dB points
    land on ``low_hz`` and ``high_hz``.
    """
    if order < 1:
        raise ValidationError(f"filter order must be >= 1, got {order}")
    if not 0 < low_hz < high_hz < fs / 2:
        raise ValidationError(
            f"band edges must satisfy 0 < low < high < fs/2, got {low_hz}, {high_hz} at fs={fs}"
        )
    sos = signal.butter(order, [low_hz, high_hz], btype="bandpass", fs=fs, output="sos")
    spec = IIRFilterSpec(order, float(low_hz), float(high_hz), float(fs), sos)
    if not np.all(np.isfinite(sos)) or np.max(np.abs(spec.poles())) >= 1.0:
        raise NumericalError(f"unstable band-pass design for {low_hz}-{high_hz} Hz, order {order}")
    return spec


def frequency_response(spec: IIRFilterSpec, freqs_hz) -> np.ndarray:
    """Complex response of the cascade at the given frequencies."""
    _, h = signal.sosfreqz(spec.sections, worN=np.atleast_1d(np.asarray(freqs_hz, float)), fs=spec.fs)
    return h


def apply_filter(trial: Trial, spec: IIRFilterSpec, zero_phase: bool = False) -> Trial:
    """Filter every channel independently.

    Causal (forward-only) by default; ``zero_phase`` runs forward-backward.
    """
    if trial.fs != spec.fs:
        raise ValidationError(f"trial {trial.id}: fs {trial.fs} does not match filter fs {spec.fs}")
    if zero_phase:
        out = signal.sosfiltfilt(spec.sections, trial.data, axis=1)
    else:
        out = signal.sosfilt(spec.sections, trial.data, axis=1)
    return trial.replace(out)


def epoch(trial: Trial, start_s: float, end_s: float) -> Trial:
    """Samples in ``[start_s, end_s)`` measured from the start of the trial."""
    duration = trial.n_samples / trial.fs
    if not 0 <= start_s < end_s <= duration + 1e-9:
        raise ValidationError(
            f"trial {trial.id}: window [{start_s}, {end_s}) outside recording of {duration:g} s"
        )
    first = int(round(start_s * trial.fs))
    count = int(round((end_s - start_s) * trial.fs))
    if first + count > trial.n_samples:
        raise ValidationError(f"trial {trial.id}: window [{start_s}, {end_s}) exceeds recording")
    return trial.replace(trial.data[:, first:first + count])

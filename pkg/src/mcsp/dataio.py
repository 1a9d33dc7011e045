"""Trial containers and the little-endian binary trial format.

File layout::

    b"CSPK1\\0"
    header   <u32 n_classes> <f64 fs_hz> <u32 n_channels> <u32 n_trials>
    records  <u32 id> <u32 label> <u32 n_samples> <f64 data[n_channels * n_samples]>

Samples are stored row-major (channel by channel).  A manifest is a UTF-8
JSON document naming the subject, session and the trial files.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ValidationError

__all__ = [
    "MAGIC",
    "Trial",
    "TrialSet",
    "read_trialset",
    "write_trialset",
    "read_manifest",
    "write_manifest",
]

MAGIC = b"CSPK1\x00"
_HEADER = struct.Struct("<IdII")
_RECORD = struct.Struct("<III")


@dataclass
class Trial:
    """One epoch of multichannel EEG, ``data`` is (n_channels, n_samples)."""

    id: int
    label: int
    fs: float
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise ValidationError(f"trial {self.id}: data must be 2-D, got shape {self.data.shape}")
        n, t = self.data.shape
        if n < 2 or t < 2:
            raise ValidationError(f"trial {self.id}: need >= 2 channels and >= 2 samples, got {n}x{t}")
        if not np.all(np.isfinite(self.data)):
            raise ValidationError(f"trial {self.id}: non-finite sample")
        if self.fs <= 0:
            raise ValidationError(f"trial {self.id}: sampling rate must be positive")

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    def replace(self, data) -> "Trial":
        return Trial(self.id, self.label, self.fs, data)


@dataclass
class TrialSet:
    n_classes: int
    fs: float
    trials: list[Trial] = field(default_factory=list)
    n_channels: int | None = None

    def __post_init__(self):
        if self.n_classes < 1:
            raise ValidationError("n_classes must be >= 1")
        if self.trials and self.n_channels is None:
            self.n_channels = self.trials[0].n_channels
        for i, tr in enumerate(self.trials):
            _check_trial(tr, self, i)

    def __len__(self):
        return len(self.trials)

    def __iter__(self):
        return iter(self.trials)

    @property
    def labels(self) -> np.ndarray:
        return np.array([t.label for t in self.trials], dtype=int)

    @property
    def ids(self) -> np.ndarray:
        return np.array([t.id for t in self.trials], dtype=int)

    def by_class(self, label: int) -> list[Trial]:
        return [t for t in self.trials if t.label == label]

    def require_all_classes(self):
        present = set(self.labels.tolist())
        missing = [c for c in range(1, self.n_classes + 1) if c not in present]
        if missing:
            raise ValidationError(f"training set has no trials for class(es) {missing}")

    def map(self, fn) -> "TrialSet":
        """Apply ``fn`` to every trial, keeping the set metadata."""
        return TrialSet(self.n_classes, self.fs, [fn(t) for t in self.trials], self.n_channels)


def _check_trial(trial: Trial, ts: TrialSet, index: int):
    if not 1 <= trial.label <= ts.n_classes:
        raise ValidationError(
            f"record {index}: label {trial.label} outside 1..{ts.n_classes}"
        )
    if trial.fs != ts.fs:
        raise ValidationError(f"record {index}: fs {trial.fs} differs from set fs {ts.fs}")
    if ts.n_channels is not None and trial.n_channels != ts.n_channels:
        raise ValidationError(
            f"record {index}: {trial.n_channels} channels, expected {ts.n_channels}"
        )


def write_trialset(ts: TrialSet, path) -> None:
    n_channels = ts.n_channels if ts.n_channels is not None else 0
    for i, tr in enumerate(ts.trials):
        _check_trial(tr, ts, i)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEADER.pack(ts.n_classes, float(ts.fs), n_channels, len(ts.trials)))
        for tr in ts.trials:
            fh.write(_RECORD.pack(tr.id, tr.label, tr.n_samples))
            fh.write(np.ascontiguousarray(tr.data, dtype="<f8").tobytes())


def read_trialset(path) -> TrialSet:
    """Read a trial file; any malformed record is reported by index."""
    buf = Path(path).read_bytes()
    if buf[: len(MAGIC)] != MAGIC:
        raise ValidationError(f"{path}: bad magic bytes, not a trial file")
    off = len(MAGIC)
    if len(buf) < off + _HEADER.size:
        raise ValidationError(f"{path}: truncated header")
    n_classes, fs, n_channels, n_trials = _HEADER.unpack_from(buf, off)
    off += _HEADER.size
    if n_classes < 1 or not np.isfinite(fs) or fs <= 0:
        raise ValidationError(f"{path}: malformed header (n_classes={n_classes}, fs={fs})")
    if n_trials and n_channels < 2:
        raise ValidationError(f"{path}: header declares {n_channels} channels, need >= 2")

    trials = []
    for i in range(n_trials):
        if len(buf) < off + _RECORD.size:
            raise ValidationError(f"{path}: record {i}: truncated record header")
        tid, label, n_samples = _RECORD.unpack_from(buf, off)
        off += _RECORD.size
        nbytes = 8 * n_channels * n_samples
        if len(buf) < off + nbytes:
            raise ValidationError(
                f"{path}: record {i}: payload shorter than {n_channels} channels x {n_samples} samples"
            )
        data = np.frombuffer(buf, dtype="<f8", count=n_channels * n_samples, offset=off)
        off += nbytes
        if not 1 <= label <= n_classes:
            raise ValidationError(f"{path}: record {i}: label {label} outside 1..{n_classes}")
        if not np.all(np.isfinite(data)):
            raise ValidationError(f"{path}: record {i}: non-finite sample")
        try:
            trials.append(
                Trial(tid, label, fs, data.reshape(n_channels, n_samples).astype(np.float64))
            )
        except ValidationError as exc:
            raise ValidationError(f"{path}: record {i}: {exc}") from None
    if off != len(buf):
        raise ValidationError(f"{path}: {len(buf) - off} trailing bytes after record {n_trials - 1}")
    return TrialSet(n_classes, fs, trials, n_channels or None)


def write_manifest(path, subjects: list[dict]) -> None:
    """Each entry: ``{"subject": id, "session": name, "train": path, "test": path}``."""
    Path(path).write_text(json.dumps({"version": 1, "subjects": subjects}, indent=2) + "\n", encoding="utf-8")


def read_manifest(path) -> list[dict]:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: manifest is not valid JSON ({exc})") from None
    subjects = doc.get("subjects")
    if not isinstance(subjects, list):
        raise ValidationError(f"{path}: manifest needs a 'subjects' list")
    out = []
    for i, entry in enumerate(subjects):
        for key in ("subject", "train", "test"):
            if key not in entry:
                raise ValidationError(f"{path}: subject entry {i} lacks '{key}'")
        resolved = dict(entry)
        for key in ("train", "test"):
            p = Path(entry[key])
            resolved[key] = str(p if p.is_absolute() else path.parent / p)
        resolved.setdefault("session", "")
        out.append(resolved)
    return out

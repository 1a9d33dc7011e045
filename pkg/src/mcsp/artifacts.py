"""Self-describing binary files for stage artifacts.

Every file is ``magic (6 bytes) | u32 header length | UTF-8 JSON header |
little-endian f64 payload``.  The header carries a format version and the
shape of each payload array, so files can be reloaded on their own.
"""
from __future__ import annotations

import json
import struct
from collections import deque
from pathlib import Path

import numpy as np

from .covariance import ClassAverage, ClassCovarianceSet, SpatialCovariance
from .csp import FeatureVector, SpatialFilterBank
from .errors import ValidationError
from .srit2nfis import SRIT2NFIS, HyperParams

__all__ = [
    "write_features",
    "read_features",
    "write_filterbank",
    "read_filterbank",
    "write_class_covariances",
    "read_class_covariances",
    "save_model",
    "load_model",
]

FEATURES_MAGIC = b"CSPV1\x00"
FILTERBANK_MAGIC = b"CSPF1\x00"
COVARIANCE_MAGIC = b"CSPC1\x00"
MODEL_MAGIC = b"SRIT1\x00"
VERSION = 1


def _write(path, magic, header, arrays):
    header = dict(header, version=VERSION, arrays=[list(a.shape) for a in arrays])
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for a in arrays:
            fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def _read(path, magic):
    buf = Path(path).read_bytes()
    if buf[:6] != magic:
        raise ValidationError(f"{path}: expected magic {magic!r}, found {buf[:6]!r}")
    (hlen,) = struct.unpack_from("<I", buf, 6)
    try:
        header = json.loads(buf[10:10 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValidationError(f"{path}: corrupt header ({exc})") from None
    if header.get("version") != VERSION:
        raise ValidationError(f"{path}: unsupported format version {header.get('version')}")
    off = 10 + hlen
    arrays = []
    for shape in header["arrays"]:
        count = int(np.prod(shape)) if shape else 1
        if len(buf) < off + 8 * count:
            raise ValidationError(f"{path}: truncated payload")
        arrays.append(np.frombuffer(buf, "<f8", count, off).reshape(shape).astype(np.float64))
        off += 8 * count
    if off != len(buf):
        raise ValidationError(f"{path}: {len(buf) - off} trailing bytes")
    return header, arrays


def write_features(path, features: list[FeatureVector], n_classes: int, meta: dict | None = None) -> None:
    dim = len(features[0].values) if features else 0
    X = np.array([f.values for f in features], float).reshape(len(features), dim)
    header = {
        "kind": "features",
        "n_classes": int(n_classes),
        "labels": [int(f.label) for f in features],
        "trial_ids": [int(f.trial_id) for f in features],
        "meta": meta or {},
    }
    _write(path, FEATURES_MAGIC, header, [X])


def read_features(path) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Return ``(X, labels, trial_ids, n_classes)``."""
    header, (X,) = _read(path, FEATURES_MAGIC)
    labels = np.array(header["labels"], dtype=int)
    if labels.size and (labels.min() < 1 or labels.max() > header["n_classes"]):
        raise ValidationError(f"{path}: label outside 1..{header['n_classes']}")
    return X, labels, np.array(header["trial_ids"], dtype=int), int(header["n_classes"])


def write_filterbank(path, bank: SpatialFilterBank) -> None:
    arrays = [bank.W]
    if bank.eigvals_per_class is not None:
        arrays.append(np.asarray(bank.eigvals_per_class, float))
    header = {
        "kind": "filterbank",
        "scores": [float(s) for s in bank.scores],
        "selected": list(bank.selected),
        "method": bank.method,
        "info": bank.info,
    }
    _write(path, FILTERBANK_MAGIC, header, arrays)


def read_filterbank(path) -> SpatialFilterBank:
    header, arrays = _read(path, FILTERBANK_MAGIC)
    eig = arrays[1] if len(arrays) > 1 else None
    return SpatialFilterBank(arrays[0], np.array(header["scores"]), header["selected"], eig,
                             header["method"], header["info"])


def write_class_covariances(path, ccs: ClassCovarianceSet) -> None:
    header = {
        "kind": "class-covariances",
        "classes": [
            {"label": ca.label, "n_retained": ca.n_retained, "n_rejected": ca.n_rejected,
             "rejected_ids": ca.rejected_ids}
            for ca in ccs.per_class
        ],
        "outlier_ids": ccs.outlier_ids,
    }
    _write(path, COVARIANCE_MAGIC, header, [ca.cov.matrix for ca in ccs.per_class])


def read_class_covariances(path) -> ClassCovarianceSet:
    header, arrays = _read(path, COVARIANCE_MAGIC)
    per_class = [
        ClassAverage(d["label"], SpatialCovariance(a, True), d["n_retained"], d["n_rejected"], d["rejected_ids"])
        for d, a in zip(header["classes"], arrays)
    ]
    return ClassCovarianceSet(per_class, header["outlier_ids"])


def save_model(path, model: SRIT2NFIS) -> None:
    header = {
        "kind": "srit2nfis",
        "n_classes": model.n_classes,
        "dim": model.dim,
        "hyper": model.hyper.to_dict(),
        "add_threshold": model.add_threshold,
        "update_threshold": model.update_threshold,
        "rule_ids": model.rule_ids.tolist(),
        "class_assoc": model.class_assoc.tolist(),
        "born": model.born.tolist(),
        "contrib": [list(d) for d in model.contrib],
        "n_seen": model.n_seen,
        "next_rule_id": model.next_rule_id,
        "classes_seen": sorted(model.classes_seen),
        "input_mean": model._mean.tolist(),
        "input_m2": model._m2.tolist(),
        "reserve_queue": [[x.tolist(), c] for x, c in model.reserve_queue],
    }
    _write(path, MODEL_MAGIC, header,
           [model.mean_lo, model.mean_hi, model.sigma, model.weights])


def load_model(path) -> SRIT2NFIS:
    header, (lo, hi, sigma, weights) = _read(path, MODEL_MAGIC)
    m = SRIT2NFIS(header["n_classes"], header["dim"], HyperParams.from_dict(header["hyper"]))
    m.mean_lo = lo.reshape(-1, m.dim)
    m.mean_hi = hi.reshape(-1, m.dim)
    m.sigma = sigma.reshape(-1, m.dim)
    m.weights = weights.reshape(-1, m.n_classes)
    m.add_threshold = header["add_threshold"]
    m.update_threshold = header["update_threshold"]
    m.rule_ids = np.array(header["rule_ids"], dtype=int)
    m.class_assoc = np.array(header["class_assoc"], dtype=int)
    m.born = np.array(header["born"], dtype=int)
    m.contrib = [deque(c, maxlen=m.hyper.prune_window) for c in header["contrib"]]
    m.n_seen = header["n_seen"]
    m.next_rule_id = header["next_rule_id"]
    m.classes_seen = set(header["classes_seen"])
    m._mean = np.array(header["input_mean"], float)
    m._m2 = np.array(header["input_m2"], float)
    m.reserve_queue = [(np.array(x, float), int(c)) for x, c in header["reserve_queue"]]
    return m

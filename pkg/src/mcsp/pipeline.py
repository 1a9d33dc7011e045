"""End-to-end driver: filter, window, screen, CSP, features, classifier, report."""
from __future__ import annotations

import csv
import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import artifacts, reference
from .covariance import class_average, class_outlier_mask
from .csp import csp_two_class, extract_features, multiclass_csp, select_extremes
from .dataio import TrialSet, read_manifest, read_trialset
from .errors import StageError, ValidationError
from .preprocess import apply_filter, design_bandpass, epoch
from .pso import PSOConfig, stratified_tail_split, tune
from .srit2nfis import SRIT2NFIS, HyperParams

__all__ = [
    "PipelineConfig",
    "EvaluationReport",
    "derive_seed",
    "load_config",
    "parse_config_text",
    "run_pipeline",
    "run_subject",
    "run_manifest",
    "compare_report",
    "write_comparison_csv",
]

log = logging.getLogger(__name__)

REPORT_SCHEMA = 1


@dataclass
class PipelineConfig:
    train: str | None = None
    test: str | None = None
    manifest: str | None = None
    output: str = "mcsp-out"
    subject: str = "1"
    band: tuple[float, float] = (8.0, 40.0)
    order: int = 5
    zero_phase: bool = False
    # seconds from trial start; 2.5-6.0 is 0.5-4.0 s after a cue at 2 s
    window: tuple[float, float] | None = (2.5, 6.0)
    z_threshold: float = 2.5
    drop_outliers: bool = False
    m: int = 3
    k: int = 6
    ffdiag_iters: int = 100
    ffdiag_tol: float = 1e-9
    mi_estimator: str = "gaussian"
    tune: bool = False
    add_threshold_init: float = HyperParams.add_threshold_init
    novelty_threshold: float = HyperParams.novelty_threshold
    inter_overlap: float = HyperParams.inter_overlap
    update_threshold_init: float = HyperParams.update_threshold_init
    max_passes: int = 3
    pso_iters: int = 10
    pso_width: float = 0.2
    pso_swarm: int = 10
    val_fraction: float = 0.25
    seed: int = 0

    def validate(self) -> "PipelineConfig":
        lo, hi = self.band
        if not 0 < lo < hi:
            raise ValidationError(f"band must satisfy 0 < low < high, got {self.band}")
        if self.order < 1:
            raise ValidationError("order must be >= 1")
        if self.window is not None and not 0 <= self.window[0] < self.window[1]:
            raise ValidationError(f"window must satisfy 0 <= start < end, got {self.window}")
        if not self.z_threshold > 0:
            raise ValidationError("z_threshold must be positive")
        if self.m < 1 or self.k < 1:
            raise ValidationError("m and k must be >= 1")
        if self.ffdiag_iters < 1 or not self.ffdiag_tol > 0:
            raise ValidationError("ffdiag_iters must be >= 1 and ffdiag_tol > 0")
        if self.mi_estimator not in ("gaussian", "histogram"):
            raise ValidationError(f"mi_estimator must be gaussian or histogram, got {self.mi_estimator!r}")
        if not 0 < self.val_fraction < 1:
            raise ValidationError("val_fraction must lie in (0, 1)")
        self.hyper()
        self.pso_config()
        return self

    def hyper(self) -> HyperParams:
        return HyperParams(
            add_threshold_init=self.add_threshold_init,
            novelty_threshold=self.novelty_threshold,
            inter_overlap=self.inter_overlap,
            update_threshold_init=self.update_threshold_init,
        )

    def pso_config(self) -> PSOConfig:
        return PSOConfig(iterations=self.pso_iters, swarm_size=self.pso_swarm,
                         parameter_width=self.pso_width, seed=derive_seed(self.seed, "pso"),
                         max_passes=self.max_passes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["band"] = list(self.band)
        d["window"] = list(self.window) if self.window is not None else None
        return d


def derive_seed(root: int, stage: str) -> int:
    """Stable per-stage seed from the root seed."""
    digest = hashlib.sha256(f"{root}:{stage}".encode()).digest()
    return int.from_bytes(digest[:4], "little")


def _parse_pair(text: str) -> tuple[float, float]:
    try:
        a, b = text.split(":")
        return float(a), float(b)
    except ValueError:
        raise ValidationError(f"expected START:END, got {text!r}") from None


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValidationError(f"expected a boolean, got {text!r}")


def _coerce(name: str, text: str):
    kind = {f.name: f.type for f in fields(PipelineConfig)}[name]
    text = text.strip()
    if name == "band":
        return _parse_pair(text)
    if name == "window":
        return None if text.lower() in ("full", "none") else _parse_pair(text)
    try:
        if kind == "bool":
            return _parse_bool(text)
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
    except ValueError:
        raise ValidationError(f"{name}: cannot parse {text!r} as {kind}") from None
    return text


def parse_config_text(text: str, base: PipelineConfig | None = None) -> PipelineConfig:
    """``key = value`` lines; ``#`` starts a comment; unknown keys are rejected."""
    known = {f.name for f in fields(PipelineConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"config line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in known:
            raise ValidationError(f"config line {lineno}: unknown key {key!r}")
        values[key] = _coerce(key, value)
    return replace(base or PipelineConfig(), **values)


def load_config(path) -> PipelineConfig:
    cfg = parse_config_text(Path(path).read_text(encoding="utf-8"))
    base = Path(path).parent
    for key in ("train", "test", "manifest"):
        v = getattr(cfg, key)
        if v and not Path(v).is_absolute():
            setattr(cfg, key, str(base / v))
    return cfg


@dataclass
class EvaluationReport:
    subject: str
    accuracy_pct: float
    confusion: list[list[int]]
    n_train: int
    n_test: int
    rejected_ids: dict
    n_rules: int
    training: dict
    thresholds: dict
    filters: dict
    hyper: dict
    config: dict
    reference: dict
    tuning: dict | None = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schema"] = REPORT_SCHEMA
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except Exception as exc:  # noqa: BLE001
        raise StageError(name, exc) from exc


def _preprocess(ts: TrialSet, cfg: PipelineConfig) -> TrialSet:
    spec = design_bandpass(cfg.order, cfg.band[0], cfg.band[1], ts.fs)

    def one(trial):
        out = apply_filter(trial, spec, zero_phase=cfg.zero_phase)
        if cfg.window is not None:
            out = epoch(out, *cfg.window)
        return out

    return ts.map(one)


def _fit_filters(train: TrialSet, cfg: PipelineConfig):
    trials = train.trials
    mask = class_outlier_mask(trials, cfg.z_threshold)
    ccs = class_average(trials, mask=mask, n_classes=train.n_classes)
    kept = [t for t, drop in zip(trials, mask) if not drop]
    if train.n_classes == 2:
        bank = csp_two_class(ccs.per_class[0].cov, ccs.per_class[1].cov)
        bank.selected = select_extremes(bank.W.shape[0], cfg.m)
    else:
        bank = multiclass_csp(ccs, cfg.k, kept, estimator=cfg.mi_estimator,
                              max_iter=cfg.ffdiag_iters, tol=cfg.ffdiag_tol)
    return bank, ccs, mask


def _features(ts: TrialSet, bank, skip=None):
    skip = np.zeros(len(ts), dtype=bool) if skip is None else skip
    return [extract_features(t, bank) for t, s in zip(ts.trials, skip) if not s]


def run_subject(train: TrialSet, test: TrialSet, cfg: PipelineConfig, outdir=None) -> EvaluationReport:
    """Full pipeline for one subject; artifacts go to ``outdir`` when given."""
    cfg.validate()
    train.require_all_classes()
    if test.n_classes != train.n_classes or test.n_channels != train.n_channels:
        raise StageError("load", ValidationError("train and test sets disagree on classes or channels"))
    if outdir is not None:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)

    train_p = _stage("preprocess", _preprocess, train, cfg)
    test_p = _stage("preprocess", _preprocess, test, cfg)
    bank, ccs, mask = _stage("csp", _fit_filters, train_p, cfg)

    train_fv = _stage("features", _features, train_p, bank, mask if cfg.drop_outliers else None)
    test_fv = _stage("features", _features, test_p, bank)
    Xtr = np.array([f.values for f in train_fv])
    ytr = np.array([f.label for f in train_fv])
    Xte = np.array([f.values for f in test_fv])
    yte = np.array([f.label for f in test_fv])

    hyper = cfg.hyper()
    tuning = None
    if cfg.tune:
        tr_idx, val_idx = stratified_tail_split(ytr, cfg.val_fraction)
        res = _stage("tune", tune, (Xtr[tr_idx], ytr[tr_idx]), (Xtr[val_idx], ytr[val_idx]),
                     cfg.pso_config(), train.n_classes)
        hyper = res.best
        tuning = {"best_val_accuracy": res.best_accuracy, "trace": res.trace,
                  "best": {n: getattr(hyper, n) for n in HyperParams.TUNABLE}}
        if outdir is not None:
            with open(outdir / "pso_trace.csv", "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh)
                w.writerow(["iteration", "best_accuracy"])
                w.writerows((i + 1, a) for i, a in enumerate(res.trace))

    model = SRIT2NFIS(train.n_classes, Xtr.shape[1], hyper)
    report_train = _stage("train", model.train, Xtr, ytr, cfg.max_passes)
    acc, conf = _stage("evaluate", model.evaluate, Xte, yte)

    rejected = {str(ca.label): ca.rejected_ids for ca in ccs.per_class}
    report = EvaluationReport(
        subject=str(cfg.subject),
        accuracy_pct=100.0 * float(np.trace(conf)) / float(conf.sum()),
        confusion=conf.tolist(),
        n_train=int(Xtr.shape[0]),
        n_test=int(Xte.shape[0]),
        rejected_ids=rejected,
        n_rules=model.n_rules,
        training=report_train.summary(),
        thresholds={"add": report_train.add_threshold_trace[-1], "update": report_train.update_threshold_trace[-1]},
        filters={"method": bank.method, "selected": bank.selected,
                 "scores": [float(bank.scores[i]) for i in bank.selected], "info": bank.info},
        hyper=hyper.to_dict(),
        config=cfg.to_dict(),
        reference={"subject": reference.subject_reference(cfg.subject),
                   "reported_mean": dict(reference.REPORTED_MEAN)},
        tuning=tuning,
        notes=[f"epoch window {cfg.window} s from trial start",
               "filter ranking uses a Gaussian class-conditional MI estimate"
               if cfg.mi_estimator == "gaussian" else "filter ranking uses a 16-bin histogram MI estimate"],
    )
    if outdir is not None:
        artifacts.write_filterbank(outdir / "filterbank.bin", bank)
        artifacts.write_class_covariances(outdir / "covariances.bin", ccs)
        artifacts.write_features(outdir / "train_features.bin", train_fv, train.n_classes)
        artifacts.write_features(outdir / "test_features.bin", test_fv, test.n_classes)
        artifacts.save_model(outdir / "model.bin", model)
        (outdir / "report.json").write_text(report.to_json(), encoding="utf-8")
        with open(outdir / "thresholds.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "add_threshold", "update_threshold"])
            w.writerows(zip(range(len(report_train.add_threshold_trace)),
                            report_train.add_threshold_trace, report_train.update_threshold_trace))
        write_comparison_csv(outdir / "report.csv", compare_report([report]))
    return report


def run_manifest(cfg: PipelineConfig) -> list[EvaluationReport]:
    """One pipeline per manifest entry, plus a combined comparison table."""
    entries = read_manifest(cfg.manifest)
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    reports = []
    for entry in entries:
        sub_cfg = replace(cfg, subject=str(entry["subject"]), train=entry["train"], test=entry["test"])
        log.info("subject %s", entry["subject"])
        train = _stage("load", read_trialset, entry["train"])
        test = _stage("load", read_trialset, entry["test"])
        reports.append(run_subject(train, test, sub_cfg, out / f"subject_{entry['subject']}"))
    table = compare_report(reports)
    write_comparison_csv(out / "comparison.csv", table)
    summary = {"schema": REPORT_SCHEMA, "subjects": [r.to_dict() for r in reports], "comparison": table}
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return reports


def run_pipeline(cfg: PipelineConfig) -> list[EvaluationReport]:
    cfg.validate()
    if cfg.manifest:
        return run_manifest(cfg)
    if not (cfg.train and cfg.test):
        raise ValidationError("run needs either a manifest or both train and test files")
    train = _stage("load", read_trialset, cfg.train)
    test = _stage("load", read_trialset, cfg.test)
    return [run_subject(train, test, cfg, cfg.output)]


COMPARISON_HEADER = ["subject", "accuracy_pct", *reference.METHODS]


def compare_report(reports, references=None) -> list[dict]:
    """Side-by-side rows of measured accuracy and the bundled reference accuracies.

    A trailing ``mean`` row is added whenever there is at least one subject;
    its reference columns are the means of the bundled per-subject values.
    """
    references = references or reference.SUBJECT_ACCURACY
    rows = []
    for r in reports:
        subj = r.subject if hasattr(r, "subject") else r["subject"]
        acc = r.accuracy_pct if hasattr(r, "accuracy_pct") else r["accuracy_pct"]
        row = {"subject": str(subj), "accuracy_pct": acc}
        try:
            s = int(subj)
        except ValueError:
            s = 0
        for m in reference.METHODS:
            row[m] = references[m][s - 1] if 1 <= s <= len(references[m]) else None
        rows.append(row)
    if rows:
        mean = {"subject": "mean", "accuracy_pct": float(np.mean([r["accuracy_pct"] for r in rows]))}
        for m in reference.METHODS:
            vals = [r[m] for r in rows if r[m] is not None]
            mean[m] = float(np.mean(vals)) if vals else None
        rows.append(mean)
    return rows


def write_comparison_csv(path, rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=COMPARISON_HEADER)
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if r[k] is None else r[k]) for k in COMPARISON_HEADER})

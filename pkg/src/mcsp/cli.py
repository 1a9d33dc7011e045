"""Command-line entry point: ``mcsp <subcommand> ...``.

Exit status is 0 on success, 1 for invalid input or configuration and 2 for
numerical failures (singular matrices, unstable filters and the like).
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from . import artifacts, pipeline
from .covariance import class_average, class_outlier_mask
from .csp import csp_two_class, extract_features, multiclass_csp, select_extremes
from .dataio import read_trialset, write_manifest, write_trialset
from .errors import NumericalError, StageError, ValidationError
from .preprocess import apply_filter, design_bandpass, epoch
from .pso import stratified_tail_split, sweep, tune, write_sweep_csv
from .srit2nfis import SRIT2NFIS, HyperParams
from .synth import SynthSpec, generate_session

log = logging.getLogger("mcsp")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2


def _pair(text):
    return pipeline._parse_pair(text)


def _window(text):
    return pipeline._coerce("window", text)


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


# flag -> (config field, type, help)
_OPTIONS = {
    "band": ("band", _pair, "pass band LOW:HIGH in Hz"),
    "order": ("order", int, "Butterworth order"),
    "zero-phase": ("zero_phase", None, "forward-backward filtering"),
    "window": ("window", _window, "epoch START:END in seconds from trial start, or 'full'"),
    "z-threshold": ("z_threshold", float, "outlier z-score threshold"),
    "drop-outliers": ("drop_outliers", None, "also drop flagged trials from classifier training"),
    "m": ("m", int, "filters per end for two-class CSP"),
    "k": ("k", int, "filters kept by multiclass CSP"),
    "ffdiag-iters": ("ffdiag_iters", int, "joint diagonalization sweep budget"),
    "ffdiag-tol": ("ffdiag_tol", float, "joint diagonalization tolerance"),
    "mi-estimator": ("mi_estimator", str, "gaussian or histogram"),
    "tune": ("tune", None, "tune classifier thresholds with PSO"),
    "add-threshold": ("add_threshold_init", float, "initial rule-growing threshold"),
    "novelty-threshold": ("novelty_threshold", float, "novelty threshold"),
    "inter-overlap": ("inter_overlap", float, "inter-class overlap factor"),
    "update-threshold": ("update_threshold_init", float, "initial parameter-update threshold"),
    "max-passes": ("max_passes", int, "passes over the reserve queue, including the first"),
    "pso-iters": ("pso_iters", int, "PSO iterations"),
    "pso-width": ("pso_width", float, "PSO velocity clamp as a fraction of each range"),
    "pso-swarm": ("pso_swarm", int, "PSO swarm size"),
    "val-fraction": ("val_fraction", float, "held-out fraction per class for tuning"),
    "seed": ("seed", int, "root seed"),
}

_GROUPS = {
    "filter": ["band", "order", "zero-phase", "window"],
    "covariance": ["z-threshold"],
    "csp": ["m", "k", "ffdiag-iters", "ffdiag-tol", "mi-estimator"],
    "classifier": ["add-threshold", "novelty-threshold", "inter-overlap", "update-threshold", "max-passes"],
    "pso": ["pso-iters", "pso-width", "pso-swarm", "val-fraction", "seed"],
}


def _add_options(p, *groups):
    p.add_argument("--config", help="key = value configuration file")
    for g in groups:
        for flag in _GROUPS[g]:
            dest, kind, text = _OPTIONS[flag]
            if kind is None:
                p.add_argument(f"--{flag}", dest=dest, action="store_true", default=argparse.SUPPRESS, help=text)
            else:
                p.add_argument(f"--{flag}", dest=dest, type=kind, default=argparse.SUPPRESS, help=text)


def _config(args) -> pipeline.PipelineConfig:
    cfg = pipeline.load_config(args.config) if getattr(args, "config", None) else pipeline.PipelineConfig()
    known = {f.name for f in fields(pipeline.PipelineConfig)}
    overrides = {k: v for k, v in vars(args).items() if k in known}
    return replace(cfg, **overrides).validate()


def _emit(obj):
    print(json.dumps(obj, indent=2, sort_keys=True))


# -- subcommands -------------------------------------------------------------

def cmd_synth(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for i in range(1, args.subjects + 1):
        spec = SynthSpec(
            n_channels=args.channels, n_classes=args.classes, trials_per_class=args.trials_per_class,
            samples_per_trial=args.samples, fs=args.fs, noise_variance=args.noise,
            outlier_rate=args.outlier_rate, outlier_gain=args.outlier_gain, contrast=args.contrast,
            band_limited=args.band_limited, seed=pipeline.derive_seed(args.seed, f"synth/{i}"),
        )
        train, test, gt = generate_session(spec)
        sub = out / f"subject_{i}" if args.subjects > 1 else out
        sub.mkdir(parents=True, exist_ok=True)
        write_trialset(train, sub / "train.bin")
        write_trialset(test, sub / "test.bin")
        (sub / "truth.json").write_text(gt.to_json(), encoding="utf-8")
        entries.append({"subject": str(i), "train": str((sub / "train.bin").relative_to(out)),
                        "test": str((sub / "test.bin").relative_to(out))})
    write_manifest(out / "manifest.json", entries)
    _emit({"subjects": len(entries), "manifest": str(out / "manifest.json")})


def cmd_filter(args):
    cfg = _config(args)
    ts = read_trialset(args.input)
    spec = design_bandpass(cfg.order, cfg.band[0], cfg.band[1], ts.fs)

    def one(trial):
        out = apply_filter(trial, spec, zero_phase=cfg.zero_phase)
        return epoch(out, *cfg.window) if cfg.window is not None else out

    out = ts.map(one)
    write_trialset(out, args.output)
    _emit({"trials": len(out), "samples": out.trials[0].n_samples if len(out) else 0,
           "poles_max_abs": float(np.max(np.abs(spec.poles())))})


def cmd_covariance(args):
    cfg = _config(args)
    ts = read_trialset(args.input)
    mask = class_outlier_mask(ts.trials, cfg.z_threshold)
    ccs = class_average(ts.trials, mask=mask, n_classes=ts.n_classes)
    artifacts.write_class_covariances(args.output, ccs)
    _emit({"outlier_ids": ccs.outlier_ids,
           "per_class": {str(ca.label): {"retained": ca.n_retained, "rejected": ca.n_rejected}
                         for ca in ccs.per_class}})


def cmd_csp(args):
    cfg = _config(args)
    ccs = artifacts.read_class_covariances(args.cov)
    ts = read_trialset(args.trials)
    if ccs.n_classes != ts.n_classes:
        raise ValidationError(f"covariance file has {ccs.n_classes} classes, trial file {ts.n_classes}")
    drop = set(ccs.outlier_ids)
    kept = [t for t in ts.trials if t.id not in drop]
    if ccs.n_classes == 2:
        bank = csp_two_class(ccs.per_class[0].cov, ccs.per_class[1].cov)
        bank.selected = select_extremes(bank.W.shape[0], cfg.m)
    else:
        bank = multiclass_csp(ccs, cfg.k, kept, estimator=cfg.mi_estimator,
                              max_iter=cfg.ffdiag_iters, tol=cfg.ffdiag_tol)
    artifacts.write_filterbank(args.output, bank)
    _emit({"method": bank.method, "selected": bank.selected,
           "scores": [float(bank.scores[i]) for i in bank.selected], "info": bank.info})


def cmd_features(args):
    bank = artifacts.read_filterbank(args.bank)
    ts = read_trialset(args.trials)
    drop = set(artifacts.read_class_covariances(args.exclude).outlier_ids) if args.exclude else set()
    fv = [extract_features(t, bank) for t in ts.trials if t.id not in drop]
    artifacts.write_features(args.output, fv, ts.n_classes)
    _emit({"vectors": len(fv), "dim": len(bank.selected), "excluded": sorted(drop)})


def _hyper(args, cfg):
    if getattr(args, "params", None):
        best = json.loads(Path(args.params).read_text(encoding="utf-8"))
        return HyperParams.from_dict(best.get("best", best))
    return cfg.hyper()


def cmd_train(args):
    cfg = _config(args)
    X, y, _, n_classes = artifacts.read_features(args.features)
    model = SRIT2NFIS(n_classes, X.shape[1], _hyper(args, cfg))
    rep = model.train(X, y, cfg.max_passes)
    artifacts.save_model(args.output, model)
    if args.thresholds:
        with open(args.thresholds, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "add_threshold", "update_threshold"])
            w.writerows(zip(range(len(rep.add_threshold_trace)), rep.add_threshold_trace, rep.update_threshold_trace))
    _emit(rep.summary())


def cmd_tune(args):
    cfg = _config(args)
    X, y, _, n_classes = artifacts.read_features(args.features)
    tr, va = stratified_tail_split(y, cfg.val_fraction)
    train, val = (X[tr], y[tr]), (X[va], y[va])
    pso = cfg.pso_config()
    res = tune(train, val, pso, n_classes)
    best = {"best": {n: getattr(res.best, n) for n in HyperParams.TUNABLE},
            "best_val_accuracy": res.best_accuracy, "seed": pso.seed}
    Path(args.output).write_text(json.dumps(best, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if args.trace:
        with open(args.trace, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "best_accuracy"])
            w.writerows((i + 1, a) for i, a in enumerate(res.trace))
    if args.sweep_csv:
        rows = sweep(train, val, args.sweep_widths or [pso.parameter_width],
                     args.sweep_iters or [pso.iterations], pso, n_classes)
        write_sweep_csv(args.sweep_csv, rows)
    _emit(best)


def cmd_evaluate(args):
    model = artifacts.load_model(args.model)
    X, y, _, n_classes = artifacts.read_features(args.features)
    if n_classes != model.n_classes:
        raise ValidationError(f"features have {n_classes} classes, model {model.n_classes}")
    acc, conf = model.evaluate(X, y)
    out = {"schema": pipeline.REPORT_SCHEMA, "subject": args.subject, "accuracy_pct": 100.0 * acc,
           "confusion": conf.tolist(), "n_rules": model.n_rules}
    if args.output:
        Path(args.output).write_text(json.dumps(out, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if args.csv:
        pipeline.write_comparison_csv(args.csv, pipeline.compare_report([out]))
    _emit(out)


def cmd_run(args):
    cfg = _config(args)
    reports = pipeline.run_pipeline(cfg)
    _emit([{"subject": r.subject, "accuracy_pct": r.accuracy_pct, "n_rules": r.n_rules} for r in reports])


def _load_reports(paths):
    reports = []
    for p in map(Path, paths):
        if p.is_dir():
            p = p / "summary.json" if (p / "summary.json").exists() else p / "report.json"
        data = json.loads(p.read_text(encoding="utf-8"))
        subs = data["subjects"] if "subjects" in data else [data]
        for s in subs:
            if "subject" not in s or "accuracy_pct" not in s:
                raise ValidationError(f"{p}: not an evaluation report")
            reports.append({"subject": str(s["subject"]), "accuracy_pct": float(s["accuracy_pct"])})
    return reports


def cmd_compare(args):
    rows = pipeline.compare_report(_load_reports(args.reports))
    if args.output:
        pipeline.write_comparison_csv(args.output, rows)
    else:
        w = csv.DictWriter(sys.stdout, fieldnames=pipeline.COMPARISON_HEADER)
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if r[k] is None else r[k]) for k in pipeline.COMPARISON_HEADER})


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mcsp", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate synthetic train/test trial files")
    p.add_argument("-o", "--out", required=True, help="output directory")
    p.add_argument("--channels", type=int, default=22)
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--trials-per-class", type=int, default=72)
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--fs", type=float, default=250.0)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--outlier-rate", type=float, default=0.0)
    p.add_argument("--outlier-gain", type=float, default=20.0)
    p.add_argument("--contrast", type=float, default=4.0)
    p.add_argument("--band-limited", action="store_true")
    p.add_argument("--subjects", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("filter", help="band-pass filter and epoch a trial file")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    _add_options(p, "filter")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("covariance", help="screen outliers and average class covariances")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    _add_options(p, "covariance")
    p.set_defaults(func=cmd_covariance)

    p = sub.add_parser("csp", help="fit and rank spatial filters")
    p.add_argument("--cov", required=True, help="class covariance file")
    p.add_argument("--trials", required=True, help="trial file used for ranking")
    p.add_argument("-o", "--output", required=True)
    _add_options(p, "csp")
    p.set_defaults(func=cmd_csp)

    p = sub.add_parser("features", help="log-variance features from a filter bank")
    p.add_argument("--bank", required=True)
    p.add_argument("--trials", required=True)
    p.add_argument("--exclude", help="class covariance file whose outlier ids are skipped")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="train the classifier on a feature file")
    p.add_argument("--features", required=True)
    p.add_argument("--params", help="JSON with thresholds, e.g. the output of 'tune'")
    p.add_argument("--thresholds", help="CSV of threshold trajectories")
    p.add_argument("-o", "--output", required=True)
    _add_options(p, "classifier")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("tune", help="PSO search over classifier thresholds")
    p.add_argument("--features", required=True)
    p.add_argument("-o", "--output", required=True, help="best-parameter JSON")
    p.add_argument("--trace", help="best-so-far CSV")
    p.add_argument("--sweep-csv", help="accuracy grid over widths and iteration counts")
    p.add_argument("--sweep-widths", type=_floats)
    p.add_argument("--sweep-iters", type=_ints)
    _add_options(p, "classifier", "pso")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("evaluate", help="score a trained model on a feature file")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--subject", default="1")
    p.add_argument("-o", "--output", help="report JSON")
    p.add_argument("--csv", help="comparison CSV")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("run", help="full pipeline for one subject or a manifest")
    for flag in ("--train", "--test", "--manifest", "--subject"):
        p.add_argument(flag, default=argparse.SUPPRESS)
    p.add_argument("-o", "--output", default=argparse.SUPPRESS)
    _add_options(p, "filter", "covariance", "csp", "classifier", "pso")
    p.add_argument("--drop-outliers", dest="drop_outliers", action="store_true", default=argparse.SUPPRESS)
    p.add_argument("--tune", dest="tune", action="store_true", default=argparse.SUPPRESS)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="table of accuracies against published references")
    p.add_argument("reports", nargs="*", help="report.json / summary.json files or output directories")
    p.add_argument("-o", "--output", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_compare)
    return ap


def exit_code(exc: BaseException) -> int | None:
    """Map an exception to an exit status, or None if it is not an expected failure."""
    if isinstance(exc, StageError):
        exc = exc.cause
    if isinstance(exc, (NumericalError, np.linalg.LinAlgError, FloatingPointError)):
        return EXIT_NUMERICAL
    if isinstance(exc, (ValidationError, ValueError, OSError, KeyError, json.JSONDecodeError)):
        return EXIT_VALIDATION
    return None


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except Exception as exc:  # noqa: BLE001
        code = exit_code(exc)
        if code is None:
            raise
        print(f"mcsp {args.command}: {exc}", file=sys.stderr)
        return code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

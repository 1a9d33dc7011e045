import json

import numpy as np
import pytest

from mcsp import reference
from mcsp.dataio import write_manifest, write_trialset
from mcsp.errors import StageError, ValidationError
from mcsp.pipeline import (COMPARISON_HEADER, PipelineConfig, compare_report, derive_seed, load_config,
                           parse_config_text, run_pipeline, run_subject, write_comparison_csv)
from mcsp.synth import SynthSpec, generate_session


@pytest.fixture(scope="module")
def session():
    return generate_session(SynthSpec(n_channels=8, n_classes=4, trials_per_class=24, samples_per_trial=300,
                                      outlier_rate=0.05, seed=17))


def test_config_parsing():
    cfg = parse_config_text("""
        # comment
        band = 4:30
        window = full
        k = 4
        tune = yes
        seed = 9   # trailing comment
    """)
    assert cfg.band == (4.0, 30.0) and cfg.window is None and cfg.k == 4 and cfg.tune and cfg.seed == 9
    with pytest.raises(ValidationError, match="unknown key"):
        parse_config_text("bogus = 1")
    with pytest.raises(ValidationError):
        parse_config_text("k = three")
    with pytest.raises(ValidationError):
        parse_config_text("band = 8")


def test_config_ranges():
    with pytest.raises(ValidationError):
        PipelineConfig(band=(30.0, 8.0)).validate()
    with pytest.raises(ValidationError):
        PipelineConfig(add_threshold_init=2.0).validate()
    with pytest.raises(ValidationError):
        PipelineConfig(mi_estimator="knn").validate()


def test_load_config_resolves_paths(tmp_path):
    (tmp_path / "c.cfg").write_text("train = a.bin\ntest = /abs/b.bin\n")
    cfg = load_config(tmp_path / "c.cfg")
    assert cfg.train == str(tmp_path / "a.bin") and cfg.test == "/abs/b.bin"


def test_derive_seed_stable():
    assert derive_seed(0, "pso") == derive_seed(0, "pso")
    assert derive_seed(0, "pso") != derive_seed(1, "pso") != derive_seed(0, "synth")


def test_run_subject_artifacts_and_determinism(session, tmp_path):
    train, test, _ = session
    cfg = PipelineConfig(window=None, k=4, subject="1")
    r1 = run_subject(train, test, cfg, tmp_path / "a")
    r2 = run_subject(train, test, cfg, tmp_path / "b")
    for name in ("report.json", "report.csv", "thresholds.csv", "filterbank.bin", "covariances.bin",
                 "train_features.bin", "test_features.bin", "model.bin"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name
    conf = np.array(r1.confusion)
    assert r1.accuracy_pct == pytest.approx(100 * np.trace(conf) / conf.sum(), abs=1e-9)
    assert r1.reference["subject"]["proposed-SRIT2NFIS"] == 74.65
    assert r1.to_json() == r2.to_json()
    d = json.loads((tmp_path / "a" / "report.json").read_text())
    assert d["schema"] == 1 and sum(len(v) for v in d["rejected_ids"].values()) > 0


def test_run_subject_with_tuning(session, tmp_path):
    train, test, _ = session
    cfg = PipelineConfig(window=None, k=4, tune=True, pso_iters=2, pso_swarm=3)
    r = run_subject(train, test, cfg, tmp_path)
    assert r.tuning is not None and len(r.tuning["trace"]) == 2
    assert (tmp_path / "pso_trace.csv").exists()


def test_two_class_pipeline(tmp_path):
    train, test, _ = generate_session(SynthSpec(n_channels=6, n_classes=2, trials_per_class=30,
                                                samples_per_trial=250, seed=4))
    r = run_subject(train, test, PipelineConfig(window=None, m=2))
    assert len(r.filters["selected"]) == 4
    assert r.accuracy_pct >= 80


def test_stage_errors_name_stage(session):
    train, test, _ = session
    with pytest.raises(StageError, match=r"\[preprocess\]"):
        run_subject(train, test, PipelineConfig(window=(0.0, 60.0)))


def test_manifest_run(session, tmp_path):
    train, test, _ = session
    write_trialset(train, tmp_path / "tr.bin")
    write_trialset(test, tmp_path / "te.bin")
    write_manifest(tmp_path / "m.json", [{"subject": s, "train": "tr.bin", "test": "te.bin"} for s in ("1", "2")])
    reps = run_pipeline(PipelineConfig(manifest=str(tmp_path / "m.json"), output=str(tmp_path / "out"),
                                       window=None, k=4))
    assert [r.subject for r in reps] == ["1", "2"]
    lines = (tmp_path / "out" / "comparison.csv").read_text().splitlines()
    assert lines[0].split(",") == COMPARISON_HEADER and lines[-1].startswith("mean")
    assert json.loads((tmp_path / "out" / "summary.json").read_text())["schema"] == 1


def test_run_pipeline_requires_inputs():
    with pytest.raises(ValidationError):
        run_pipeline(PipelineConfig())


def test_compare_report_examples(tmp_path):
    rows = compare_report([{"subject": "1", "accuracy_pct": 70.0}])
    assert rows[0]["proposed-SRIT2NFIS"] == 74.65
    assert compare_report([]) == []
    write_comparison_csv(tmp_path / "e.csv", [])
    assert (tmp_path / "e.csv").read_text().strip() == ",".join(COMPARISON_HEADER)
    full = compare_report([{"subject": str(s), "accuracy_pct": 50.0} for s in range(1, 10)])
    assert full[-1]["proposed-SRIT2NFIS"] == pytest.approx(reference.REPORTED_MEAN["proposed-SRIT2NFIS"], abs=0.01)
    # unknown subjects get blank reference cells
    assert compare_report([{"subject": "x", "accuracy_pct": 1.0}])[0]["mCSP"] is None


def test_reference_means_recompute():
    for m in ("mCSP", "proposed-SVM", "proposed-SRIT2NFIS"):
        assert np.mean(reference.SUBJECT_ACCURACY[m]) == pytest.approx(reference.REPORTED_MEAN[m], abs=0.01)

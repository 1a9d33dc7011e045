import numpy as np
import pytest
from scipy.linalg import subspace_angles

from conftest import random_spd
from mcsp.covariance import class_average
from mcsp.csp import (SpatialFilterBank, csp_two_class, extract_features, filter_log_variances,
                      median_discriminability, median_score, median_score_matrix, multiclass_csp)
from mcsp.dataio import Trial
from mcsp.errors import NumericalError, ValidationError
from mcsp.itfe import itfe_scores
from mcsp.synth import SynthSpec, generate


def _diag_residual(W, C):
    t = W @ C @ W.T
    return np.max(np.abs(t - np.diag(np.diag(t))))


def test_indistinguishable_classes():
    n = 4
    bank = csp_two_class(np.eye(n) / n, np.eye(n) / n)
    lam1, lam2 = bank.eigvals_per_class
    np.testing.assert_allclose(lam1, 0.5, atol=1e-12)
    np.testing.assert_allclose(lam2, 0.5, atol=1e-12)
    assert _diag_residual(bank.W, np.eye(n) / n) < 1e-10


def test_complementary_diagonal_pair():
    bank = csp_two_class(np.diag([0.8, 0.2]), np.diag([0.2, 0.8]))
    np.testing.assert_allclose(np.abs(bank.W), np.eye(2), atol=1e-12)
    np.testing.assert_allclose(bank.eigvals_per_class[0], [0.8, 0.2], atol=1e-12)


def test_random_spd_pair(rng):
    C1, C2 = random_spd(rng, 6), random_spd(rng, 6)
    bank = csp_two_class(C1, C2)
    assert _diag_residual(bank.W, C1) < 1e-8 and _diag_residual(bank.W, C2) < 1e-8
    lam1 = np.diag(bank.W @ C1 @ bank.W.T)
    lam2 = np.diag(bank.W @ C2 @ bank.W.T)
    np.testing.assert_allclose(lam1 + lam2, 1.0, atol=1e-8)
    assert np.all(np.diff(lam1) <= 0)
    # largest-magnitude entry of each row is positive
    W = bank.W
    assert np.all(W[np.arange(6), np.argmax(np.abs(W), axis=1)] > 0)


def test_rank_deficient_composite_raises():
    a = np.diag([0.5, 0.5, 0.0])
    with pytest.raises(NumericalError, match="rank deficient"):
        csp_two_class(a, a)


def test_median_score_identical_classes():
    ts, _ = generate(SynthSpec(n_channels=5, n_classes=4, trials_per_class=60, samples_per_trial=400,
                               contrast=1.0, seed=21))
    s = median_score(np.eye(5), ts.trials)
    np.testing.assert_allclose(s, 0.25, atol=0.02)


def test_median_score_class_one_only_source():
    prof = np.ones((4, 4))
    prof[1:, 0] = 1e-3
    ts, _ = generate(SynthSpec(n_channels=4, n_classes=4, trials_per_class=15, samples_per_trial=300,
                               mixing=np.eye(4), class_variance_profile=prof, noise_variance=0.0, seed=3))
    s = median_score(np.eye(4), ts.trials)
    assert s[0] > 0.99
    assert np.all(s[1:] < 0.4)


def test_median_score_matches_direct_evaluation(small_synth, rng):
    ts, _ = small_synth
    W = rng.standard_normal((5, 8))
    got = median_score_matrix(W, ts.trials)
    for j in range(5):
        meds = []
        for c in range(1, 5):
            vals = [W[j] @ t.data @ t.data.T @ W[j] for t in ts.trials if t.label == c]
            meds.append(np.median(vals))
        np.testing.assert_allclose(got[:, j], np.array(meds) / sum(meds), rtol=1e-10)
    assert np.all((got >= 0) & (got <= 1))
    d = median_discriminability(W, ts.trials)
    np.testing.assert_allclose(d, np.max(np.abs(got - 0.25), axis=0))


def test_median_score_empty_class(small_synth):
    ts, _ = small_synth
    with pytest.raises(ValidationError, match="class 5"):
        median_score(np.eye(8), ts.trials, n_classes=5)


def test_uniform_variance_features():
    base = np.array([1.0, -2.0, 0.5, 3.0, -1.0, 0.25, 2.0, -0.5])
    rows = np.array([np.roll(base, i) for i in range(6)])
    fv = extract_features(Trial(4, 2, 100.0, rows), np.eye(6), range(6))
    np.testing.assert_allclose(fv.values, np.log(1 / 6), atol=1e-12)
    assert fv.label == 2 and fv.trial_id == 4


def test_two_filter_features():
    x = np.array([1.0, -1.0, 1.0, -1.0])
    fv = extract_features(Trial(0, 1, 100.0, np.vstack([np.sqrt(3) * x, x])), np.eye(2), [0, 1])
    np.testing.assert_allclose(fv.values, [np.log(0.75), np.log(0.25)], atol=1e-14)


def test_features_normalized_and_nonpositive(rng):
    W = rng.standard_normal((8, 5))
    for i in range(20):
        fv = extract_features(Trial(i, 1, 100.0, rng.standard_normal((5, 64))), W, range(8))
        assert abs(np.exp(fv.values).sum() - 1) < 1e-9
        assert np.all(fv.values <= 0)


def test_zero_variance_filter_named():
    data = np.vstack([np.ones(10), np.arange(10.0)])
    with pytest.raises(NumericalError, match="filter 0"):
        extract_features(Trial(0, 1, 10.0, data), np.eye(2), [0, 1])


def test_filterbank_rejects_bad_selection():
    with pytest.raises(ValidationError):
        SpatialFilterBank(np.eye(3), np.zeros(3), [0, 0])
    with pytest.raises(ValidationError):
        SpatialFilterBank(np.eye(3), np.zeros(3), [3])


@pytest.fixture(scope="module")
def planted4():
    ts, gt = generate(SynthSpec(n_channels=10, n_classes=4, trials_per_class=40, samples_per_trial=400, seed=31))
    return ts, gt


def _dominant_source(W, mixing):
    return np.argmax(np.abs(W @ mixing), axis=1)


def test_multiclass_selects_planted_sources(planted4):
    ts, gt = planted4
    ccs = class_average(ts.trials, n_classes=4)
    bank = multiclass_csp(ccs, 6, ts.trials)
    sources = set(_dominant_source(bank.W[bank.selected], gt.mixing).tolist())
    assert {0, 1, 2, 3} <= sources
    # the four planted filters are ranked first
    top4 = set(_dominant_source(bank.W[bank.selected[:4]], gt.mixing).tolist())
    assert top4 == {0, 1, 2, 3}


def test_multiclass_k_equals_n_is_permutation(planted4):
    ts, _ = planted4
    bank = multiclass_csp(class_average(ts.trials, n_classes=4), 10, ts.trials)
    assert sorted(bank.selected) == list(range(10))


def test_multiclass_selection_scale_invariant(planted4):
    ts, _ = planted4
    bank = multiclass_csp(class_average(ts.trials, n_classes=4), 6, ts.trials)
    scaled = [t.replace(3.7 * t.data) for t in ts.trials]
    bank2 = multiclass_csp(class_average(scaled, n_classes=4), 6, scaled)
    assert bank.selected == bank2.selected


def test_two_class_selection_agrees_with_median_ranking():
    prof = np.ones((2, 8))
    prof[0, 0] = 5.0
    prof[1, 1] = 5.0
    ts, _ = generate(SynthSpec(n_channels=8, n_classes=2, trials_per_class=50, samples_per_trial=400,
                               class_variance_profile=prof, seed=41))
    ccs = class_average(ts.trials, n_classes=2)
    mc = multiclass_csp(ccs, 2, ts.trials)
    two = csp_two_class(ccs.per_class[0].cov, ccs.per_class[1].cov)
    ranked = np.argsort(-median_discriminability(two.W, ts.trials), kind="stable")[:2]
    ang = subspace_angles(mc.W[mc.selected].T, two.W[ranked].T)
    assert np.max(ang) < 1e-3
    # median-ratio top picks are the extremes of the eigenvalue order
    assert sorted(ranked.tolist()) == [0, 7]


def test_itfe_relabel_invariance(planted4):
    ts, _ = planted4
    W = np.random.default_rng(0).standard_normal((10, 10))
    feats = filter_log_variances(W, ts.trials)
    labels = np.array([t.label for t in ts.trials])
    perm = np.array([3, 1, 4, 2])
    np.testing.assert_allclose(itfe_scores(feats, labels), itfe_scores(feats, perm[labels - 1]), atol=1e-12)

import numpy as np
import pytest

from mcsp.covariance import trial_norms
from mcsp.errors import ValidationError
from mcsp.synth import SynthSpec, generate


def test_no_outliers_by_default():
    _, gt = generate(SynthSpec(n_channels=4, trials_per_class=5, samples_per_trial=50))
    assert not gt.outlier.any() and gt.outlier_ids == []


def test_identity_mixing_elevates_own_channel():
    spec = SynthSpec(n_channels=4, n_classes=4, trials_per_class=30, samples_per_trial=2000,
                     mixing=np.eye(4), noise_variance=0.0, seed=2)
    ts, _ = generate(spec)
    for c in range(1, 5):
        v = np.mean([t.data.var(axis=1) for t in ts.by_class(c)], axis=0)
        assert np.argmax(v) == c - 1
        np.testing.assert_allclose(v, np.where(np.arange(4) == c - 1, 4.0, 1.0), rtol=0.05)


def test_fixed_seed_is_bit_identical():
    a, _ = generate(SynthSpec(n_channels=5, trials_per_class=4, samples_per_trial=40, seed=9, outlier_rate=0.25))
    b, _ = generate(SynthSpec(n_channels=5, trials_per_class=4, samples_per_trial=40, seed=9, outlier_rate=0.25))
    assert all(x.data.tobytes() == y.data.tobytes() and x.label == y.label for x, y in zip(a, b))


def test_class_covariance_converges():
    spec = SynthSpec(n_channels=6, n_classes=2, trials_per_class=100, samples_per_trial=1000, seed=4)
    ts, gt = generate(spec)
    for c in (1, 2):
        emp = np.mean([t.data @ t.data.T / t.n_samples for t in ts.by_class(c)], axis=0)
        truth = gt.class_covariance(c, normalize=False)
        assert np.linalg.norm(emp - truth) / np.linalg.norm(truth) < 0.05


def test_outlier_norms_are_large():
    ts, gt = generate(SynthSpec(n_channels=10, trials_per_class=40, samples_per_trial=300,
                                outlier_rate=0.1, seed=8))
    norms = trial_norms(ts.trials)
    med = np.median(norms)
    assert gt.outlier.sum() == 16
    assert np.all(norms[gt.outlier] >= 20 ** 2 / 2 * med)


def test_band_limited_mode():
    ts, _ = generate(SynthSpec(n_channels=3, n_classes=2, trials_per_class=2, samples_per_trial=500,
                               band_limited=True, seed=1))
    spec = np.abs(np.fft.rfft(ts.trials[0].data[0])) ** 2
    f = np.fft.rfftfreq(500, 1 / 250)
    assert spec[(f > 8) & (f < 30)].sum() > 0.9 * spec.sum()


@pytest.mark.parametrize("kw", [{"outlier_rate": 1.0}, {"n_channels": 1}, {"mixing": np.zeros((3, 3)), "n_channels": 3}])
def test_invalid_spec(kw):
    with pytest.raises(ValidationError):
        generate(SynthSpec(**kw))

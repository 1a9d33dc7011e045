import numpy as np
import pytest

from mcsp.dataio import Trial
from mcsp.errors import ValidationError
from mcsp.preprocess import apply_filter, design_bandpass, epoch, frequency_response


def _response_direct(sos, f, fs):
    """Evaluate the cascade by hand at z = exp(j 2 pi f / fs)."""
    z = np.exp(1j * 2 * np.pi * np.asarray(f) / fs)
    h = np.ones_like(z)
    for b0, b1, b2, a0, a1, a2 in sos:
        h *= (b0 + b1 / z + b2 / z ** 2) / (a0 + a1 / z + a2 / z ** 2)
    return h


@pytest.fixture(scope="module")
def default_spec():
    return design_bandpass(5, 8.0, 40.0, 250.0)


def test_default_design_is_stable_with_half_power_edges(default_spec):
    assert np.max(np.abs(default_spec.poles())) < 1.0
    mag = np.abs(_response_direct(default_spec.sections, [8.0, 40.0], 250.0))
    np.testing.assert_allclose(mag, 1 / np.sqrt(2), rtol=0.02)
    np.testing.assert_allclose(np.abs(frequency_response(default_spec, [8.0, 40.0])), mag, rtol=1e-10)


def test_dc_and_nyquist_below_minus_40_db(default_spec):
    f = np.concatenate([np.linspace(0, 1.0, 11), np.linspace(124.0, 125.0, 11)])
    mag = np.abs(_response_direct(default_spec.sections, f, 250.0))
    assert np.all(20 * np.log10(np.maximum(mag, 1e-300)) < -40)


@pytest.mark.parametrize("low,high", [(40, 8), (0, 40), (8, 125), (8, 200)])
def test_invalid_band_edges(low, high):
    with pytest.raises(ValidationError):
        design_bandpass(5, low, high, 250.0)


def _sine(freq, fs=250.0, seconds=8.0):
    t = np.arange(int(seconds * fs)) / fs
    return Trial(3, 2, fs, np.vstack([np.sin(2 * np.pi * freq * t), 0.5 * np.sin(2 * np.pi * freq * t + 1)]))


def _rms(x):
    return np.sqrt(np.mean(x ** 2, axis=1))


def test_zero_in_zero_out(default_spec):
    out = apply_filter(Trial(1, 1, 250.0, np.zeros((3, 100))), default_spec)
    assert np.all(out.data == 0)


def test_stop_band_sine_is_attenuated(default_spec):
    tr = _sine(4.0)
    out = apply_filter(tr, default_spec)
    skip = 500
    assert np.all(_rms(out.data[:, skip:]) < 0.05 * _rms(tr.data[:, skip:]))


def test_pass_band_sine_is_kept(default_spec):
    tr = _sine(20.0)
    out = apply_filter(tr, default_spec)
    skip = 500
    ratio = _rms(out.data[:, skip:]) / _rms(tr.data[:, skip:])
    np.testing.assert_allclose(ratio, 1.0, atol=0.10)
    assert out.id == tr.id and out.label == tr.label and out.data.shape == tr.data.shape


def test_zero_phase_option_runs(default_spec):
    tr = _sine(20.0)
    out = apply_filter(tr, default_spec, zero_phase=True)
    assert out.data.shape == tr.data.shape


def test_fs_mismatch(default_spec):
    with pytest.raises(ValidationError):
        apply_filter(Trial(0, 1, 500.0, np.zeros((2, 10))), default_spec)


def test_linearity(default_spec, rng):
    x = rng.standard_normal((4, 1000))
    y = rng.standard_normal((4, 1000))
    a, b = 2.5, -0.75
    f = lambda d: apply_filter(Trial(0, 1, 250.0, d), default_spec).data
    lhs = f(a * x + b * y)
    rhs = a * f(x) + b * f(y)
    assert np.max(np.abs(lhs - rhs)) <= 1e-9 * np.max(np.abs(rhs))


def test_impulse_response_decays(default_spec):
    imp = np.zeros((2, 10001))
    imp[:, 0] = 1.0
    h = apply_filter(Trial(0, 1, 250.0, imp), default_spec).data[0]
    energy = np.sum(h ** 2)
    assert np.sum(h[5000:10001] ** 2) < 1e-12 * energy


def test_epoch_window_arithmetic(rng):
    tr = Trial(0, 1, 250.0, rng.standard_normal((3, 1875)))
    assert epoch(tr, 2.5, 4.5).n_samples == 500
    np.testing.assert_array_equal(epoch(tr, 2.5, 4.5).data, tr.data[:, 625:1125])
    full = epoch(tr, 0.0, 1875 / 250.0)
    np.testing.assert_array_equal(full.data, tr.data)
    with pytest.raises(ValidationError):
        epoch(tr, 2.0, 8.0)
    with pytest.raises(ValidationError):
        epoch(tr, 3.0, 3.0)

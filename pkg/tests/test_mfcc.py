import numpy as np
import pandas as pd
import pytest

from voicepd.config import MfccParams
from voicepd.errors import FeatureExtractionError, FilterbankError, PreconditionError
from voicepd.services.mfcc import (
    build_mel_filterbank,
    dct_cepstrum,
    frame_samples,
    frame_signal,
    hamming_window,
    hz_to_mel,
    log_mel_energies,
    mel_to_hz,
    mfcc_features,
    mfcc_matrix,
    next_power_of_two,
    power_spectrum,
    pre_emphasis,
    write_mfcc_csv,
)

from .conftest import SR, make_clip, sine, voiced_tone


def test_pre_emphasis():
    np.testing.assert_allclose(pre_emphasis(np.array([1.0, 1.0, 1.0])), [1.0, 0.05, 0.05])
    np.testing.assert_allclose(pre_emphasis(np.array([1.0, 2.0, 3.0]), alpha=0.0), [1.0, 2.0, 3.0])
    with pytest.raises(PreconditionError):
        pre_emphasis(np.array([]))
    with pytest.raises(PreconditionError):
        pre_emphasis(np.ones(3), alpha=1.0)


def test_framing_counts_and_padding():
    framed = frame_samples(np.arange(100.0), frame_len=40, hop=20)
    assert framed.count == 4
    np.testing.assert_array_equal(framed.frames[1], np.arange(20.0, 60.0))

    short = frame_samples(np.ones(30), frame_len=40, hop=20)
    assert short.count == 1
    np.testing.assert_array_equal(short.frames[0, 30:], 0.0)

    with pytest.raises(PreconditionError):
        frame_samples(np.ones(100), frame_len=40, hop=50)


def test_frame_signal_uses_seconds():
    framed = frame_signal(np.zeros(SR), SR, frame_s=0.032, hop_s=0.016)
    assert framed.frame_len == 512
    assert framed.hop == 256
    assert framed.count == (SR - 512) // 256 + 1


def test_hamming_window_endpoints():
    w = hamming_window(512).weights
    assert w[0] == pytest.approx(0.08)
    assert w[-1] == pytest.approx(0.08)
    assert w.max() == pytest.approx(1.0, abs=1e-4)
    with pytest.raises(PreconditionError):
        hamming_window(1)


def test_power_spectrum_matches_direct_dft():
    rng = np.random.default_rng(0)
    frame = rng.standard_normal(50)
    n = 64
    k = np.arange(n // 2 + 1)[:, None]
    t = np.arange(50)[None, :]
    direct = np.abs(np.sum(frame * np.exp(-2j * np.pi * k * t / n), axis=1))
    np.testing.assert_allclose(power_spectrum(frame, n), direct, atol=1e-9)
    assert next_power_of_two(50) == 64
    assert next_power_of_two(64) == 64
    with pytest.raises(PreconditionError):
        power_spectrum(frame, 32)


def test_mel_scale():
    assert hz_to_mel(0.0) == 0.0
    assert hz_to_mel(700.0) == pytest.approx(781.17, abs=0.01)
    assert hz_to_mel(1000.0) == pytest.approx(1000.0, rel=1e-3)
    freqs = np.array([50.0, 440.0, 3000.0])
    np.testing.assert_allclose(mel_to_hz(hz_to_mel(freqs)), freqs)
    with pytest.raises(PreconditionError):
        hz_to_mel(-1.0)


def test_filterbank_triangles_peak_at_centres():
    fb = build_mel_filterbank(26, 512, SR)
    assert fb.weights.shape == (26, 257)
    edges = np.concatenate(([0.0], fb.center_hz, [SR / 2]))
    bins = np.floor(513 * edges / SR).astype(int)
    for m in range(26):
        assert fb.weights[m, bins[m + 1]] == pytest.approx(1.0)
        assert fb.weights[m, bins[m]] == 0.0
        if bins[m + 2] < fb.num_bins:
            assert fb.weights[m, bins[m + 2]] == 0.0
    assert np.all(fb.weights >= 0.0)
    assert np.all(fb.weights <= 1.0)


def test_filterbank_is_cached():
    assert build_mel_filterbank(20, 256, 8000) is build_mel_filterbank(20, 256, 8000)


def test_too_many_filters_for_fft_is_rejected():
    with pytest.raises(FilterbankError):
        build_mel_filterbank(128, 64, SR)
    with pytest.raises(PreconditionError):
        build_mel_filterbank(26, 512, SR, f_min=9000.0)


def test_log_energy_floor():
    fb = build_mel_filterbank(26, 512, SR)
    energies = log_mel_energies(np.zeros(257), fb, floor=1e-10)
    np.testing.assert_allclose(energies, np.log(1e-10))
    with pytest.raises(PreconditionError):
        log_mel_energies(np.zeros(100), fb)


def test_dct_matches_cosine_sum():
    rng = np.random.default_rng(5)
    x = rng.standard_normal(26)
    m = np.arange(1, 27)
    expected = [np.sum(x * np.cos(k * (m - 0.5) * np.pi / 26)) for k in range(13)]
    np.testing.assert_allclose(dct_cepstrum(x, 13), expected, atol=1e-10)


def test_dct_of_constant_vector():
    y = dct_cepstrum(np.full(26, 2.0), 13)
    assert y[0] == pytest.approx(52.0)
    np.testing.assert_allclose(y[1:], 0.0, atol=1e-10)
    with pytest.raises(PreconditionError):
        dct_cepstrum(np.ones(10), 13)


def test_mfcc_matrix_shape():
    clip = make_clip(voiced_tone(150.0, 1.0))
    coefficients = mfcc_matrix(clip)
    assert coefficients.shape == ((SR - 512) // 256 + 1, 13)
    assert np.all(np.isfinite(coefficients))


def test_single_frame_clip_gives_its_own_row():
    clip = make_clip(sine(300.0, 512 / SR))
    features = mfcc_features(clip)
    assert features.shape == (13,)
    np.testing.assert_allclose(features, mfcc_matrix(clip)[0])


def test_clip_shorter_than_a_frame_fails():
    with pytest.raises(FeatureExtractionError):
        mfcc_features(make_clip(np.zeros(100)))


def test_custom_ceps_count():
    params = MfccParams(num_ceps=20, num_filters=40)
    assert mfcc_features(make_clip(voiced_tone(200.0, 0.3)), params).shape == (20,)


def test_write_mfcc_csv(tmp_path):
    matrix = np.arange(6.0).reshape(2, 3)
    frame = pd.read_csv(write_mfcc_csv(matrix, tmp_path / "m.csv"))
    assert list(frame.columns) == ["frame_index", "mfcc_0", "mfcc_1", "mfcc_2"]
    np.testing.assert_allclose(frame[["mfcc_0", "mfcc_1", "mfcc_2"]].to_numpy(), matrix)


def direct_dft_magnitudes(frame: np.ndarray, n: int) -> np.ndarray:
    k = np.arange(n // 2 + 1)[:, None]
    t = np.arange(frame.size)[None, :]
    # k * t mod n keeps the twiddle phase exact for long frames.
    return np.abs(np.exp(-2j * np.pi * ((k * t) % n) / n) @ frame)


def loop_filterbank(num_filters: int, fft_size: int, sample_rate: int) -> np.ndarray:
    top = 2595.0 * np.log10(1.0 + (sample_rate / 2.0) / 700.0)
    edges = []
    for i in range(num_filters + 2):
        mel = top * i / (num_filters + 1)
        edges.append(int(np.floor((fft_size + 1) * 700.0 * (10.0 ** (mel / 2595.0) - 1.0) / sample_rate)))
    weights = np.zeros((num_filters, fft_size // 2 + 1))
    for m in range(num_filters):
        left, centre, right = edges[m], edges[m + 1], edges[m + 2]
        for k in range(fft_size // 2 + 1):
            if left <= k < centre:
                weights[m, k] = (k - left) / (centre - left)
            elif centre <= k < right:
                weights[m, k] = (right - k) / (right - centre)
    return weights


def slow_mfcc(samples: np.ndarray, alpha: float = 0.95, frame_len: int = 512, hop: int = 256) -> np.ndarray:
    emphasised = [samples[0]] + [samples[i] - alpha * samples[i - 1] for i in range(1, samples.size)]
    emphasised = np.array(emphasised)
    window = np.array([0.54 - 0.46 * np.cos(2 * np.pi * i / (frame_len - 1)) for i in range(frame_len)])
    weights = loop_filterbank(26, frame_len, SR)
    rows = []
    for start in range(0, samples.size - frame_len + 1, hop):
        spectrum = direct_dft_magnitudes(emphasised[start:start + frame_len] * window, frame_len)
        log_mel = [np.log(max(np.dot(spectrum, weights[m]) ** 2, 1e-10)) for m in range(26)]
        rows.append(
            [sum(log_mel[m - 1] * np.cos(k * (m - 0.5) * np.pi / 26) for m in range(1, 27)) for k in range(13)]
        )
    return np.mean(rows, axis=0)


def test_power_spectrum_matches_direct_dft_on_random_frames():
    rng = np.random.default_rng(17)
    for _ in range(100):
        length = int(rng.integers(2, 1025))
        frame = rng.standard_normal(length)
        n = next_power_of_two(length)
        np.testing.assert_allclose(power_spectrum(frame, n), direct_dft_magnitudes(frame, n), rtol=1e-9, atol=1e-9)


def test_filterbank_matches_loop_construction():
    for num_filters, fft_size in ((26, 512), (40, 1024), (20, 256)):
        expected = loop_filterbank(num_filters, fft_size, SR)
        np.testing.assert_allclose(build_mel_filterbank(num_filters, fft_size, SR).weights, expected, rtol=1e-12)


def test_log_mel_energies_match_double_loop():
    rng = np.random.default_rng(23)
    fb = build_mel_filterbank(26, 512, SR)
    magnitudes = rng.uniform(0.0, 10.0, size=(5, 257))
    expected = np.empty((5, 26))
    for row in range(5):
        for m in range(26):
            total = 0.0
            for k in range(257):
                total += magnitudes[row, k] * fb.weights[m, k]
            expected[row, m] = np.log(max(total * total, 1e-10))
    np.testing.assert_allclose(log_mel_energies(magnitudes, fb), expected, rtol=1e-12, atol=1e-12)


def test_mfcc_features_match_slow_reference_on_440hz():
    samples = sine(440.0, 0.1)
    np.testing.assert_allclose(mfcc_features(make_clip(samples)), slow_mfcc(samples), rtol=1e-9, atol=1e-9)


def test_one_hop_shift_barely_moves_mfcc():
    reference = mfcc_features(make_clip(sine(440.0, 1.0)))
    shifted = mfcc_features(make_clip(sine(440.0, 1.0, phase=2 * np.pi * 440.0 * 256 / SR)))
    assert np.linalg.norm(shifted - reference) < 0.01 * np.linalg.norm(reference)


def test_mfcc_features_are_deterministic():
    samples = voiced_tone(170.0, 0.6)
    first = mfcc_features(make_clip(samples))
    second = mfcc_features(make_clip(samples.copy()))
    assert first.tobytes() == second.tobytes()

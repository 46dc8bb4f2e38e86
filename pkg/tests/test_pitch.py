import numpy as np
import pandas as pd
import pytest

from voicepd.config import PitchParams
from voicepd.errors import EmptyTrackError, PreconditionError
from voicepd.services.features import assemble_feature_vector
from voicepd.services.perturbation import jitter_relative
from voicepd.services.pitch import (
    F0Contour,
    compute_hnr,
    estimate_f0_frame,
    extract_period_track,
    f0_and_pitch_features,
    hnr_from_autocorrelation,
    segment_hnr,
    track_f0,
    write_contour_csv,
)

from .conftest import SR, make_clip, sine, voiced_tone


def test_pure_tone_f0_is_accurate():
    frame = sine(200.0, 0.04)
    assert estimate_f0_frame(frame, SR) == pytest.approx(200.0, rel=0.005)


def test_f0_is_gain_invariant():
    frame = voiced_tone(150.0, 0.04)
    assert estimate_f0_frame(frame, SR) == pytest.approx(estimate_f0_frame(0.1 * frame, SR), rel=1e-9)


def test_silence_and_dc_are_unvoiced():
    assert estimate_f0_frame(np.zeros(640), SR) is None
    assert estimate_f0_frame(np.full(640, 0.3), SR) is None


def test_white_noise_is_mostly_unvoiced():
    rng = np.random.default_rng(0)
    voiced = [estimate_f0_frame(0.3 * rng.standard_normal(640), SR) for _ in range(20)]
    assert sum(v is not None for v in voiced) <= 2


def test_octave_guard_prefers_fundamental():
    frame = sine(100.0, 0.04) + 0.8 * sine(200.0, 0.04)
    assert estimate_f0_frame(frame / 2, SR) == pytest.approx(100.0, rel=0.01)


def test_short_frame_is_rejected():
    with pytest.raises(PreconditionError):
        estimate_f0_frame(np.zeros(100), SR, f_min=75.0)


def test_track_f0_on_tone():
    contour = track_f0(make_clip(voiced_tone(140.0, 0.5)), PitchParams())
    assert np.all(contour.voiced_mask)
    np.testing.assert_allclose(contour.voiced_values, 140.0, rtol=0.01)
    mean, median = f0_and_pitch_features(contour)
    assert mean == pytest.approx(140.0, rel=0.01)
    assert median == pytest.approx(140.0, rel=0.01)


def test_period_track_of_100hz_sine():
    clip = make_clip(sine(100.0, 0.5))
    track = extract_period_track(clip, track_f0(clip))
    assert track.count == 49
    np.testing.assert_allclose(track.periods, 0.01, rtol=1e-3)
    np.testing.assert_allclose(track.amplitudes, 0.5, rtol=1e-3)


def test_period_track_jitter_floor_on_150hz():
    clip = make_clip(sine(150.0, 0.5))
    track = extract_period_track(clip, track_f0(clip))
    assert jitter_relative(track) < 0.5


def test_alternating_amplitude_shows_in_track():
    cycles = [sine(100.0, 0.01, amplitude=0.8 if i % 2 == 0 else 0.4) for i in range(50)]
    clip = make_clip(np.concatenate(cycles))
    track = extract_period_track(clip, track_f0(clip))
    ratios = track.amplitudes[1:] / track.amplitudes[:-1]
    assert np.all((np.abs(ratios - 2.0) < 0.05) | (np.abs(ratios - 0.5) < 0.05))


def test_unvoiced_contour_is_empty_track_error():
    clip = make_clip(np.zeros(SR // 2))
    with pytest.raises(EmptyTrackError):
        extract_period_track(clip, track_f0(clip))


@pytest.mark.parametrize("lead_ms", [0, 5, 12, 20, 50])
def test_leading_silence_adds_no_empty_cycles(lead_ms):
    samples = np.concatenate([np.zeros(SR * lead_ms // 1000), voiced_tone(150.0, 1.0)])
    clip = make_clip(samples)
    track = extract_period_track(clip, track_f0(clip))
    assert track.count > 140
    assert track.amplitudes.min() > 0.45
    np.testing.assert_allclose(track.periods, 1.0 / 150.0, rtol=0.02)
    features = assemble_feature_vector(clip).as_dict()
    assert features["shimmer_db"] < 0.1


def test_inner_pause_splits_the_cycle_run():
    tone = voiced_tone(150.0, 0.5)
    clip = make_clip(np.concatenate([tone, np.zeros(int(0.3 * SR)), tone]))
    track = extract_period_track(clip, track_f0(clip))
    # No period may bridge the pause.
    assert track.periods.max() < 1.02 / 150.0
    assert track.amplitudes.min() > 0.45
    assert track.count > 130
    assert jitter_relative(track) < 0.5
    assemble_feature_vector(clip)


def test_hnr_mapping():
    assert hnr_from_autocorrelation(0.5) == pytest.approx(0.0, abs=1e-12)
    assert hnr_from_autocorrelation(0.9) == pytest.approx(10 * np.log10(9.0))
    assert hnr_from_autocorrelation(1.0) == pytest.approx(90.0, abs=0.01)


def test_hnr_increases_strictly_with_r():
    r = np.linspace(0.01, 0.999, 200)
    db = np.array([hnr_from_autocorrelation(value) for value in r])
    assert np.all(np.diff(db) > 0)
    rng = np.random.default_rng(4)
    tone = sine(200.0, 0.25, amplitude=1.0)
    noise = rng.standard_normal(tone.size)
    estimates = [compute_hnr(tone + level * noise, 200.0, SR).db for level in (1.0, 0.3, 0.1, 0.03)]
    assert np.all(np.diff(estimates) > 0)


def test_hnr_of_clean_tone_is_high():
    estimate = compute_hnr(sine(200.0, 0.04), 200.0, SR)
    assert estimate.db > 20.0
    assert not estimate.degenerate


def test_hnr_of_equal_power_noise_is_near_zero():
    rng = np.random.default_rng(1)
    n = int(0.25 * SR)
    tone = sine(200.0, 0.25, amplitude=1.0)
    noise = rng.standard_normal(n) * np.sqrt(0.5)
    estimate = compute_hnr(0.3 * (tone + noise), 200.0, SR)
    assert abs(estimate.db) < 1.5


def test_hnr_degenerate_frame_hits_floor():
    frame = np.zeros(640)
    estimate = compute_hnr(frame, 200.0, SR, floor_db=-20.0)
    assert estimate.db == -20.0
    assert estimate.degenerate


def test_segment_hnr_averages_voiced_frames():
    clip = make_clip(voiced_tone(120.0, 0.4))
    assert segment_hnr(clip, track_f0(clip)) > 20.0


def test_contour_csv_leaves_unvoiced_empty(tmp_path):
    contour = F0Contour(values=np.array([100.0, np.nan, 110.0]), frame_hop=0.01, frame_length=0.04, sample_rate=SR)
    frame = pd.read_csv(write_contour_csv(contour, tmp_path / "f0.csv"))
    assert list(frame.columns) == ["frame_index", "f0_hz"]
    assert np.isnan(frame["f0_hz"][1])
    assert frame["f0_hz"][2] == 110.0

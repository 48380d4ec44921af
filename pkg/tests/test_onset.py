import numpy as np
import pytest
from hypothesis import given, strategies as st

from aca.onset import (
    NoveltyCurve,
    beat_histogram,
    detect_onsets,
    estimate_tempo,
    moving_average,
    novelty_flux,
    pick_onsets,
)
from aca.signal_io import AudioBuffer, synth_click_train
from aca.spectral import Spectrogram, StftParams, Window, stft

FS = 44100
# a rectangular window keeps the click at t = 0 visible to the first frame
CLICK_PARAMS = StftParams(1024, 512, Window.RECTANGULAR, FS)


def make_spec(mags, params=CLICK_PARAMS):
    mags = np.asarray(mags, dtype=float)
    times = (np.arange(mags.shape[1]) * params.hop_size + params.block_size / 2) / params.sample_rate_hz
    return Spectrogram(mags, params, times)


def curve(values, frame_rate=100.0):
    values = np.asarray(values, dtype=float)
    return NoveltyCurve(values, frame_rate, np.arange(values.size) / frame_rate)


def test_constant_spectrogram_novelty():
    nov = novelty_flux(make_spec(np.full((513, 6), 2.0)))
    assert nov.values[0] > 0
    np.testing.assert_array_equal(nov.values[1:], 0)


def test_single_energetic_frame_after_silence():
    mags = np.zeros((513, 5))
    mags[:, 3] = 1.0
    nov = novelty_flux(make_spec(mags))
    assert np.flatnonzero(nov.values).tolist() == [3]
    # sqrt(513) / 513
    assert nov.values[3] == pytest.approx(1 / np.sqrt(513))


def test_novelty_is_half_wave_rectified():
    mags = np.zeros((513, 3))
    mags[10, 0] = 1.0
    nov = novelty_flux(make_spec(mags))
    # energy disappears at frame 1: no positive change
    assert nov.values[1] == 0


def test_moving_average_zero_padded():
    np.testing.assert_allclose(moving_average([3, 3, 3], 3), [2, 3, 2])
    np.testing.assert_allclose(moving_average([1, 2, 3], 1), [1, 2, 3])


def test_silence_gives_no_onsets():
    assert detect_onsets(AudioBuffer(np.zeros(FS), FS), CLICK_PARAMS).times_s.size == 0


def test_two_close_peaks_give_one_onset():
    v = np.zeros(50)
    v[20] = 1.0
    v[21] = 0.0
    v[22] = 0.9  # 20 ms later at 100 frames/s
    onsets = pick_onsets(curve(v))
    np.testing.assert_allclose(onsets.times_s, [0.2])


def test_click_train_onsets():
    audio = synth_click_train(0.5, 5.0, FS)
    onsets = detect_onsets(audio, CLICK_PARAMS).times_s
    hop_s = CLICK_PARAMS.hop_size / FS
    assert onsets.size == 10
    np.testing.assert_allclose(onsets, 0.5 * np.arange(10), atol=hop_s)


@pytest.mark.parametrize("period", [0.1, 0.25, 0.37])
def test_click_count_matches(period):
    audio = synth_click_train(period, 3.0, FS)
    expected = np.arange(int(np.ceil(3.0 / period))) * period
    onsets = detect_onsets(audio, CLICK_PARAMS).times_s
    assert onsets.size == expected.size
    assert np.max(np.abs(onsets - expected)) <= 0.05
    assert np.all(np.diff(onsets) >= 0.03)


def test_beat_histogram_120():
    nov = novelty_flux(stft(synth_click_train(0.5, 10.0, FS), CLICK_PARAMS))
    hist = beat_histogram(nov)
    assert hist.strength.max() == 1.0
    assert estimate_tempo(hist) == pytest.approx(120, abs=2)


def test_beat_histogram_60_peaks_at_true_period():
    v = np.zeros(1000)
    v[::100] = 1.0  # one pulse per second at 100 frames/s
    hist = beat_histogram(curve(v))
    assert estimate_tempo(hist) == pytest.approx(60, abs=2)
    # the doubled period (30 BPM) also scores, which is permitted
    assert hist.strength[hist.bpm_axis == 30][0] > 0


def test_zero_novelty_histogram():
    hist = beat_histogram(curve(np.zeros(500)))
    assert not np.any(hist.strength)
    assert estimate_tempo(hist) == 0


def test_tempo_default_params():
    nov = novelty_flux(stft(synth_click_train(0.5, 10.0, FS), StftParams(sample_rate_hz=FS)))
    assert estimate_tempo(beat_histogram(nov)) == pytest.approx(120, abs=2)


@given(st.floats(0.05, 20.0))
def test_gain_covariance(gain):
    audio = synth_click_train(0.3, 2.0, FS)
    nov = novelty_flux(stft(audio, CLICK_PARAMS))
    scaled = novelty_flux(stft(audio.scaled(gain), CLICK_PARAMS))
    np.testing.assert_allclose(scaled.values, gain * nov.values, rtol=1e-9, atol=1e-15)
    np.testing.assert_array_equal(pick_onsets(scaled).times_s, pick_onsets(nov).times_s)


@given(st.lists(st.floats(0, 1, allow_subnormal=False), min_size=20, max_size=200), st.floats(0.01, 100))
def test_histogram_scale_invariant(values, gain):
    a = beat_histogram(curve(values))
    b = beat_histogram(curve(np.asarray(values) * gain))
    np.testing.assert_allclose(a.strength, b.strength, atol=1e-9)


@given(st.lists(st.floats(0, 1, allow_subnormal=False), min_size=1, max_size=300))
def test_onsets_increase_and_respect_separation(values):
    onsets = pick_onsets(curve(values)).times_s
    assert np.all(np.diff(onsets) >= 0.03 - 1e-12)

"""Spectral-flux novelty, onset picking and the beat histogram."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signal_io import AudioBuffer
from .spectral import Spectrogram, StftParams, stft

BPM_MIN = 30
BPM_MAX = 200


@dataclass(frozen=True)
class NoveltyCurve:
    values: np.ndarray
    frame_rate_hz: float
    frame_times_s: np.ndarray


@dataclass(frozen=True)
class OnsetList:
    times_s: np.ndarray


@dataclass(frozen=True)
class BeatHistogram:
    bpm_axis: np.ndarray
    strength: np.ndarray
    lags: np.ndarray | None = None


def novelty_flux(spec: Spectrogram) -> NoveltyCurve:
    """Half-wave rectified L2 spectral flux, normalized by the bin count."""
    X = spec.magnitudes
    previous = np.concatenate((np.zeros((X.shape[0], 1)), X[:, :-1]), axis=1)
    rise = np.maximum(X - previous, 0.0)
    values = np.sqrt(np.sum(rise ** 2, axis=0)) / X.shape[0]
    return NoveltyCurve(values, spec.params.frame_rate_hz, spec.frame_times_s)


def moving_average(x, length: int) -> np.ndarray:
    """Centered moving average; samples outside the curve count as zero."""
    x = np.asarray(x, dtype=np.float64)
    length = max(1, int(length))
    before = length // 2
    after = length - before - 1
    csum = np.concatenate(([0.0], np.cumsum(x)))
    idx = np.arange(x.size)
    lo = np.maximum(idx - before, 0)
    hi = np.minimum(idx + after + 1, x.size)
    return (csum[hi] - csum[lo]) / length


def pick_onsets(nov: NoveltyCurve, smooth_s: float = 0.07, threshold_offset: float = 0.1,
                min_separation_s: float = 0.03) -> OnsetList:
    values = np.asarray(nov.values, dtype=np.float64)
    peak = values.max() if values.size else 0.0
    if peak <= 0:
        return OnsetList(np.zeros(0))
    v = values / peak
    threshold = moving_average(v, round(smooth_s * nov.frame_rate_hz)) + threshold_offset
    padded = np.concatenate(([-np.inf], v, [-np.inf]))
    is_peak = (v > padded[:-2]) & (v > padded[2:]) & (v > threshold)
    accepted = []
    for n in np.flatnonzero(is_peak):
        t = float(nov.frame_times_s[n])
        if accepted and t - accepted[-1] < min_separation_s:
            continue
        accepted.append(t)
    return OnsetList(np.asarray(accepted))


def detect_onsets(audio: AudioBuffer, params: StftParams | None = None, **options) -> OnsetList:
    return pick_onsets(novelty_flux(stft(audio, params)), **options)


def beat_histogram(nov: NoveltyCurve) -> BeatHistogram:
    """Periodicity strength per BPM from the autocorrelation of the novelty."""
    bpm = np.arange(BPM_MIN, BPM_MAX + 1, dtype=np.float64)
    x = np.asarray(nov.values, dtype=np.float64)
    x = x - x.mean() if x.size else x
    lags = np.rint(60.0 * nov.frame_rate_hz / bpm).astype(int)
    strength = np.zeros(bpm.size)
    for i, lag in enumerate(lags):
        if 0 < lag < x.size:
            strength[i] = max(float(np.dot(x[:-lag], x[lag:])), 0.0)
    if strength.max() > 0:
        strength /= strength.max()
    return BeatHistogram(bpm, strength, lags)


def estimate_tempo(hist: BeatHistogram) -> float:
    if not np.any(hist.strength > 0):
        return 0.0
    best = int(np.argmax(hist.strength))
    if hist.lags is None:
        return float(hist.bpm_axis[best])
    # neighbouring BPM values can share one integer lag; report the centre of that run
    same = hist.lags == hist.lags[best]
    return float(np.mean(hist.bpm_axis[same]))

"""Monophonic fundamental-frequency estimation.

Three time-domain estimators (autocorrelation, AMDF, zero crossings) work on
raw blocks; two spectral estimators (harmonic product spectrum, spectral
autocorrelation) work on magnitude columns. A return value of 0 means
unvoiced or undetected.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import BlockTooShort, InvalidOrder
from .signal_io import AudioBuffer
from .spectral import StftParams, bin_to_hz, block_audio, frame_times, num_frames, stft

DEFAULT_F_MIN = 50.0
DEFAULT_F_MAX = 2000.0
ACF_VOICING_THRESHOLD = 0.3
# AMDF dips within this fraction of the AMDF range above its minimum count as
# period candidates; the shortest such lag wins, which avoids octave-down errors
AMDF_DIP_TOLERANCE = 0.1
HPS_DEFAULT_ORDER = 4


class PitchMethod(str, Enum):
    TIME_ACF = "TimeAcf"
    TIME_AMDF = "TimeAmdf"
    TIME_ZERO_CROSSING = "TimeZeroCrossing"
    SPECTRAL_ACF = "SpectralAcf"
    SPECTRAL_HPS = "SpectralHps"

    @property
    def is_time_domain(self) -> bool:
        return self in (PitchMethod.TIME_ACF, PitchMethod.TIME_AMDF,
                        PitchMethod.TIME_ZERO_CROSSING)


@dataclass(frozen=True)
class PitchTrack:
    f0_hz: np.ndarray
    frame_times_s: np.ndarray
    method: PitchMethod


def _lag_range(sample_rate_hz, f_min, f_max, length):
    if not 0 < f_min < f_max:
        raise ValueError(f"need 0 < f_min < f_max, got {f_min}, {f_max}")
    lo = max(1, math.ceil(sample_rate_hz / f_max))
    hi = min(math.floor(sample_rate_hz / f_min), length - 2)
    return lo, hi


def autocorrelation(x, max_lag: int) -> np.ndarray:
    """Biased autocorrelation r[eta] = sum_n x[n] x[n+eta] for eta = 0..max_lag."""
    x = np.asarray(x, dtype=np.float64)
    return np.array([np.dot(x[: x.size - eta], x[eta:]) for eta in range(max_lag + 1)])


def f0_time_acf(block, sample_rate_hz, f_min=DEFAULT_F_MIN, f_max=DEFAULT_F_MAX) -> float:
    block = np.asarray(block, dtype=np.float64)
    if block.size <= sample_rate_hz / f_min:
        raise BlockTooShort(
            f"block of {block.size} samples cannot hold one period at {f_min} Hz")
    lo, hi = _lag_range(sample_rate_hz, f_min, f_max, block.size)
    r = autocorrelation(block, hi + 1)
    if r[0] <= 0:
        return 0.0
    # skip the main lobe around lag 0: search starts where the ACF first rises
    rising = np.flatnonzero(np.diff(r[: hi + 1]) > 0)
    if rising.size == 0:
        return 0.0
    lo = max(lo, int(rising[0]))
    if lo > hi:
        return 0.0
    eta = lo + int(np.argmax(r[lo: hi + 1]))
    if r[eta] <= ACF_VOICING_THRESHOLD * r[0]:
        return 0.0
    offset = 0.0
    if eta >= 1:
        left, mid, right = r[eta - 1], r[eta], r[eta + 1]
        denom = left - 2 * mid + right
        if denom < 0:
            offset = 0.5 * (left - right) / denom
    f0 = sample_rate_hz / (eta + offset)
    return float(min(max(f0, f_min), f_max))


def amdf(x, max_lag: int) -> np.ndarray:
    """d[eta] = (1/L) sum_n |x[n] - x[n+eta]| for eta = 0..max_lag."""
    x = np.asarray(x, dtype=np.float64)
    return np.array([np.abs(x[: x.size - eta] - x[eta:]).sum() for eta in range(max_lag + 1)]) / x.size


def f0_time_amdf(block, sample_rate_hz, f_min=DEFAULT_F_MIN, f_max=DEFAULT_F_MAX) -> float:
    block = np.asarray(block, dtype=np.float64)
    if block.size <= sample_rate_hz / f_min:
        raise BlockTooShort(
            f"block of {block.size} samples cannot hold one period at {f_min} Hz")
    if not np.any(block):
        return 0.0
    lo, hi = _lag_range(sample_rate_hz, f_min, f_max, block.size)
    if lo > hi:
        return 0.0
    d = amdf(block, hi)[lo: hi + 1]
    d_min, d_max = d.min(), d.max()
    candidates = np.flatnonzero(d <= d_min + AMDF_DIP_TOLERANCE * (d_max - d_min))
    # walk down from the first candidate to the bottom of its dip
    idx = int(candidates[0])
    while idx + 1 < d.size and d[idx + 1] < d[idx]:
        idx += 1
    return float(sample_rate_hz / (lo + idx))


def f0_zero_crossing(block, sample_rate_hz) -> float:
    """f0 from the mean spacing of positive-going zero crossings."""
    x = np.asarray(block, dtype=np.float64)
    if x.size < 2:
        return 0.0
    idx = np.flatnonzero((x[:-1] < 0) & (x[1:] >= 0))
    if idx.size < 2:
        return 0.0
    # linear interpolation of the crossing point between samples idx and idx+1
    positions = idx + x[idx] / (x[idx] - x[idx + 1])
    return float(sample_rate_hz / np.mean(np.diff(positions)))


def f0_hps(X, params: StftParams, order: int = HPS_DEFAULT_ORDER, f_min=DEFAULT_F_MIN) -> float:
    if order < 2:
        raise InvalidOrder(f"HPS order must be >= 2, got {order}")
    X = np.asarray(X, dtype=np.float64)
    if not np.any(X):
        return 0.0
    k_max = (X.size - 1) // order
    k_min = max(1, math.ceil(f_min * params.block_size / params.sample_rate_hz))
    if k_min > k_max:
        return 0.0
    k = np.arange(k_max + 1)
    product = np.ones(k_max + 1)
    for j in range(1, order + 1):
        product *= X[j * k]
    if not np.any(product[k_min:] > 0):
        # no bin has energy at all of its first `order` multiples
        return 0.0
    best = k_min + int(np.argmax(product[k_min:]))
    return float(bin_to_hz(best, params))


def f0_spectral_acf(X, params: StftParams, f_min=DEFAULT_F_MIN, f_max=DEFAULT_F_MAX) -> float:
    X = np.asarray(X, dtype=np.float64)
    if not np.any(X):
        return 0.0
    bin_hz = params.sample_rate_hz / params.block_size
    lo = max(1, math.ceil(f_min / bin_hz))
    hi = min(math.floor(f_max / bin_hz), X.size - 1)
    if lo > hi:
        return 0.0
    r = autocorrelation(X, hi)
    return float(bin_to_hz(lo + int(np.argmax(r[lo: hi + 1])), params))


def track_pitch(audio: AudioBuffer, params: StftParams | None = None,
                method=PitchMethod.TIME_ACF, f_min=DEFAULT_F_MIN, f_max=DEFAULT_F_MAX) -> PitchTrack:
    method = PitchMethod(method)
    if params is None:
        params = StftParams(sample_rate_hz=audio.sample_rate_hz)
    params = params.for_rate(audio.sample_rate_hz)
    fs = audio.sample_rate_hz
    if method.is_time_domain:
        blocks = block_audio(audio.samples, params.block_size, params.hop_size)
        if method is PitchMethod.TIME_ACF:
            f0 = [f0_time_acf(b, fs, f_min, f_max) for b in blocks]
        elif method is PitchMethod.TIME_AMDF:
            f0 = [f0_time_amdf(b, fs, f_min, f_max) for b in blocks]
        else:
            f0 = [f0_zero_crossing(b, fs) for b in blocks]
        times = frame_times(num_frames(len(audio), params.hop_size), params)
    else:
        spec = stft(audio, params)
        cols = spec.magnitudes.T
        if method is PitchMethod.SPECTRAL_HPS:
            f0 = [f0_hps(c, params, f_min=f_min) for c in cols]
        else:
            f0 = [f0_spectral_acf(c, params, f_min, f_max) for c in cols]
        times = spec.frame_times_s
    return PitchTrack(np.asarray(f0, dtype=np.float64), times, method)

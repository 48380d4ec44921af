"""Instantaneous audio features.

Spectral features take a single magnitude column ``X`` (``block_size/2 + 1``
bins) and return a scalar or a short vector. Time-domain features take one
unwindowed block. :func:`extract` runs any feature over a whole buffer and
returns a :class:`FeatureSeries` aligned with the STFT frames.

Degenerate input never produces NaN: silent frames map to 0 (or an all-zero
vector, or the log floor for MFCCs).
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .errors import InvalidBandCount
from .signal_io import AudioBuffer
from .spectral import (
    Spectrogram,
    StftParams,
    bin_frequencies,
    bin_to_hz,
    block_audio,
    frame_times,
    hz_to_mel,
    hz_to_midi,
    mel_to_hz,
    num_frames,
    stft,
)

MFCC_NUM_BANDS = 40
MFCC_NUM_COEFFS = 13
MFCC_LOG_FLOOR = 1e-10
CHROMA_MIN_HZ = 55.0
CHROMA_MAX_HZ = 3520.0
RMS_DB_FLOOR = -100.0


class FeatureId(str, Enum):
    SPECTRAL_CENTROID = "SpectralCentroid"
    SPECTRAL_CREST = "SpectralCrest"
    SPECTRAL_FLATNESS = "SpectralFlatness"
    SPECTRAL_ROLLOFF = "SpectralRolloff"
    SPECTRAL_SKEWNESS = "SpectralSkewness"
    SPECTRAL_FLUX = "SpectralFlux"
    MFCC = "Mfcc"
    PITCH_CHROMA = "PitchChroma"
    TIME_RMS = "TimeRms"
    TIME_ZCR = "TimeZcr"

    @property
    def dims(self) -> int:
        return {FeatureId.MFCC: MFCC_NUM_COEFFS, FeatureId.PITCH_CHROMA: 12}.get(self, 1)

    @property
    def is_time_domain(self) -> bool:
        return self in (FeatureId.TIME_RMS, FeatureId.TIME_ZCR)


@dataclass(frozen=True)
class FeatureSeries:
    feature: FeatureId
    values: np.ndarray  # (dims, frames)
    frame_times_s: np.ndarray

    @property
    def num_frames(self) -> int:
        return self.values.shape[1]


# -- spectral features -------------------------------------------------------

def spectral_centroid(X, params: StftParams) -> float:
    power = np.asarray(X, dtype=np.float64) ** 2
    total = power.sum()
    if total == 0:
        return 0.0
    k = np.arange(power.size)
    return float(bin_to_hz((k * power).sum() / total, params))


def spectral_rolloff(X, params: StftParams, kappa: float = 0.85) -> float:
    if not 0 < kappa <= 1:
        raise ValueError(f"kappa must lie in (0, 1], got {kappa}")
    X = np.asarray(X, dtype=np.float64)
    total = X.sum()
    if total == 0:
        return 0.0
    cumulative = np.cumsum(X)
    # the last cumulative value can differ from total by rounding
    k_star = int(np.argmax(cumulative >= kappa * cumulative[-1]))
    return float(bin_to_hz(k_star, params))


def spectral_flatness(X) -> float:
    X = np.asarray(X, dtype=np.float64)
    if X.size == 0 or np.any(X == 0):
        return 0.0
    geometric = np.exp(np.mean(np.log(X)))
    return float(min(geometric / np.mean(X), 1.0))


def spectral_crest(X) -> float:
    X = np.asarray(X, dtype=np.float64)
    total = X.sum()
    if total == 0:
        return 0.0
    return float(X.max() / total)


def spectral_skewness(X, params: StftParams | None = None) -> float:
    """Skewness of the bin-index distribution weighted by |X|^2 (dimensionless)."""
    power = np.asarray(X, dtype=np.float64) ** 2
    total = power.sum()
    if total == 0:
        return 0.0
    p = power / total
    k = np.arange(p.size)
    mean = (k * p).sum()
    var = ((k - mean) ** 2 * p).sum()
    if var <= 1e-12 * max(mean * mean, 1.0):
        return 0.0
    return float(((k - mean) ** 3 * p).sum() / var ** 1.5)


def spectral_flux(X_now, X_prev=None) -> float:
    X_now = np.asarray(X_now, dtype=np.float64)
    X_prev = np.zeros_like(X_now) if X_prev is None else np.asarray(X_prev, dtype=np.float64)
    return float(np.sqrt(np.sum((X_now - X_prev) ** 2)) / X_now.size)


@lru_cache(maxsize=32)
def mel_filterbank(params: StftParams, num_bands: int = MFCC_NUM_BANDS) -> np.ndarray:
    """Unit-area triangular filters, equally spaced on the mel axis up to Nyquist.

    Returns a (num_bands, num_bins) matrix.
    """
    nyquist = params.sample_rate_hz / 2
    edges = mel_to_hz(np.linspace(0.0, hz_to_mel(nyquist), num_bands + 2))
    freqs = bin_frequencies(params)
    bank = np.zeros((num_bands, freqs.size))
    for m in range(num_bands):
        lo, center, hi = edges[m], edges[m + 1], edges[m + 2]
        rising = (freqs - lo) / (center - lo)
        falling = (hi - freqs) / (hi - center)
        bank[m] = np.maximum(0.0, np.minimum(rising, falling)) * 2.0 / (hi - lo)
    bank.setflags(write=False)
    return bank


@lru_cache(maxsize=32)
def dct_matrix(num_out: int, num_in: int) -> np.ndarray:
    """Rows of the orthonormal DCT-II."""
    n = np.arange(num_in)
    rows = np.cos(np.pi * np.arange(num_out)[:, None] * (n[None, :] + 0.5) / num_in)
    rows *= np.sqrt(2.0 / num_in)
    rows[0] /= np.sqrt(2.0)
    rows.setflags(write=False)
    return rows


def mfcc(X, params: StftParams, num_bands: int = MFCC_NUM_BANDS,
         num_coeffs: int = MFCC_NUM_COEFFS) -> np.ndarray:
    if num_bands < 2 or num_coeffs > num_bands or num_coeffs < 1:
        raise InvalidBandCount(
            f"need 2 <= num_bands and 1 <= num_coeffs <= num_bands, got {num_bands}/{num_coeffs}")
    X = np.asarray(X, dtype=np.float64)
    energies = mel_filterbank(params, num_bands) @ (X ** 2)
    log_bands = np.log10(np.maximum(energies, MFCC_LOG_FLOOR))
    return dct_matrix(num_coeffs, num_bands) @ log_bands


@lru_cache(maxsize=32)
def _chroma_map(params: StftParams) -> np.ndarray:
    """(12, num_bins) 0/1 matrix assigning each bin in range to its pitch class."""
    freqs = bin_frequencies(params)
    top = min(params.sample_rate_hz / 2, CHROMA_MAX_HZ)
    mapping = np.zeros((12, freqs.size))
    for k, f in enumerate(freqs):
        if CHROMA_MIN_HZ <= f <= top:
            mapping[int(round(float(hz_to_midi(f)))) % 12, k] = 1.0
    mapping.setflags(write=False)
    return mapping


def pitch_chroma(X, params: StftParams) -> np.ndarray:
    chroma = _chroma_map(params) @ (np.asarray(X, dtype=np.float64) ** 2)
    total = chroma.sum()
    if total == 0:
        return np.zeros(12)
    return chroma / total


# -- time-domain features ----------------------------------------------------

def time_rms(block) -> float:
    block = np.asarray(block, dtype=np.float64)
    if block.size == 0:
        return 0.0
    return float(np.sqrt(np.mean(block ** 2)))


def rms_to_db(rms: float) -> float:
    if rms <= 0:
        return RMS_DB_FLOOR
    return max(20.0 * np.log10(rms), RMS_DB_FLOOR)


def time_zcr(block) -> float:
    block = np.asarray(block, dtype=np.float64)
    if block.size < 2:
        return 0.0
    signs = np.sign(block)
    return float(np.abs(np.diff(signs)).sum() / (2 * (block.size - 1)))


# -- series extraction -------------------------------------------------------

def _spectral_series(feature: FeatureId, spec: Spectrogram, **options) -> np.ndarray:
    X = spec.magnitudes
    params = spec.params
    frames = X.shape[1]
    if feature is FeatureId.SPECTRAL_FLUX:
        previous = np.concatenate((np.zeros((X.shape[0], 1)), X[:, :-1]), axis=1)
        return (np.sqrt(np.sum((X - previous) ** 2, axis=0)) / X.shape[0])[None, :]
    if feature is FeatureId.MFCC:
        out = np.empty((options.get("num_coeffs", MFCC_NUM_COEFFS), frames))
        for n in range(frames):
            out[:, n] = mfcc(X[:, n], params, **options)
        return out
    if feature is FeatureId.PITCH_CHROMA:
        return np.column_stack([pitch_chroma(X[:, n], params) for n in range(frames)]) \
            if frames else np.zeros((12, 0))
    func = {
        FeatureId.SPECTRAL_CENTROID: lambda col: spectral_centroid(col, params),
        FeatureId.SPECTRAL_ROLLOFF: lambda col: spectral_rolloff(col, params, **options),
        FeatureId.SPECTRAL_FLATNESS: spectral_flatness,
        FeatureId.SPECTRAL_CREST: spectral_crest,
        FeatureId.SPECTRAL_SKEWNESS: lambda col: spectral_skewness(col, params),
    }[feature]
    return np.array([[func(X[:, n]) for n in range(frames)]])


def extract(audio: AudioBuffer, feature, params: StftParams | None = None,
            spectrogram: Spectrogram | None = None, **options) -> FeatureSeries:
    """Compute ``feature`` for every analysis frame of ``audio``.

    ``options`` are forwarded to the per-frame function (``kappa`` for
    rolloff, ``num_bands``/``num_coeffs`` for MFCCs). A precomputed
    ``spectrogram`` may be passed to avoid recomputing the STFT.
    """
    feature = FeatureId(feature)
    if params is None:
        params = spectrogram.params if spectrogram is not None else StftParams(
            sample_rate_hz=audio.sample_rate_hz)
    params = params.for_rate(audio.sample_rate_hz)
    if feature.is_time_domain:
        blocks = block_audio(audio.samples, params.block_size, params.hop_size)
        func = time_rms if feature is FeatureId.TIME_RMS else time_zcr
        values = np.array([[func(b) for b in blocks]])
        times = frame_times(num_frames(len(audio), params.hop_size), params)
        return FeatureSeries(feature, values, times)
    spec = spectrogram if spectrogram is not None else stft(audio, params)
    return FeatureSeries(feature, _spectral_series(feature, spec, **options), spec.frame_times_s)


def aggregate(series: FeatureSeries, stat: str = "mean") -> np.ndarray:
    """Per-dimension mean or population standard deviation over frames."""
    if stat == "mean":
        return series.values.mean(axis=1)
    if stat == "std":
        return series.values.std(axis=1)
    raise ValueError(f"unknown statistic {stat!r} (expected 'mean' or 'std')")

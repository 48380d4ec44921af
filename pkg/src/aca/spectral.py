"""Blocking, windowing, FFT and the magnitude spectrogram.

The FFT is an iterative radix-2 decimation-in-time transform, so block sizes
are restricted to powers of two.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import BinOutOfRange, NonPositiveFrequency, NonPowerOfTwoLength
from .signal_io import AudioBuffer

DEFAULT_BLOCK_SIZE = 4096
DEFAULT_HOP_SIZE = 2048

# frames transformed per batch inside stft(); bounds peak memory for small hops
_FRAMES_PER_BATCH = 256


class Window(str, Enum):
    HANN = "Hann"
    HAMMING = "Hamming"
    RECTANGULAR = "Rectangular"


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class StftParams:
    block_size: int = DEFAULT_BLOCK_SIZE
    hop_size: int = DEFAULT_HOP_SIZE
    window: Window = Window.HANN
    sample_rate_hz: int = 44100

    def __post_init__(self):
        object.__setattr__(self, "window", Window(self.window))
        if not (_is_power_of_two(self.block_size) and self.block_size >= 16):
            raise NonPowerOfTwoLength(
                f"block size must be a power of two >= 16, got {self.block_size}")
        if not 1 <= self.hop_size <= self.block_size:
            raise ValueError(f"hop size must lie in [1, {self.block_size}], got {self.hop_size}")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample rate must be positive")

    @property
    def num_bins(self) -> int:
        return self.block_size // 2 + 1

    @property
    def frame_rate_hz(self) -> float:
        return self.sample_rate_hz / self.hop_size

    def for_rate(self, sample_rate_hz: int) -> "StftParams":
        return StftParams(self.block_size, self.hop_size, self.window, sample_rate_hz)

    def as_dict(self) -> dict:
        return {"block_size": self.block_size, "hop_size": self.hop_size,
                "window": self.window.value, "sample_rate_hz": self.sample_rate_hz}


@dataclass(frozen=True)
class Spectrogram:
    magnitudes: np.ndarray  # (num_bins, num_frames)
    params: StftParams
    frame_times_s: np.ndarray = field(repr=False)

    @property
    def num_frames(self) -> int:
        return self.magnitudes.shape[1]


def make_window(kind: Window, length: int) -> np.ndarray:
    """Periodic (DFT-even) window of the given length."""
    kind = Window(kind)
    n = np.arange(length)
    if kind is Window.HANN:
        return 0.5 * (1 - np.cos(2 * np.pi * n / length))
    if kind is Window.HAMMING:
        return 0.54 - 0.46 * np.cos(2 * np.pi * n / length)
    return np.ones(length)


def _bit_reverse_indices(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


def fft(x) -> np.ndarray:
    """Complex DFT along the last axis, unnormalized, for power-of-two lengths."""
    x = np.asarray(x)
    n = x.shape[-1]
    if not (_is_power_of_two(n) and n >= 2):
        raise NonPowerOfTwoLength(f"FFT length must be a power of two >= 2, got {n}")
    out = x[..., _bit_reverse_indices(n)].astype(np.complex128)
    lead = out.shape[:-1]
    size = 2
    while size <= n:
        half = size // 2
        twiddle = np.exp(-2j * np.pi * np.arange(half) / size)
        out = out.reshape(*lead, n // size, size)
        even = out[..., :half]
        odd = out[..., half:] * twiddle
        out = np.concatenate((even + odd, even - odd), axis=-1)
        size *= 2
    return out.reshape(*lead, n)


def fft_magnitude(block) -> np.ndarray:
    """|X(k)| for k = 0..N/2 of a real block (or each row of a 2-D array)."""
    block = np.asarray(block, dtype=np.float64)
    return np.abs(fft(block)[..., : block.shape[-1] // 2 + 1])


def num_frames(num_samples: int, hop_size: int) -> int:
    return -(-num_samples // hop_size)


def frame_times(count: int, params: StftParams) -> np.ndarray:
    n = np.arange(count)
    return (n * params.hop_size + params.block_size / 2) / params.sample_rate_hz


def block_audio(samples, block_size: int, hop_size: int, start: int = 0, stop: int | None = None):
    """Rows are blocks starting at n*hop_size, zero-padded past the end."""
    samples = np.asarray(samples, dtype=np.float64)
    total = num_frames(samples.size, hop_size)
    stop = total if stop is None else min(stop, total)
    padded_len = (stop - 1) * hop_size + block_size if stop > start else 0
    padded = np.zeros(max(padded_len, samples.size))
    padded[: samples.size] = samples
    starts = np.arange(start, stop) * hop_size
    return padded[starts[:, None] + np.arange(block_size)[None, :]]


def stft(audio: AudioBuffer, params: StftParams | None = None) -> Spectrogram:
    if params is None:
        params = StftParams(sample_rate_hz=audio.sample_rate_hz)
    elif params.sample_rate_hz != audio.sample_rate_hz:
        params = params.for_rate(audio.sample_rate_hz)
    if len(audio) == 0:
        raise ValueError("cannot analyze empty audio")
    window = make_window(params.window, params.block_size)
    total = num_frames(len(audio), params.hop_size)
    mags = np.empty((params.num_bins, total))
    for start in range(0, total, _FRAMES_PER_BATCH):
        stop = min(start + _FRAMES_PER_BATCH, total)
        blocks = block_audio(audio.samples, params.block_size, params.hop_size, start, stop)
        mags[:, start:stop] = fft_magnitude(blocks * window).T
    return Spectrogram(mags, params, frame_times(total, params))


def bin_to_hz(k, params: StftParams):
    k_arr = np.asarray(k)
    if np.any(k_arr < 0) or np.any(k_arr > params.block_size // 2):
        raise BinOutOfRange(f"bin {k} outside [0, {params.block_size // 2}]")
    return k * params.sample_rate_hz / params.block_size


def bin_frequencies(params: StftParams) -> np.ndarray:
    return np.arange(params.num_bins) * params.sample_rate_hz / params.block_size


def hz_to_mel(f_hz):
    if np.any(np.asarray(f_hz) < 0):
        raise ValueError("frequency must be non-negative")
    return 2595.0 * np.log10(1.0 + np.asarray(f_hz, dtype=np.float64) / 700.0)


def mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


def hz_to_midi(f_hz):
    f = np.asarray(f_hz, dtype=np.float64)
    if np.any(f <= 0):
        raise NonPositiveFrequency(f"frequency must be positive, got {f_hz}")
    return 69.0 + 12.0 * np.log2(f / 440.0)


def midi_to_hz(pitch):
    return 440.0 * 2.0 ** ((np.asarray(pitch, dtype=np.float64) - 69.0) / 12.0)


def is_power_of_two(n: int) -> bool:
    return _is_power_of_two(n)


def next_power_of_two(n: int) -> int:
    return 1 << max(0, math.ceil(math.log2(max(n, 1))))

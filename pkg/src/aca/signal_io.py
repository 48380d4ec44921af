"""WAV input/output and deterministic test-signal synthesis.

Only 16-bit PCM RIFF/WAVE is handled. Multichannel files are downmixed to
mono by averaging channels when they are read.
"""
from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    AliasedFrequency,
    EmptyAudio,
    IoFailure,
    MalformedContainer,
    UnsupportedFormat,
)

FULL_SCALE = 32768.0
WAVE_FORMAT_PCM = 0x0001
WAVE_FORMAT_EXTENSIBLE = 0xFFFE
# first two bytes of the KSDATAFORMAT_SUBTYPE_PCM GUID
_PCM_SUBTYPE_PREFIX = b"\x01\x00"


@dataclass(frozen=True)
class AudioBuffer:
    """Mono audio samples with their sample rate."""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("AudioBuffer holds mono audio only (1-D samples)")
        if int(self.sample_rate_hz) <= 0:
            raise ValueError(f"sample rate must be positive, got {self.sample_rate_hz}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("AudioBuffer samples must be finite")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate_hz", int(self.sample_rate_hz))

    def __len__(self):
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    def scaled(self, gain: float) -> "AudioBuffer":
        return AudioBuffer(self.samples * gain, self.sample_rate_hz)


@dataclass(frozen=True)
class WavFormat:
    num_channels: int
    bits_per_sample: int
    sample_rate_hz: int
    num_frames: int


def _iter_chunks(data: bytes):
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos:pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body_start = pos + 8
        yield chunk_id, body_start, size
        # chunks are word aligned
        pos = body_start + size + (size & 1)
    if pos < len(data) and len(data) - pos < 8 and data[pos:].strip(b"\x00"):
        raise MalformedContainer("trailing bytes do not form a chunk header")


def parse_wav(data: bytes) -> tuple[WavFormat, np.ndarray]:
    """Decode a RIFF/WAVE byte string into its format and int16 frames.

    Returns the format record and an integer array of shape
    (num_frames, num_channels).
    """
    if len(data) < 12:
        raise MalformedContainer("file too short for a RIFF header")
    if data[0:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise MalformedContainer("missing RIFF/WAVE magic")

    fmt = None
    frames = None
    for chunk_id, start, size in _iter_chunks(data):
        if start + size > len(data):
            raise MalformedContainer(f"chunk {chunk_id!r} is truncated")
        body = data[start:start + size]
        if chunk_id == b"fmt ":
            if size < 16:
                raise MalformedContainer("fmt chunk shorter than 16 bytes")
            tag, channels, rate, _, block_align, bits = struct.unpack_from("<HHIIHH", body)
            if tag == WAVE_FORMAT_EXTENSIBLE:
                if size < 40 or body[24:26] != _PCM_SUBTYPE_PREFIX:
                    raise UnsupportedFormat("extensible fmt chunk without PCM sub-format")
            elif tag != WAVE_FORMAT_PCM:
                raise UnsupportedFormat(f"format tag {tag:#06x} is not PCM")
            if bits != 16:
                raise UnsupportedFormat(f"{bits}-bit samples are not supported (16-bit only)")
            if channels < 1 or rate < 1:
                raise MalformedContainer("fmt chunk declares zero channels or zero rate")
            fmt = (channels, rate)
        elif chunk_id == b"data":
            if fmt is None:
                raise MalformedContainer("data chunk precedes fmt chunk")
            channels = fmt[0]
            usable = (size // (2 * channels)) * 2 * channels
            frames = np.frombuffer(body[:usable], dtype="<i2").reshape(-1, channels)
            break

    if fmt is None:
        raise MalformedContainer("no fmt chunk found")
    if frames is None:
        raise MalformedContainer("no data chunk found")
    channels, rate = fmt
    return WavFormat(channels, 16, rate, frames.shape[0]), frames


def read_wav(path) -> AudioBuffer:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    fmt, frames = parse_wav(data)
    if fmt.num_frames == 0:
        raise EmptyAudio(f"{path} contains no audio frames")
    samples = frames.astype(np.float64).mean(axis=1) / FULL_SCALE
    return AudioBuffer(samples, fmt.sample_rate_hz)


def quantize(samples) -> np.ndarray:
    """Clamp to [-1, 1 - 2**-15] and round to the nearest 16-bit code."""
    x = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0 - 1.0 / FULL_SCALE)
    return np.rint(x * FULL_SCALE).astype("<i2")


def encode_wav(audio: AudioBuffer) -> bytes:
    pcm = quantize(audio.samples).tobytes()
    rate = audio.sample_rate_hz
    header = b"RIFF" + struct.pack("<I", 36 + len(pcm)) + b"WAVE"
    header += b"fmt " + struct.pack("<IHHIIHH", 16, WAVE_FORMAT_PCM, 1, rate, rate * 2, 2, 16)
    header += b"data" + struct.pack("<I", len(pcm))
    out = header + pcm
    if len(pcm) & 1:
        out += b"\x00"
    return out


def write_wav(path, audio: AudioBuffer) -> None:
    """Write ``audio`` as 16-bit mono PCM.

    The file is written to a temporary sibling first and then moved into
    place, so a failed write never leaves a partial file behind.
    """
    path = Path(path)
    tmp = path.with_name(path.name + ".part")
    try:
        tmp.write_bytes(encode_wav(audio))
        os.replace(tmp, path)
    except OSError as exc:
        tmp.unlink(missing_ok=True)
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def synth_sine(freq_hz, duration_s, sample_rate_hz, amplitude=1.0, phase=0.0) -> AudioBuffer:
    if not freq_hz > 0:
        raise ValueError(f"frequency must be positive, got {freq_hz}")
    if not duration_s > 0:
        raise ValueError(f"duration must be positive, got {duration_s}")
    if not 0 < amplitude <= 1:
        raise ValueError(f"amplitude must lie in (0, 1], got {amplitude}")
    if freq_hz >= sample_rate_hz / 2:
        raise AliasedFrequency(
            f"{freq_hz} Hz is at or above the Nyquist frequency of {sample_rate_hz / 2} Hz")
    n = np.arange(int(round(duration_s * sample_rate_hz)))
    return AudioBuffer(amplitude * np.sin(2 * np.pi * freq_hz * n / sample_rate_hz + phase),
                       sample_rate_hz)


def synth_click_train(period_s, duration_s, sample_rate_hz) -> AudioBuffer:
    if period_s < 2 / sample_rate_hz:
        raise ValueError("click period must span at least two samples")
    if not duration_s > 0:
        raise ValueError(f"duration must be positive, got {duration_s}")
    num_samples = max(1, int(round(duration_s * sample_rate_hz)))
    samples = np.zeros(num_samples)
    num_clicks = max(1, math.ceil(duration_s / period_s - 1e-9))
    for k in range(num_clicks):
        idx = int(round(k * period_s * sample_rate_hz))
        if idx < num_samples:
            samples[idx] = 1.0
    return AudioBuffer(samples, sample_rate_hz)


def synth_tones(freqs_hz, duration_s, sample_rate_hz, amplitudes=None) -> AudioBuffer:
    """Sum of sines, scaled so the peak stays below full scale."""
    if amplitudes is None:
        amplitudes = [1.0] * len(freqs_hz)
    n = np.arange(int(round(duration_s * sample_rate_hz)))
    x = np.zeros(n.size)
    for f, a in zip(freqs_hz, amplitudes):
        if f >= sample_rate_hz / 2:
            raise AliasedFrequency(f"{f} Hz is at or above Nyquist")
        x += a * np.sin(2 * np.pi * f * n / sample_rate_hz)
    peak = np.max(np.abs(x)) if x.size else 0.0
    if peak > 0:
        x *= 0.9 / peak
    return AudioBuffer(x, sample_rate_hz)


def concatenate(buffers) -> AudioBuffer:
    buffers = list(buffers)
    rates = {b.sample_rate_hz for b in buffers}
    if len(rates) != 1:
        raise ValueError("cannot concatenate buffers with different sample rates")
    return AudioBuffer(np.concatenate([b.samples for b in buffers]), rates.pop())

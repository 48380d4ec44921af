"""Sub-band energy-difference fingerprints.

Each analysis frame yields one 32-bit word. Bit ``m`` (stored at bit
position ``31 - m``, most significant first) is set when the energy
difference between bands ``m`` and ``m + 1`` grew relative to the previous
frame.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import AudioTooShort, LengthMismatch, MalformedContainer, UnsupportedFormat
from .signal_io import AudioBuffer
from .spectral import StftParams, Window, bin_frequencies, stft


@dataclass(frozen=True)
class FingerprintConfig:
    block_size: int = 2048
    hop_size: int = 64
    window: Window = Window.HANN
    f_low_hz: float = 300.0
    f_high_hz: float = 2000.0
    num_bands: int = 33

    @property
    def num_bits(self) -> int:
        return self.num_bands - 1


CONFIG = FingerprintConfig()
FILE_MAGIC = b"ACAF"
FILE_VERSION = 1
_HEADER = struct.Struct("<4sId")


@dataclass(frozen=True)
class Fingerprint:
    words: np.ndarray  # uint32, one per frame
    frame_rate_hz: float

    def __len__(self):
        return self.words.size


def band_edges(config: FingerprintConfig = CONFIG) -> np.ndarray:
    m = np.arange(config.num_bands + 1)
    return config.f_low_hz * (config.f_high_hz / config.f_low_hz) ** (m / config.num_bands)


@lru_cache(maxsize=8)
def _band_matrix(params: StftParams, config: FingerprintConfig) -> np.ndarray:
    edges = band_edges(config)
    freqs = bin_frequencies(params)
    bands = np.zeros((config.num_bands, freqs.size))
    for m in range(config.num_bands):
        bands[m] = (freqs >= edges[m]) & (freqs < edges[m + 1])
    bands.setflags(write=False)
    return bands


def band_energies(audio: AudioBuffer, config: FingerprintConfig = CONFIG) -> np.ndarray:
    """(num_bands, frames) sums of |X|^2 over the bins of each band."""
    params = StftParams(config.block_size, config.hop_size, config.window, audio.sample_rate_hz)
    spec = stft(audio, params)
    return _band_matrix(params, config) @ (spec.magnitudes ** 2)


def pack_bits(bits) -> np.ndarray:
    """Pack a (frames, 32) boolean array into uint32 words, bit 0 as the MSB."""
    bits = np.asarray(bits, dtype=np.uint64)
    weights = np.left_shift(np.uint64(1), np.arange(bits.shape[1] - 1, -1, -1, dtype=np.uint64))
    return (bits * weights).sum(axis=1).astype(np.uint32)


def extract_fingerprint(audio: AudioBuffer, config: FingerprintConfig = CONFIG) -> Fingerprint:
    if len(audio) < config.block_size:
        raise AudioTooShort(
            f"fingerprinting needs at least {config.block_size} samples, got {len(audio)}")
    energy = band_energies(audio, config)
    band_diff = energy[:-1] - energy[1:]
    previous = np.concatenate((np.zeros((band_diff.shape[0], 1)), band_diff[:, :-1]), axis=1)
    bits = (band_diff - previous) > 0
    return Fingerprint(pack_bits(bits.T), audio.sample_rate_hz / config.hop_size)


def fingerprint_distance(a: Fingerprint, b: Fingerprint) -> float:
    """Fraction of differing bits (bit error rate)."""
    if len(a) != len(b):
        raise LengthMismatch(f"fingerprints differ in length: {len(a)} vs {len(b)}")
    if len(a) == 0:
        return 0.0
    diff = np.bitwise_xor(a.words.astype(np.uint32), b.words.astype(np.uint32))
    ones = np.unpackbits(diff.view(np.uint8)).sum()
    return float(ones / (32 * len(a)))


def encode_fingerprint(fp: Fingerprint) -> bytes:
    header = _HEADER.pack(FILE_MAGIC, FILE_VERSION, float(fp.frame_rate_hz))
    return header + np.asarray(fp.words, dtype="<u4").tobytes()


def decode_fingerprint(data: bytes) -> Fingerprint:
    if len(data) < _HEADER.size or data[:4] != FILE_MAGIC:
        raise MalformedContainer("not a fingerprint file (missing ACAF header)")
    _, version, rate = _HEADER.unpack_from(data)
    if version != FILE_VERSION:
        raise UnsupportedFormat(f"fingerprint file version {version} is not supported")
    body = data[_HEADER.size:]
    if len(body) % 4:
        raise MalformedContainer("fingerprint payload is not a whole number of words")
    return Fingerprint(np.frombuffer(body, dtype="<u4").astype(np.uint32), rate)


def write_fingerprint(path, fp: Fingerprint) -> None:
    Path(path).write_bytes(encode_fingerprint(fp))


def read_fingerprint(path) -> Fingerprint:
    return decode_fingerprint(Path(path).read_bytes())

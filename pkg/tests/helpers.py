"""Synthetic test material shared by several test modules."""
import numpy as np

from aca.features import FeatureId, extract
from aca.signal_io import concatenate, synth_tones
from aca.spectral import StftParams, midi_to_hz

FS = 44100
PARAMS = StftParams(4096, 2048, sample_rate_hz=FS)

# 16-bit mono PCM at 8 kHz holding the two samples 0x4000 and 0xC000
HAND_BUILT_WAV = (
    b"RIFF" + (36 + 4).to_bytes(4, "little") + b"WAVE"
    + b"fmt " + (16).to_bytes(4, "little")
    + (1).to_bytes(2, "little")          # PCM
    + (1).to_bytes(2, "little")          # channels
    + (8000).to_bytes(4, "little")       # sample rate
    + (16000).to_bytes(4, "little")      # byte rate
    + (2).to_bytes(2, "little")          # block align
    + (16).to_bytes(2, "little")         # bits per sample
    + b"data" + (4).to_bytes(4, "little")
    + b"\x00\x40" + b"\x00\xc0"
)


def triad_midi(root, minor=False, base=60):
    third = 3 if minor else 4
    return [base + root, base + root + third, base + root + 7]


def tones_audio(midi_notes, duration=2.0):
    return synth_tones([midi_to_hz(m) for m in midi_notes], duration, FS)


def chroma_of(audio, params=PARAMS):
    return extract(audio, FeatureId.PITCH_CHROMA, params)


def interior_frames(num_samples, params=PARAMS):
    """Frame indices whose block lies fully inside the signal (no zero padding)."""
    n = np.arange(-(-num_samples // params.hop_size))
    return n[n * params.hop_size + params.block_size <= num_samples]


def scale_audio(midi_notes, note_s=0.5):
    return concatenate([tones_audio([m], note_s) for m in midi_notes])

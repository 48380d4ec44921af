"""Reference implementations of audio content analysis algorithms."""
from .signal_io import AudioBuffer, read_wav, synth_click_train, synth_sine, write_wav
from .spectral import Spectrogram, StftParams, Window, stft

__version__ = "0.1.0"

__all__ = ["AudioBuffer", "Spectrogram", "StftParams", "Window", "read_wav", "stft",
           "synth_click_train", "synth_sine", "write_wav"]

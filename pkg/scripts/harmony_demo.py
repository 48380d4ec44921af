"""Chord accuracy on all 24 synthesized triads and key detection on scales."""
import argparse

import numpy as np

from aca.features import FeatureId, extract
from aca.harmony import CHORD_VOCABULARY, detect_chords, detect_key
from aca.signal_io import concatenate, synth_tones
from aca.spectral import StftParams, midi_to_hz

FS = 44100

SCALES = {
    "C major": [60, 62, 64, 65, 67, 69, 71],
    "A natural minor": [57, 59, 60, 62, 64, 65, 67, 69],
    "G major": [55, 57, 59, 60, 62, 64, 66, 67],
    "E natural minor": [52, 54, 55, 57, 59, 60, 62, 64],
}


def chroma(audio, params):
    return extract(audio, FeatureId.PITCH_CHROMA, params)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--smoothing", default="None", choices=["None", "Viterbi"])
    p.add_argument("--duration", type=float, default=2.0)
    args = p.parse_args(argv)
    params = StftParams(sample_rate_hz=FS)
    smoothing = None if args.smoothing == "None" else args.smoothing
    total = correct = 0
    for label in CHORD_VOCABULARY:
        third = 4 if label.quality.short == "maj" else 3
        notes = [60 + label.root, 60 + label.root + third, 60 + label.root + 7]
        audio = synth_tones([midi_to_hz(m) for m in notes], args.duration, FS)
        labels = detect_chords(chroma(audio, params), smoothing)
        # only frames whose block lies fully inside the clip
        n = np.arange(len(labels))
        inside = n[n * params.hop_size + params.block_size <= len(audio)]
        hits = sum(labels[i] == label for i in inside)
        total += inside.size
        correct += hits
        print(f"{str(label):>7}: {hits}/{inside.size} frames")
    print(f"chord frame accuracy {correct / total:.3f}")
    for name, notes in SCALES.items():
        audio = concatenate([synth_tones([midi_to_hz(m)], 0.5, FS) for m in notes])
        print(f"{name:>16} -> {detect_key(chroma(audio, params))}")


if __name__ == "__main__":
    main()

"""Onset counts and tempo on click trains for a few STFT configurations.

Shows why short rectangular blocks are preferable for click material: a Hann
taper hides the click at t = 0 and long hops coarsen the tempo lag grid.
When the click period is not close to a whole number of novelty frames, the
single nearest-lag autocorrelation sample can lose to the doubled lag, and the
tempo estimate halves (the 0.4 s and 0.75 s rows show this).
"""
import argparse

import numpy as np

from aca.onset import beat_histogram, detect_onsets, estimate_tempo, novelty_flux
from aca.signal_io import synth_click_train
from aca.spectral import StftParams, Window, stft

CONFIGS = [
    StftParams(1024, 512, Window.RECTANGULAR),
    StftParams(1024, 512, Window.HANN),
    StftParams(4096, 2048, Window.HANN),
    StftParams(4096, 2048, Window.RECTANGULAR),
]


def evaluate(period_s, duration_s, params):
    audio = synth_click_train(period_s, duration_s, params.sample_rate_hz)
    truth = np.arange(int(np.ceil(duration_s / period_s))) * period_s
    onsets = detect_onsets(audio, params).times_s
    tempo = estimate_tempo(beat_histogram(novelty_flux(stft(audio, params))))
    # error of each true click against its nearest detection
    err = max((np.min(np.abs(onsets - t)) for t in truth), default=np.inf) if onsets.size else np.inf
    return truth.size, onsets.size, err, tempo


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--periods", type=float, nargs="+", default=[0.5, 0.4, 0.75])
    p.add_argument("--duration", type=float, default=10.0)
    args = p.parse_args(argv)
    print(f"{'period':>6} {'block':>5} {'hop':>5} {'window':>11} {'clicks':>6} {'found':>5} "
          f"{'max err ms':>10} {'tempo':>6} {'true':>6}")
    for period in args.periods:
        for params in CONFIGS:
            n, found, err, tempo = evaluate(period, args.duration, params)
            print(f"{period:6.2f} {params.block_size:5d} {params.hop_size:5d} {params.window.value:>11} "
                  f"{n:6d} {found:5d} {1000 * err:10.1f} {tempo:6.1f} {60 / period:6.1f}")


if __name__ == "__main__":
    main()

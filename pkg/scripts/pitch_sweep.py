"""Median f0 error of every estimator over a sweep of synthetic tones.

Pure sines go to the time-domain estimators; four-harmonic tones go to all
five, since the spectral methods need harmonics to latch onto.

    python3 scripts/pitch_sweep.py --f-min 80 --f-max 1000 --steps 12
"""
import argparse
from dataclasses import dataclass

import numpy as np

from aca.pitch import PitchMethod, track_pitch
from aca.signal_io import synth_sine, synth_tones
from aca.spectral import StftParams


@dataclass(frozen=True)
class SweepConfig:
    f_min: float = 80.0
    f_max: float = 1000.0
    steps: int = 12
    duration_s: float = 1.0
    sample_rate_hz: int = 44100
    harmonics: int = 4


def run(cfg: SweepConfig):
    params = StftParams(sample_rate_hz=cfg.sample_rate_hz)
    freqs = np.geomspace(cfg.f_min, cfg.f_max, cfg.steps)
    rows = []
    for f in freqs:
        sine = synth_sine(f, cfg.duration_s, cfg.sample_rate_hz)
        complex_tone = synth_tones([h * f for h in range(1, cfg.harmonics + 1)],
                                   cfg.duration_s, cfg.sample_rate_hz)
        for method in PitchMethod:
            for name, audio in (("sine", sine), ("harmonic", complex_tone)):
                if name == "sine" and not method.is_time_domain:
                    continue
                est = np.median(track_pitch(audio, params, method).f0_hz)
                rows.append((f, method.value, name, est, 100 * (est - f) / f))
    return rows


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--f-min", type=float, default=SweepConfig.f_min)
    p.add_argument("--f-max", type=float, default=SweepConfig.f_max)
    p.add_argument("--steps", type=int, default=SweepConfig.steps)
    args = p.parse_args(argv)
    cfg = SweepConfig(args.f_min, args.f_max, args.steps)
    print(f"{'f0':>9} {'method':>17} {'signal':>9} {'estimate':>9} {'err %':>7}")
    for f, method, signal, est, err in run(cfg):
        print(f"{f:9.2f} {method:>17} {signal:>9} {est:9.2f} {err:7.2f}")


if __name__ == "__main__":
    main()

"""Command-line front end.

Frame series are written as CSV, symbolic results and models as JSON, and
fingerprints in their binary format. Exit status is 0 on success, 1 for
usage errors and 2 for data errors; diagnostics go to stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import features, fingerprint, harmony, ml, onset, pitch, sequence
from .errors import AcaError
from .signal_io import read_wav
from .spectral import DEFAULT_BLOCK_SIZE, DEFAULT_HOP_SIZE, StftParams, Window, stft

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

COMMANDS = ("feature", "pitch", "onset", "tempo", "chord", "key", "fingerprint", "align",
            "kmeans", "gmm", "pca", "nmf", "knn")
AUDIO_COMMANDS = COMMANDS[:8]


class UsageError(Exception):
    pass


class StageError(Exception):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage


@dataclass
class RunConfig:
    command: str
    inputs: list
    output: str | None = None
    block_size: int = DEFAULT_BLOCK_SIZE
    hop_size: int = DEFAULT_HOP_SIZE
    window: str = Window.HANN.value
    options: dict = field(default_factory=dict)

    def stft_params(self, sample_rate_hz: int = 44100) -> StftParams:
        return StftParams(self.block_size, self.hop_size, Window(self.window), sample_rate_hz)

    def validate(self) -> None:
        """Reject bad parameter combinations before any input is read."""
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        expected = 2 if self.command == "align" else 1
        if len(self.inputs) != expected:
            raise UsageError(f"{self.command} expects {expected} input file(s)")
        try:
            self.stft_params()
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        opts = self.options
        if self.command == "feature":
            try:
                features.FeatureId(opts.get("feature_id"))
            except ValueError:
                raise UsageError(f"unknown feature id {opts.get('feature_id')!r}; choose from "
                                 + ", ".join(f.value for f in features.FeatureId)) from None
            if not 0 < opts.get("kappa", 0.85) <= 1:
                raise UsageError("--kappa must lie in (0, 1]")
        if self.command == "pitch":
            try:
                pitch.PitchMethod(opts.get("method"))
            except ValueError:
                raise UsageError(f"unknown pitch method {opts.get('method')!r}") from None
            if not 0 < opts.get("f_min", 1) < opts.get("f_max", 2):
                raise UsageError("need 0 < --f-min < --f-max")
        if self.command == "chord" and opts.get("smoothing") not in ("None", "Viterbi"):
            raise UsageError("--smoothing must be None or Viterbi")
        if self.command == "fingerprint" and not self.output:
            raise UsageError("fingerprint needs an output file (-o)")
        for key in ("k", "rank", "max_iter"):
            if key in opts and opts[key] < 1:
                raise UsageError(f"--{key.replace('_', '-')} must be positive")
        if self.command == "knn" and not opts.get("train"):
            raise UsageError("knn needs --train")

    def metadata(self) -> dict:
        meta = {}
        if self.command in AUDIO_COMMANDS:
            meta = {"block_size": self.block_size, "hop_size": self.hop_size, "window": self.window}
        meta.update({k: v for k, v in sorted(self.options.items())})
        return meta


# -- serialization -----------------------------------------------------------

def _fmt(value) -> str:
    return f"{float(value):.9g}"


def feature_csv_text(series: features.FeatureSeries) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["time_s"] + [f"dim_{d}" for d in range(series.values.shape[0])])
    for n, t in enumerate(series.frame_times_s):
        writer.writerow([_fmt(t)] + [_fmt(v) for v in series.values[:, n]])
    return buf.getvalue()


def _emit(text_or_bytes, destination) -> None:
    """Write to a path atomically, or to a stream (stdout when None)."""
    if destination is None or hasattr(destination, "write"):
        stream = destination or sys.stdout
        if isinstance(text_or_bytes, bytes):
            getattr(stream, "buffer", stream).write(text_or_bytes)
        else:
            stream.write(text_or_bytes)
        return
    path = Path(destination)
    tmp = path.with_name(path.name + ".part")
    try:
        if isinstance(text_or_bytes, bytes):
            tmp.write_bytes(text_or_bytes)
        else:
            with open(tmp, "w", newline="") as fh:
                fh.write(text_or_bytes)
        os.replace(tmp, path)
    finally:
        tmp.unlink(missing_ok=True)


def serialize_feature_csv(series: features.FeatureSeries, destination=None) -> None:
    _emit(feature_csv_text(series), destination)


def labels_document(command: str, sample_rate: int | None, results: list, **extra) -> dict:
    doc = {"command": command, "sample_rate": sample_rate}
    doc.update(extra)
    doc["results"] = results
    return doc


def serialize_labels_json(document: dict, destination=None) -> None:
    _emit(json.dumps(document, indent=2) + "\n", destination)


def read_table(path) -> tuple[np.ndarray, np.ndarray | None]:
    """Load a feature CSV as (dims x rows) plus an optional ``label`` column.

    A ``time_s`` column is ignored.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    data_cols = [i for i, h in enumerate(header) if h not in ("time_s", "label")]
    label_col = header.index("label") if "label" in header else None
    body = [r for r in rows[1:] if r]
    if not body or not data_cols:
        raise ValueError(f"{path} has no data")
    values = np.array([[float(r[i]) for i in data_cols] for r in body]).T
    labels = None
    if label_col is not None:
        labels = np.array([int(r[label_col]) for r in body])
    return values, labels


# -- commands ----------------------------------------------------------------

def _stage(stage, func, *args, **kwargs):
    try:
        return func(*args, **kwargs)
    except (AcaError, ValueError, OSError) as exc:
        raise StageError(stage, exc) from exc


def _load(config: RunConfig, index: int = 0):
    audio = _stage("read", read_wav, config.inputs[index])
    return audio, config.stft_params(audio.sample_rate_hz)


def _run_feature(config):
    audio, params = _load(config)
    opts = {}
    fid = features.FeatureId(config.options["feature_id"])
    if fid is features.FeatureId.SPECTRAL_ROLLOFF:
        opts["kappa"] = config.options.get("kappa", 0.85)
    series = _stage("feature", features.extract, audio, fid, params, **opts)
    return feature_csv_text(series)


def _json(config, sample_rate, results, **extra):
    doc = labels_document(config.command, sample_rate, results, params=config.metadata(), **extra)
    return json.dumps(doc, indent=2) + "\n"


def _run_pitch(config):
    audio, params = _load(config)
    o = config.options
    track = _stage("pitch", pitch.track_pitch, audio, params, o["method"], o["f_min"], o["f_max"])
    results = [{"time_s": float(t), "f0_hz": float(f)}
               for t, f in zip(track.frame_times_s, track.f0_hz)]
    return _json(config, audio.sample_rate_hz, results)


def _run_onset(config):
    audio, params = _load(config)
    o = config.options
    nov = _stage("novelty", lambda: onset.novelty_flux(stft(audio, params)))
    onsets = _stage("onset", onset.pick_onsets, nov, o["smooth_s"], o["threshold_offset"],
                    o["min_separation_s"])
    return _json(config, audio.sample_rate_hz, [{"time_s": float(t)} for t in onsets.times_s])


def _run_tempo(config):
    audio, params = _load(config)
    nov = _stage("novelty", lambda: onset.novelty_flux(stft(audio, params)))
    hist = _stage("tempo", onset.beat_histogram, nov)
    results = [{"bpm": float(b), "strength": float(s)} for b, s in zip(hist.bpm_axis, hist.strength)]
    return _json(config, audio.sample_rate_hz, results, tempo_bpm=onset.estimate_tempo(hist))


def _chroma(audio, params):
    return _stage("chroma", features.extract, audio, features.FeatureId.PITCH_CHROMA, params)


def _run_chord(config):
    audio, params = _load(config)
    chroma = _chroma(audio, params)
    smoothing = config.options["smoothing"]
    labels = _stage("chord", harmony.detect_chords, chroma,
                    None if smoothing == "None" else smoothing)
    results = [{"time_s": float(t), "label": str(lab)}
               for t, lab in zip(chroma.frame_times_s, labels)]
    return _json(config, audio.sample_rate_hz, results)


def _run_key(config):
    audio, params = _load(config)
    key = _stage("key", harmony.detect_key, _chroma(audio, params))
    return _json(config, audio.sample_rate_hz, [{"label": str(key)}])


def _run_fingerprint(config):
    audio, _ = _load(config)
    fp = _stage("fingerprint", fingerprint.extract_fingerprint, audio)
    return fingerprint.encode_fingerprint(fp)


def _run_align(config):
    fid = features.FeatureId(config.options["align_feature"])
    seqs = []
    rate = None
    for i in range(2):
        audio, params = _load(config, i)
        rate = audio.sample_rate_hz
        seqs.append(_stage("feature", features.extract, audio, fid, params).values)
    C = _stage("cost", sequence.cost_matrix, seqs[0], seqs[1], config.options["metric"])
    path = _stage("align", sequence.dtw, C)
    results = [{"i": i, "j": j} for i, j in path.pairs]
    return _json(config, rate, results, total_cost=path.total_cost)


def _load_dataset(path, with_labels=False):
    values, labels = _stage("read", read_table, path)
    if with_labels and labels is None:
        raise StageError("read", ValueError(f"{path} has no label column"))
    return ml.Dataset(values, labels if with_labels else None)


def _run_kmeans(config):
    o = config.options
    data = _load_dataset(config.inputs[0])
    res = _stage("kmeans", ml.kmeans, data, o["k"], o["max_iter"], o["seed"])
    return _json(config, None, [int(a) for a in res.assignments],
                 centroids=res.centroids.T.tolist(), inertia_history=res.inertia_history)


def _run_gmm(config):
    o = config.options
    data = _load_dataset(config.inputs[0])
    model = _stage("gmm", ml.gmm_fit, data, o["k"], o["max_iter"], o["tol"], o["seed"])
    results = [{"weight": float(model.weights[j]), "mean": model.means[:, j].tolist(),
                "variance": model.variances[:, j].tolist()} for j in range(model.num_components)]
    return _json(config, None, results, log_likelihood_history=model.log_likelihood_history)


def _run_pca(config):
    data = _load_dataset(config.inputs[0])
    res = _stage("pca", ml.pca, data)
    results = [{"eigenvalue": float(res.eigenvalues[j]), "component": res.components[:, j].tolist()}
               for j in range(res.eigenvalues.size)]
    return _json(config, None, results, mean=res.mean.tolist())


def _run_nmf(config):
    o = config.options
    V, _ = _stage("read", read_table, config.inputs[0])
    res = _stage("nmf", ml.nmf, V, o["rank"], o["max_iter"], o["tol"], o["seed"])
    return _json(config, None, [], W=res.W.tolist(), H=res.H.tolist(),
                 divergence_history=res.divergence_history)


def _run_knn(config):
    o = config.options
    train = _load_dataset(o["train"], with_labels=True)
    query, _ = _stage("read", read_table, config.inputs[0])
    predicted = [_stage("knn", ml.knn_classify, train, query[:, n], o["k"])
                 for n in range(query.shape[1])]
    return _json(config, None, [int(p) for p in predicted])


HANDLERS = {
    "feature": _run_feature, "pitch": _run_pitch, "onset": _run_onset, "tempo": _run_tempo,
    "chord": _run_chord, "key": _run_key, "fingerprint": _run_fingerprint, "align": _run_align,
    "kmeans": _run_kmeans, "gmm": _run_gmm, "pca": _run_pca, "nmf": _run_nmf, "knn": _run_knn,
}


def run(config: RunConfig, stdout=None, stderr=None) -> int:
    stderr = stderr or sys.stderr
    try:
        config.validate()
    except UsageError as exc:
        print(f"aca {config.command}: {exc}", file=stderr)
        return EXIT_USAGE
    try:
        payload = HANDLERS[config.command](config)
        _emit(payload, config.output if config.output else stdout)
    except StageError as exc:
        print(f"aca {config.command}: {exc}", file=stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"aca {config.command}: write: {exc}", file=stderr)
        return EXIT_DATA
    return EXIT_OK


# -- argument parsing --------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="aca", description="Audio content analysis toolkit", formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def audio_cmd(name, help_text, n_inputs=1):
        p = sub.add_parser(name, help=help_text, formatter_class=fmt)
        p.add_argument("inputs", nargs=n_inputs, metavar="WAV")
        p.add_argument("-o", "--output", help="output file (default: stdout)")
        p.add_argument("--block-size", type=int, default=DEFAULT_BLOCK_SIZE,
                       help="STFT block length in samples (power of two)")
        p.add_argument("--hop-size", type=int, default=DEFAULT_HOP_SIZE, help="STFT hop in samples")
        p.add_argument("--window", default=Window.HANN.value, help="Hann, Hamming or Rectangular")
        return p

    def table_cmd(name, help_text):
        p = sub.add_parser(name, help=help_text, formatter_class=fmt)
        p.add_argument("inputs", nargs=1, metavar="CSV")
        p.add_argument("-o", "--output", help="output file (default: stdout)")
        return p

    p = audio_cmd("feature", "per-frame feature extraction (CSV)")
    p.add_argument("--id", dest="feature_id", required=True,
                   help="one of " + ", ".join(f.value for f in features.FeatureId))
    p.add_argument("--kappa", type=float, default=0.85, help="rolloff fraction")

    p = audio_cmd("pitch", "fundamental frequency track (JSON)")
    p.add_argument("--method", default=pitch.PitchMethod.TIME_ACF.value,
                   help="one of " + ", ".join(m.value for m in pitch.PitchMethod))
    p.add_argument("--f-min", type=float, default=pitch.DEFAULT_F_MIN, help="lowest f0 in Hz")
    p.add_argument("--f-max", type=float, default=pitch.DEFAULT_F_MAX, help="highest f0 in Hz")

    p = audio_cmd("onset", "onset times (JSON)")
    p.add_argument("--smooth", dest="smooth_s", type=float, default=0.07,
                   help="moving-average threshold length in seconds")
    p.add_argument("--threshold-offset", type=float, default=0.1,
                   help="added to the moving average of the normalized novelty")
    p.add_argument("--min-separation", dest="min_separation_s", type=float, default=0.03,
                   help="minimum gap between onsets in seconds")

    audio_cmd("tempo", "beat histogram and tempo (JSON)")
    p = audio_cmd("chord", "per-frame chord labels (JSON)")
    p.add_argument("--smoothing", default="None", help="None or Viterbi")
    audio_cmd("key", "global key (JSON)")
    audio_cmd("fingerprint", "binary audio fingerprint")
    p = audio_cmd("align", "DTW alignment of two files (JSON)", n_inputs=2)
    p.add_argument("--feature", dest="align_feature", default=features.FeatureId.PITCH_CHROMA.value,
                   choices=[f.value for f in features.FeatureId], help="feature to align on")
    p.add_argument("--metric", default="CosineDistance", choices=["Euclidean", "CosineDistance"],
                   help="column distance")

    for name, help_text in (("kmeans", "k-means clustering of a feature table"),
                            ("gmm", "diagonal GMM fit of a feature table")):
        p = table_cmd(name, help_text)
        p.add_argument("--k", type=int, default=2, help="number of clusters/components")
        p.add_argument("--max-iter", type=int, default=100, help="iteration limit")
        p.add_argument("--seed", type=int, default=0, help="initialization seed")
        if name == "gmm":
            p.add_argument("--tol", type=float, default=1e-6, help="log-likelihood improvement to stop at")
    table_cmd("pca", "principal component analysis of a feature table")
    p = table_cmd("nmf", "non-negative factorization of a table (columns = observations)")
    p.add_argument("--rank", type=int, default=2, help="number of components")
    p.add_argument("--max-iter", type=int, default=200, help="iteration limit")
    p.add_argument("--tol", type=float, default=1e-4, help="relative divergence improvement to stop at")
    p.add_argument("--seed", type=int, default=0, help="initialization seed")
    p = table_cmd("knn", "classify the rows of a feature table")
    p.add_argument("--train", required=True, help="CSV with a label column")
    p.add_argument("--k", type=int, default=1, help="number of neighbours")
    return parser


_COMMON = ("command", "inputs", "output", "block_size", "hop_size", "window")


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = vars(args)
    options = {k: v for k, v in values.items() if k not in _COMMON}
    kwargs = {k: values[k] for k in ("block_size", "hop_size", "window") if k in values}
    return RunConfig(values["command"], list(values["inputs"]), values.get("output"),
                     options=options, **kwargs)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run(config_from_args(args))


if __name__ == "__main__":
    sys.exit(main())

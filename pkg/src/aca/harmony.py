"""Chord detection by chroma template matching and key detection by profile correlation."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .errors import DimensionMismatch, EmptyInput
from .features import FeatureSeries
from .sequence import Hmm, viterbi

PITCH_CLASS_NAMES = ("C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B")

# Krumhansl-Kessler probe-tone profiles, tonic first
KRUMHANSL_MAJOR = np.array([6.35, 2.23, 3.48, 2.33, 4.38, 4.09, 2.52, 5.19, 2.39, 3.66, 2.29, 2.88])
KRUMHANSL_MINOR = np.array([6.33, 2.68, 3.52, 5.38, 2.60, 3.53, 2.54, 4.75, 3.98, 2.69, 3.34, 3.17])

CHORD_STAY_PROBABILITY = 0.8


class Mode(str, Enum):
    MAJOR = "Major"
    MINOR = "Minor"

    @property
    def short(self) -> str:
        return "maj" if self is Mode.MAJOR else "min"


@dataclass(frozen=True, order=True)
class ChordLabel:
    root: int
    quality: Mode

    def __str__(self):
        return f"{PITCH_CLASS_NAMES[self.root]}:{self.quality.short}"


@dataclass(frozen=True, order=True)
class KeyLabel:
    tonic: int
    mode: Mode

    def __str__(self):
        return f"{PITCH_CLASS_NAMES[self.tonic]}:{self.mode.short}"


# label index i: root i // 2, Major for even i; this order is also the tie-break order
CHORD_VOCABULARY = tuple(ChordLabel(r, q) for r in range(12) for q in (Mode.MAJOR, Mode.MINOR))


@dataclass(frozen=True)
class ChordTemplateBank:
    templates: np.ndarray  # (24, 12), row order = CHORD_VOCABULARY

    def template(self, root: int, quality: Mode) -> np.ndarray:
        return self.templates[2 * root + (0 if Mode(quality) is Mode.MAJOR else 1)]


@lru_cache(maxsize=1)
def build_chord_templates() -> ChordTemplateBank:
    rows = []
    for label in CHORD_VOCABULARY:
        third = 4 if label.quality is Mode.MAJOR else 3
        t = np.zeros(12)
        t[[label.root, (label.root + third) % 12, (label.root + 7) % 12]] = 1.0
        rows.append(t / np.linalg.norm(t))
    templates = np.array(rows)
    templates.setflags(write=False)
    return ChordTemplateBank(templates)


def _check_chroma(chroma) -> np.ndarray:
    values = chroma.values if isinstance(chroma, FeatureSeries) else np.asarray(chroma)
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, None]
    if values.shape[0] != 12:
        raise DimensionMismatch(f"chroma must have 12 rows, got {values.shape[0]}")
    return values


def chord_scores(chroma) -> np.ndarray:
    """(24, frames) inner products of L2-normalized chroma with every template."""
    values = _check_chroma(chroma)
    norms = np.linalg.norm(values, axis=0)
    unit = np.divide(values, norms, out=np.zeros_like(values), where=norms > 0)
    return build_chord_templates().templates @ unit


def chord_transition_matrix(stay: float = CHORD_STAY_PROBABILITY) -> np.ndarray:
    n = len(CHORD_VOCABULARY)
    trans = np.full((n, n), (1.0 - stay) / (n - 1))
    np.fill_diagonal(trans, stay)
    return trans


def detect_chords(chroma, smoothing: str | None = None) -> list[ChordLabel]:
    """Chord label per frame; ``smoothing`` is None or "Viterbi"."""
    scores = chord_scores(chroma)
    if scores.shape[1] == 0:
        return []
    if smoothing in (None, "None"):
        # argmax returns the first maximum, i.e. lowest root, Major before Minor
        return [CHORD_VOCABULARY[i] for i in np.argmax(scores, axis=0)]
    if smoothing != "Viterbi":
        raise ValueError(f"unknown smoothing {smoothing!r}")
    totals = scores.sum(axis=0)
    n = len(CHORD_VOCABULARY)
    emissions = np.divide(scores, totals, out=np.full_like(scores, 1.0 / n), where=totals > 0)
    hmm = Hmm(np.full(n, 1.0 / n), chord_transition_matrix(), emissions)
    return [CHORD_VOCABULARY[i] for i in viterbi(hmm).states]


def key_profiles() -> np.ndarray:
    """(24, 12) profiles, row 2*t for t Major and 2*t+1 for t Minor."""
    rows = []
    for tonic in range(12):
        rows.append(np.roll(KRUMHANSL_MAJOR, tonic))
        rows.append(np.roll(KRUMHANSL_MINOR, tonic))
    return np.array(rows)


def _pearson(x, y) -> float:
    xc, yc = x - x.mean(), y - y.mean()
    denom = np.sqrt(np.sum(xc ** 2) * np.sum(yc ** 2))
    return float(np.sum(xc * yc) / denom) if denom > 0 else 0.0


def key_scores(chroma) -> np.ndarray:
    values = _check_chroma(chroma)
    if values.shape[1] == 0:
        raise EmptyInput("key detection needs at least one chroma frame")
    mean = values.mean(axis=1)
    total = mean.sum()
    if total > 0:
        mean = mean / total
    return np.array([_pearson(mean, p) for p in key_profiles()])


def detect_key(chroma) -> KeyLabel:
    idx = int(np.argmax(key_scores(chroma)))
    return KeyLabel(idx // 2, Mode.MAJOR if idx % 2 == 0 else Mode.MINOR)

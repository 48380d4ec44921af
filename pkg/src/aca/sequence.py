"""Dynamic time warping and Viterbi decoding."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AllPathsImpossible, DimensionMismatch, EmptyMatrix, NegativeCost

# backtracking preference: diagonal, then vertical (i-1), then horizontal (j-1)
_STEPS = ((-1, -1), (-1, 0), (0, -1))


@dataclass(frozen=True)
class AlignmentPath:
    pairs: list[tuple[int, int]]
    total_cost: float


@dataclass(frozen=True)
class Hmm:
    initial: np.ndarray      # (S,)
    transitions: np.ndarray  # (S, S), row-stochastic
    emissions: np.ndarray    # (S, T) per-step state likelihoods

    def __post_init__(self):
        init = np.asarray(self.initial, dtype=np.float64)
        trans = np.asarray(self.transitions, dtype=np.float64)
        emis = np.asarray(self.emissions, dtype=np.float64)
        S = init.size
        if trans.shape != (S, S) or emis.ndim != 2 or emis.shape[0] != S:
            raise DimensionMismatch(
                f"inconsistent HMM shapes: initial {init.shape}, transitions {trans.shape}, "
                f"emissions {emis.shape}")
        if S < 1 or emis.shape[1] < 1:
            raise EmptyMatrix("an HMM needs at least one state and one step")
        if np.any(init < 0) or np.any(trans < 0) or np.any(emis < 0):
            raise ValueError("HMM probabilities must be non-negative")
        if abs(init.sum() - 1) > 1e-9 or np.any(np.abs(trans.sum(axis=1) - 1) > 1e-9):
            raise ValueError("initial distribution and transition rows must sum to 1")
        object.__setattr__(self, "initial", init)
        object.__setattr__(self, "transitions", trans)
        object.__setattr__(self, "emissions", emis)

    @property
    def num_states(self) -> int:
        return self.initial.size

    @property
    def num_steps(self) -> int:
        return self.emissions.shape[1]


@dataclass(frozen=True)
class StatePath:
    states: np.ndarray
    log_prob: float


def cost_matrix(A, B, metric: str = "Euclidean") -> np.ndarray:
    """Pairwise distances between the columns of A (dims x I) and B (dims x J)."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    if A.shape[0] != B.shape[0]:
        raise DimensionMismatch(f"column dimensions differ: {A.shape[0]} vs {B.shape[0]}")
    if metric == "Euclidean":
        diff = A[:, :, None] - B[:, None, :]
        return np.sqrt(np.sum(diff ** 2, axis=0))
    if metric == "CosineDistance":
        norm_a = np.linalg.norm(A, axis=0)
        norm_b = np.linalg.norm(B, axis=0)
        zero_a, zero_b = norm_a == 0, norm_b == 0
        unit_a = np.divide(A, norm_a, out=np.zeros_like(A), where=~zero_a)
        unit_b = np.divide(B, norm_b, out=np.zeros_like(B), where=~zero_b)
        # 1 - cos(a, b) written as half the squared distance of unit vectors,
        # which is exactly 0 for identical columns
        diff = unit_a[:, :, None] - unit_b[:, None, :]
        C = np.clip(0.5 * np.sum(diff ** 2, axis=0), 0.0, 2.0)
        C[zero_a, :] = 1.0
        C[:, zero_b] = 1.0
        C[np.ix_(zero_a, zero_b)] = 0.0
        return C
    raise ValueError(f"unknown metric {metric!r} (expected Euclidean or CosineDistance)")


def accumulated_cost(C) -> np.ndarray:
    C = np.asarray(C, dtype=np.float64)
    I, J = C.shape
    D = np.empty((I, J))
    D[0, 0] = C[0, 0]
    D[1:, 0] = C[0, 0] + np.cumsum(C[1:, 0])
    D[0, 1:] = C[0, 0] + np.cumsum(C[0, 1:])
    for i in range(1, I):
        for j in range(1, J):
            D[i, j] = C[i, j] + min(D[i - 1, j - 1], D[i - 1, j], D[i, j - 1])
    return D


def dtw(C) -> AlignmentPath:
    C = np.asarray(C, dtype=np.float64)
    if C.ndim != 2 or C.size == 0:
        raise EmptyMatrix("DTW needs a non-empty 2-D cost matrix")
    if not np.all(np.isfinite(C)):
        raise ValueError("cost matrix must be finite")
    if np.any(C < 0):
        raise NegativeCost("cost matrix has negative entries")
    D = accumulated_cost(C)
    i, j = C.shape[0] - 1, C.shape[1] - 1
    pairs = [(i, j)]
    while i > 0 or j > 0:
        best = None
        for di, dj in _STEPS:
            pi, pj = i + di, j + dj
            if pi < 0 or pj < 0:
                continue
            if best is None or D[pi, pj] < D[best]:
                best = (pi, pj)
        i, j = best
        pairs.append((i, j))
    pairs.reverse()
    return AlignmentPath([(int(a), int(b)) for a, b in pairs], float(D[-1, -1]))


def _log(x):
    with np.errstate(divide="ignore"):
        return np.log(x)


def viterbi(hmm: Hmm) -> StatePath:
    """Most probable state sequence, computed in the log domain.

    Ties are broken towards the lowest state index, both for the final state
    and for every back-pointer.
    """
    log_a = _log(hmm.transitions)
    log_e = _log(hmm.emissions)
    S, T = hmm.num_states, hmm.num_steps
    delta = _log(hmm.initial) + log_e[:, 0]
    back = np.zeros((T, S), dtype=np.int64)
    for t in range(1, T):
        scores = delta[:, None] + log_a  # scores[s_prev, s]
        back[t] = np.argmax(scores, axis=0)
        delta = scores[back[t], np.arange(S)] + log_e[:, t]
    last = int(np.argmax(delta))
    log_prob = float(delta[last])
    if log_prob == -np.inf:
        raise AllPathsImpossible("every state sequence has zero probability")
    states = np.empty(T, dtype=np.int64)
    states[-1] = last
    for t in range(T - 1, 0, -1):
        states[t - 1] = back[t, states[t]]
    return StatePath(states, log_prob)


def path_log_prob(hmm: Hmm, states) -> float:
    """Log-probability of one explicit state sequence."""
    states = np.asarray(states)
    lp = _log(hmm.initial[states[0]]) + _log(hmm.emissions[states[0], 0])
    for t in range(1, states.size):
        lp += _log(hmm.transitions[states[t - 1], states[t]]) + _log(hmm.emissions[states[t], t])
    return float(lp)

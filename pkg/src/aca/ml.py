"""Classification, clustering, density estimation and factorization.

All data matrices follow the feature layout: one observation per column
(``dims x count``). Randomness comes only from :func:`make_rng`, so every
routine is deterministic given its inputs and seed.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateData,
    DimensionMismatch,
    EmptyTrainingSet,
    KTooLarge,
    NegativeInput,
    RankTooLarge,
    TooFewObservations,
)

GMM_VARIANCE_FLOOR = 1e-6
NMF_EPSILON = 1e-12


def make_rng(seed: int) -> np.random.Generator:
    """The single source of randomness: PCG64 seeded with ``seed``."""
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class Dataset:
    observations: np.ndarray  # (dims, count)
    labels: np.ndarray | None = None

    def __post_init__(self):
        obs = np.atleast_2d(np.asarray(self.observations, dtype=np.float64))
        if not np.all(np.isfinite(obs)):
            raise ValueError("observations must be finite")
        object.__setattr__(self, "observations", obs)
        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.shape != (obs.shape[1],):
                raise DimensionMismatch(
                    f"{labels.size} labels for {obs.shape[1]} observations")
            object.__setattr__(self, "labels", labels)

    @property
    def dims(self) -> int:
        return self.observations.shape[0]

    @property
    def count(self) -> int:
        return self.observations.shape[1]


def _squared_distances(X, C) -> np.ndarray:
    """(count, k) squared Euclidean distances between columns of X and C."""
    return np.sum((X[:, :, None] - C[:, None, :]) ** 2, axis=0)


# -- KNN ---------------------------------------------------------------------

def knn_classify(train: Dataset, query, k: int = 1):
    if train.count == 0:
        raise EmptyTrainingSet("training set is empty")
    if train.labels is None:
        raise ValueError("KNN needs a labelled training set")
    query = np.asarray(query, dtype=np.float64).ravel()
    if query.size != train.dims:
        raise DimensionMismatch(f"query has {query.size} dims, training data {train.dims}")
    if not 1 <= k <= train.count:
        raise ValueError(f"k must lie in [1, {train.count}], got {k}")
    dist = np.sqrt(np.sum((train.observations - query[:, None]) ** 2, axis=0))
    nearest = np.argsort(dist, kind="stable")[:k]
    votes: dict = {}
    for idx in nearest:
        label = train.labels[idx].item()
        count, total = votes.get(label, (0, 0.0))
        votes[label] = (count + 1, total + dist[idx])
    # most votes, then smallest cumulative distance, then lowest class id
    return min(votes, key=lambda c: (-votes[c][0], votes[c][1], c))


# -- k-means -----------------------------------------------------------------

@dataclass(frozen=True)
class KMeansResult:
    centroids: np.ndarray  # (dims, k)
    assignments: np.ndarray
    inertia_history: list = field(default_factory=list)


def kmeans(data: Dataset, k: int, max_iter: int = 100, seed: int = 0) -> KMeansResult:
    X = data.observations
    if k < 1:
        raise ValueError("k must be positive")
    if k > data.count:
        raise KTooLarge(f"k={k} exceeds the {data.count} observations")
    start = make_rng(seed).permutation(data.count)[:k]
    centroids = X[:, start].copy()
    assignments = None
    history = []
    for _ in range(max_iter):
        d2 = _squared_distances(X, centroids)
        new_assignments = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(data.count), new_assignments].sum()))
        if assignments is not None and np.array_equal(new_assignments, assignments):
            break
        assignments = new_assignments
        own = d2[np.arange(data.count), assignments]
        for j in range(k):
            members = assignments == j
            if members.any():
                centroids[:, j] = X[:, members].mean(axis=1)
            else:
                far = int(np.argmax(own))
                centroids[:, j] = X[:, far]
                own[far] = 0.0
    return KMeansResult(centroids, assignments, history)


# -- GMM ---------------------------------------------------------------------

@dataclass(frozen=True)
class GmmModel:
    weights: np.ndarray    # (K,)
    means: np.ndarray      # (dims, K)
    variances: np.ndarray  # (dims, K)
    log_likelihood_history: list = field(default_factory=list, compare=False)

    @property
    def num_components(self) -> int:
        return self.weights.size


def _log_component_densities(model_means, model_vars, X) -> np.ndarray:
    """(count, K) log N(x; mu_j, diag var_j)."""
    d2 = (X[:, :, None] - model_means[:, None, :]) ** 2 / model_vars[:, None, :]
    log_norm = -0.5 * np.sum(np.log(2 * np.pi * model_vars), axis=0)
    return log_norm[None, :] - 0.5 * np.sum(d2, axis=0)


def _logsumexp(a, axis):
    peak = np.max(a, axis=axis, keepdims=True)
    peak = np.where(np.isfinite(peak), peak, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - peak), axis=axis, keepdims=True)) + peak
    return np.squeeze(out, axis=axis)


def _log_weights(weights):
    with np.errstate(divide="ignore"):
        return np.log(weights)


def gmm_fit(data: Dataset, k: int, max_iter: int = 100, tol: float = 1e-6,
            seed: int = 0) -> GmmModel:
    """Diagonal-covariance GMM fitted by EM, initialized from k-means."""
    X = data.observations
    if k < 1:
        raise ValueError("k must be positive")
    if k > data.count:
        raise KTooLarge(f"k={k} exceeds the {data.count} observations")
    if k > 1 and np.all(X == X[:, :1]):
        raise DegenerateData("all observations are identical; cannot fit more than one component")
    means = kmeans(data, k, seed=seed).centroids.copy()
    variances = np.tile(np.maximum(X.var(axis=1), GMM_VARIANCE_FLOOR)[:, None], (1, k))
    weights = np.full(k, 1.0 / k)
    history = []
    for _ in range(max_iter):
        # E-step
        joint = _log_component_densities(means, variances, X) + _log_weights(weights)[None, :]
        log_px = _logsumexp(joint, axis=1)
        history.append(float(log_px.sum()))
        if len(history) > 1 and history[-1] - history[-2] < tol:
            break
        resp = np.exp(joint - log_px[:, None])
        # M-step
        nk = resp.sum(axis=0)
        alive = nk > 0
        weights = nk / data.count
        new_means = means.copy()
        new_means[:, alive] = (X @ resp[:, alive]) / nk[alive]
        means = new_means
        new_vars = variances.copy()
        for j in np.flatnonzero(alive):
            new_vars[:, j] = (resp[:, j] * (X - means[:, [j]]) ** 2).sum(axis=1) / nk[j]
        variances = np.maximum(new_vars, GMM_VARIANCE_FLOOR)
    return GmmModel(weights, means, variances, history)


def gmm_log_likelihood(model: GmmModel, x) -> float:
    x = np.asarray(x, dtype=np.float64).reshape(-1, 1)
    if x.shape[0] != model.means.shape[0]:
        raise DimensionMismatch("observation dimension does not match the model")
    joint = _log_component_densities(model.means, model.variances, x) + _log_weights(model.weights)
    return float(_logsumexp(joint, axis=1)[0])


# -- PCA ---------------------------------------------------------------------

@dataclass(frozen=True)
class PcaResult:
    components: np.ndarray   # (dims, dims), columns are principal axes
    eigenvalues: np.ndarray
    mean: np.ndarray

    def transform(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        centered = x - (self.mean if x.ndim == 1 else self.mean[:, None])
        return self.components.T @ centered

    def inverse_transform(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64)
        return self.components @ y + (self.mean if y.ndim == 1 else self.mean[:, None])


def pca(data: Dataset) -> PcaResult:
    if data.count < 2:
        raise TooFewObservations("PCA needs at least two observations")
    X = data.observations
    mean = X.mean(axis=1)
    centered = X - mean[:, None]
    cov = centered @ centered.T / data.count
    eigenvalues, vectors = np.linalg.eigh(cov)
    order = np.argsort(eigenvalues, kind="stable")[::-1]
    eigenvalues = np.maximum(eigenvalues[order], 0.0)
    vectors = vectors[:, order]
    for j in range(vectors.shape[1]):
        if vectors[np.argmax(np.abs(vectors[:, j])), j] < 0:
            vectors[:, j] = -vectors[:, j]
    return PcaResult(vectors, eigenvalues, mean)


def transform(result: PcaResult, x) -> np.ndarray:
    return result.transform(x)


# -- NMF ---------------------------------------------------------------------

@dataclass(frozen=True)
class NmfResult:
    W: np.ndarray  # (rows, rank)
    H: np.ndarray  # (rank, cols)
    divergence_history: list


def nmf(V, rank: int, max_iter: int = 200, tol: float = 1e-4, seed: int = 0) -> NmfResult:
    """Euclidean NMF with multiplicative updates."""
    V = np.atleast_2d(np.asarray(V, dtype=np.float64))
    if np.any(V < 0):
        raise NegativeInput("NMF input must be non-negative")
    if not 1 <= rank <= min(V.shape):
        raise RankTooLarge(f"rank {rank} must lie in [1, {min(V.shape)}]")
    rng = make_rng(seed)
    # uniform on (0, 1]
    W = 1.0 - rng.random((V.shape[0], rank))
    H = 1.0 - rng.random((rank, V.shape[1]))
    history = []
    for _ in range(max_iter):
        H *= (W.T @ V) / (W.T @ W @ H + NMF_EPSILON)
        W *= (V @ H.T) / (W @ (H @ H.T) + NMF_EPSILON)
        history.append(float(np.sum((V - W @ H) ** 2)))
        if history[-1] == 0.0:
            break
        if len(history) > 1 and (history[-2] - history[-1]) < tol * history[-2]:
            break
    return NmfResult(W, H, history)

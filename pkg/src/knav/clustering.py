"""Soft clustering of embedded documents.

Pipeline: mean-centered PCA projection, diagonal-covariance Gaussian mixture
fitted by EM from k-means++ starts, cluster count chosen by silhouette, and
soft assignments with a responsibility threshold.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import logsumexp

from .errors import DegenerateDataError, DomainError, SelectionError, ValidationError

log = logging.getLogger(__name__)

_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class EmSettings:
    """Knobs for the EM fit and the surrounding model selection."""

    max_iter: int = 200
    tol: float = 1e-4
    n_init: int = 4
    variance_floor: float = 1e-6
    target_dim: int = 10
    membership_threshold: float = 0.25
    k_min: int = 2
    k_max: int | None = None

    def resolved_k_max(self, n_points: int) -> int:
        if self.k_max is not None:
            return self.k_max
        return max(self.k_min, min(40, n_points // 10))


@dataclass
class ReducedMatrix:
    """Documents projected onto the leading principal components."""

    doc_ids: list[str]
    vectors: np.ndarray
    explained_variance_ratio: list[float]

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.shape[0] != len(self.doc_ids):
            raise ValidationError("one row per doc id required")
        ratios = self.explained_variance_ratio
        if any(not (0.0 <= r <= 1.0 + 1e-12) for r in ratios):
            raise ValidationError("explained variance ratios must lie in [0, 1]")
        if any(ratios[i] < ratios[i + 1] - 1e-12 for i in range(len(ratios) - 1)):
            raise ValidationError("explained variance ratios must be non-increasing")

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])


@dataclass
class GmmModel:
    """A fitted diagonal-covariance Gaussian mixture."""

    k: int
    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    log_likelihood: float
    converged: bool
    seed: int
    variance_floor: float = 1e-6
    n_iter: int = 0
    log_likelihood_history: list[float] = field(default_factory=list)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.means = np.asarray(self.means, dtype=np.float64)
        self.covariances = np.asarray(self.covariances, dtype=np.float64)
        if self.k < 1:
            raise ValidationError("k must be >= 1")
        if abs(float(self.weights.sum()) - 1.0) > 1e-9:
            raise ValidationError("mixture weights must sum to 1")
        if np.any(self.covariances < self.variance_floor - 1e-15):
            raise ValidationError("covariance entries must respect the variance floor")

    @property
    def dim(self) -> int:
        return int(self.means.shape[1])

    def log_joint(self, points: np.ndarray) -> np.ndarray:
        """n x k matrix of log(weight_j * N(x_i | mean_j, diag cov_j))."""
        return _log_joint(np.asarray(points, dtype=np.float64), self.weights, self.means, self.covariances)

    def responsibilities(self, points: np.ndarray) -> np.ndarray:
        """Posterior component probabilities, one row-stochastic row per point."""
        log_joint = self.log_joint(points)
        return np.exp(log_joint - logsumexp(log_joint, axis=1, keepdims=True))


@dataclass
class ClusterAssignment:
    """Soft document-to-cluster assignment derived from a mixture posterior."""

    doc_ids: list[str]
    responsibilities: np.ndarray
    memberships: list[set[int]]
    hard_labels: np.ndarray

    def __post_init__(self):
        self.responsibilities = np.asarray(self.responsibilities, dtype=np.float64)
        self.hard_labels = np.asarray(self.hard_labels, dtype=np.int64)
        n, k = self.responsibilities.shape
        if not (len(self.doc_ids) == n == len(self.memberships) == len(self.hard_labels)):
            raise ValidationError("assignment fields disagree on document count")
        if np.any(np.abs(self.responsibilities.sum(axis=1) - 1.0) > 1e-9):
            raise ValidationError("responsibility rows must sum to 1")
        if any(not m for m in self.memberships):
            raise ValidationError("every membership set must be non-empty")
        if np.any((self.hard_labels < 0) | (self.hard_labels >= k)):
            raise ValidationError("hard labels out of range")

    @property
    def k(self) -> int:
        return int(self.responsibilities.shape[1])

    def cluster_members(self) -> dict[int, list[str]]:
        """Documents per cluster id (soft: a doc may appear in several)."""
        members: dict[int, list[str]] = {j: [] for j in range(self.k)}
        for doc_id, mem in zip(self.doc_ids, self.memberships):
            for j in sorted(mem):
                members[j].append(doc_id)
        return {j: docs for j, docs in members.items() if docs}


def _log_joint(
    X: np.ndarray, weights: np.ndarray, means: np.ndarray, covariances: np.ndarray
) -> np.ndarray:
    diff = X[:, None, :] - means[None, :, :]
    quad = np.sum(diff**2 / covariances[None, :, :], axis=2)
    log_det = np.sum(np.log(covariances), axis=1)
    log_pdf = -0.5 * (X.shape[1] * _LOG_2PI + log_det[None, :] + quad)
    with np.errstate(divide="ignore"):
        return log_pdf + np.log(weights)[None, :]


def _as_matrix(matrix) -> tuple[list[str], np.ndarray]:
    if hasattr(matrix, "vectors"):
        return list(matrix.doc_ids), np.asarray(matrix.vectors, dtype=np.float64)
    arr = np.asarray(matrix, dtype=np.float64)
    return [str(i) for i in range(arr.shape[0])], arr


def reduce_dimensions(matrix, target_dim: int) -> ReducedMatrix:
    """Project onto the top ``target_dim`` principal components.

    Components use a deterministic sign convention: the loading with the
    largest magnitude is made positive, so refits are bit-identical.
    """
    doc_ids, X = _as_matrix(matrix)
    n, d = X.shape
    if n < 2:
        raise ValidationError("need at least 2 points to reduce")
    if not 1 <= target_dim <= min(n - 1, d):
        raise ValidationError(
            f"target_dim must be in [1, min(n-1, d)] = [1, {min(n - 1, d)}], got {target_dim}"
        )
    centered = X - X.mean(axis=0)
    _, singular_values, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt[:target_dim]
    # Population variances: eigenvalues of the covariance with denominator n.
    variances = (singular_values**2) / n
    total_variance = float(np.sum(centered**2) / n)

    for row in components:
        pivot = int(np.argmax(np.abs(row)))
        if row[pivot] < 0:
            row *= -1.0

    if total_variance <= 0.0:
        ratios = [0.0] * target_dim
    else:
        ratios = [float(v / total_variance) for v in variances[:target_dim]]
    projected = centered @ components.T
    return ReducedMatrix(doc_ids=doc_ids, vectors=projected, explained_variance_ratio=ratios)


def _kmeanspp_centers(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Seed k centers: first uniform, rest proportional to squared distance."""
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]), dtype=np.float64)
    centers[0] = X[int(rng.integers(n))]
    closest = np.sum((X - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        total = float(closest.sum())
        if total <= 0.0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=closest / total))
        centers[j] = X[idx]
        closest = np.minimum(closest, np.sum((X - centers[j]) ** 2, axis=1))
    return centers


def _em_run(
    X: np.ndarray, k: int, centers: np.ndarray, config: EmSettings
) -> tuple[np.ndarray, np.ndarray, np.ndarray, list[float], bool]:
    weights = np.full(k, 1.0 / k)
    means = centers.copy()
    covariances = np.tile(np.maximum(X.var(axis=0), config.variance_floor), (k, 1))

    history: list[float] = []
    converged = False
    prev_ll = -np.inf
    for _ in range(config.max_iter):
        log_joint = _log_joint(X, weights, means, covariances)
        log_norm = logsumexp(log_joint, axis=1)
        ll = float(log_norm.sum())
        history.append(ll)
        if np.isfinite(prev_ll) and abs(ll - prev_ll) < config.tol:
            converged = True
            break
        prev_ll = ll

        resp = np.exp(log_joint - log_norm[:, None])
        nk = resp.sum(axis=0) + 10.0 * np.finfo(np.float64).eps
        weights = nk / nk.sum()
        means = (resp.T @ X) / nk[:, None]
        diff_sq = (X[:, None, :] - means[None, :, :]) ** 2
        covariances = np.einsum("nk,nkd->kd", resp, diff_sq) / nk[:, None]
        covariances = np.maximum(covariances, config.variance_floor)
    return weights, means, covariances, history, converged


def fit_gmm(matrix, k: int, seed: int, config: EmSettings | None = None) -> GmmModel:
    """Fit a diagonal-covariance mixture by EM, keeping the best of n_init starts.

    The per-iteration log-likelihood sequence of the winning start is recorded
    on the returned model; it is non-decreasing up to floating-point noise.
    """
    config = config or EmSettings()
    _, X = _as_matrix(matrix)
    n = X.shape[0]
    if k < 1:
        raise ValidationError("k must be >= 1")
    if k > n:
        raise ValidationError(f"k={k} exceeds the number of points n={n}")
    if bool(np.all(X == X[0])):
        raise DegenerateDataError("all points are identical; nothing to cluster")

    rng = np.random.default_rng(seed)
    best: tuple | None = None
    for _ in range(max(1, config.n_init)):
        centers = _kmeanspp_centers(X, k, rng)
        weights, means, covariances, history, converged = _em_run(X, k, centers, config)
        if best is None or history[-1] > best[3][-1]:
            best = (weights, means, covariances, history, converged)

    weights, means, covariances, history, converged = best
    return GmmModel(
        k=k,
        weights=weights,
        means=means,
        covariances=covariances,
        log_likelihood=history[-1],
        converged=converged,
        seed=seed,
        variance_floor=config.variance_floor,
        n_iter=len(history),
        log_likelihood_history=history,
    )


def silhouette_score(matrix, hard_labels) -> float:
    """Mean silhouette over points: (b - a) / max(a, b), Euclidean metric.

    a is the mean distance to same-cluster points (self excluded), b the
    smallest mean distance to any other cluster. Singleton points score 0;
    a point with a = b = 0 also scores 0.
    """
    _, X = _as_matrix(matrix)
    labels = np.asarray(hard_labels, dtype=np.int64)
    if labels.shape[0] != X.shape[0]:
        raise ValidationError("labels must match the number of points")
    unique = np.unique(labels)
    if unique.size < 2:
        raise DomainError("silhouette needs at least 2 distinct clusters")

    distances = cdist(X, X, metric="euclidean")
    scores = np.zeros(X.shape[0])
    members = {int(c): np.flatnonzero(labels == c) for c in unique}
    for i in range(X.shape[0]):
        own = members[int(labels[i])]
        if own.size == 1:
            scores[i] = 0.0
            continue
        a = distances[i, own].sum() / (own.size - 1)
        b = min(
            distances[i, members[int(c)]].mean() for c in unique if c != labels[i]
        )
        denom = max(a, b)
        scores[i] = 0.0 if denom == 0.0 else (b - a) / denom
    return float(scores.mean())


def derive_seed(base_seed: int, k: int) -> int:
    """Stable per-k seed so sweep fits are independent yet reproducible."""
    return int(np.random.SeedSequence([base_seed, k]).generate_state(1)[0])


def sweep_num_clusters(
    matrix, k_range: tuple[int, int], seed: int, config: EmSettings | None = None
) -> list[tuple[int, float, GmmModel]]:
    """Fit one model per k and silhouette-score its hard labels.

    Degenerate fits (fewer than 2 populated components) are skipped with a
    warning and excluded from the returned sweep.
    """
    config = config or EmSettings()
    _, X = _as_matrix(matrix)
    n = X.shape[0]
    k_min, k_max = k_range
    if k_min < 2:
        raise ValidationError("k_min must be >= 2")
    if k_max > n - 1:
        raise ValidationError(f"k_max must be <= n-1 = {n - 1}")
    if k_min > k_max:
        raise ValidationError(f"empty k range [{k_min}, {k_max}]")

    results: list[tuple[int, float, GmmModel]] = []
    for k in range(k_min, k_max + 1):
        model = fit_gmm(matrix, k, derive_seed(seed, k), config)
        labels = np.argmax(model.responsibilities(X), axis=1)
        if np.unique(labels).size < 2:
            log.warning("k=%d collapsed to a single populated component; skipped", k)
            continue
        results.append((k, silhouette_score(matrix, labels), model))
    return results


def select_num_clusters(
    matrix, k_range: tuple[int, int], seed: int, config: EmSettings | None = None
) -> tuple[int, GmmModel]:
    """Pick the k with the best silhouette; ties go to the smaller k."""
    sweep = sweep_num_clusters(matrix, k_range, seed, config)
    if not sweep:
        raise SelectionError(f"every fit in k range {k_range} was degenerate")
    best_k, best_score, best_model = sweep[0]
    for k, score, model in sweep[1:]:
        if score > best_score:
            best_k, best_score, best_model = k, score, model
    return best_k, best_model


def assign_documents(model: GmmModel, matrix, threshold: float) -> ClusterAssignment:
    """Soft assignments: every cluster with responsibility >= threshold, plus the argmax."""
    if not 0.0 < threshold <= 1.0:
        raise ValidationError(f"threshold must be in (0, 1], got {threshold}")
    doc_ids, X = _as_matrix(matrix)
    if X.shape[1] != model.dim:
        raise ValidationError(
            f"matrix dimension {X.shape[1]} does not match model dimension {model.dim}"
        )
    resp = model.responsibilities(X)
    hard = np.argmax(resp, axis=1)  # ties resolve to the lowest index
    memberships = [
        set(np.flatnonzero(resp[i] >= threshold)) | {int(hard[i])} for i in range(len(doc_ids))
    ]
    return ClusterAssignment(
        doc_ids=doc_ids,
        responsibilities=resp,
        memberships=[{int(j) for j in m} for m in memberships],
        hard_labels=hard,
    )


def random_assignment(n_docs: int, k: int, seed: int) -> ClusterAssignment:
    """Uniform independent hard labels with one-hot responsibilities."""
    if k < 1:
        raise ValidationError("k must be >= 1")
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, k, size=n_docs)
    resp = np.zeros((n_docs, k), dtype=np.float64)
    resp[np.arange(n_docs), labels] = 1.0
    return ClusterAssignment(
        doc_ids=[str(i) for i in range(n_docs)],
        responsibilities=resp,
        memberships=[{int(label)} for label in labels],
        hard_labels=labels,
    )

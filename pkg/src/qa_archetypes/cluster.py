"""K-Means over feature vectors with silhouette-based choice of K.

Feature matrices from real communities are dominated by exact duplicates
(most users share a handful of feature vectors), so the model-selection
routines collapse the input to unique rows with multiplicities before
running Lloyd iterations or silhouettes. Both are exact under that
reduction: duplicates always share a nearest centroid, and a duplicate
contributes distance zero to its twin's cohesion term.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels

DEFAULT_RESTARTS = 10
TIE_EPS = 1e-12


@dataclass
class ClusterModel:
    k: int
    centroids: np.ndarray
    labels: np.ndarray
    cost: float  # mean squared distance to the assigned centroid
    mean_silhouette: float = float("nan")
    n_iter: int = 0
    cost_history: list = field(default_factory=list)
    converged: bool = True


@dataclass
class KSelection:
    per_k: dict  # K -> mean silhouette
    k_star: int
    model: ClusterModel
    per_k_cost: dict = field(default_factory=dict)


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _child_seed(seed, *key):
    """Deterministic independent stream for (seed, key...)."""
    base = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(int(seed) & (2**64 - 1))
    return np.random.SeedSequence(base.entropy, spawn_key=tuple(base.spawn_key) + tuple(int(k) for k in key))


def _as_points(points) -> np.ndarray:
    x = np.asarray(points, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValueError("points must be a 2-D array")
    return x


def collapse(points, labels=None):
    """Unique rows (optionally paired with labels), their counts and the inverse map."""
    x = _as_points(points)
    key = x if labels is None else np.column_stack([x, np.asarray(labels, dtype=np.float64)])
    uniq, inverse, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.reshape(-1)
    if labels is None:
        return uniq, counts.astype(np.float64), inverse
    return uniq[:, :-1], uniq[:, -1].astype(np.int64), counts.astype(np.float64), inverse


def n_distinct(points) -> int:
    return len(np.unique(_as_points(points), axis=0))


def kmeanspp_init(points, k: int, seed=None, weights=None) -> np.ndarray:
    """k-means++ seeding.

    The first centre is drawn uniformly from the points, each further one with
    probability proportional to the squared distance to the nearest centre
    chosen so far. ``weights`` treats row ``i`` as ``weights[i]`` copies.
    """
    x = _as_points(points)
    if k < 1:
        raise ValueError("k must be positive")
    if k > n_distinct(x):
        raise ValueError("k exceeds distinct points")
    w = np.ones(len(x)) if weights is None else np.asarray(weights, dtype=np.float64)
    rng = _rng(seed)
    centroids = np.empty((k, x.shape[1]))
    first = rng.choice(len(x), p=w / w.sum())
    centroids[0] = x[first]
    d2 = ((x - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        p = w * d2
        nxt = rng.choice(len(x), p=p / p.sum())
        centroids[j] = x[nxt]
        d2 = np.minimum(d2, ((x - centroids[j]) ** 2).sum(axis=1))
    return centroids


def _means(x, w, labels, k):
    sums = np.zeros((k, x.shape[1]))
    np.add.at(sums, labels, x * w[:, None])
    mass = np.bincount(labels, weights=w, minlength=k)
    return sums, mass


def lloyd(points, init_centroids, max_iter: int = 300, tol: float = 1e-9, weights=None) -> ClusterModel:
    """Alternate nearest-centroid assignment and mean updates until stable.

    Stops when no label changes (centroids are then exactly their cluster
    means) or the largest centroid move is below ``tol``. An empty cluster is
    reseeded at the point farthest from its current centroid.
    """
    x = _as_points(points)
    w = np.ones(len(x)) if weights is None else np.asarray(weights, dtype=np.float64)
    total = w.sum()
    centroids = np.array(init_centroids, dtype=np.float64).reshape(-1, x.shape[1])
    k = len(centroids)

    labels, d2 = kernels.assign_nearest(x, centroids)
    cost = float((w * d2).sum() / total)
    history = [cost]
    n_iter = 0
    converged = False
    for n_iter in range(1, max_iter + 1):
        sums, mass = _means(x, w, labels, k)
        new = centroids.copy()
        filled = mass > 0
        new[filled] = sums[filled] / mass[filled, None]
        if not filled.all():
            # reseed each empty cluster at the currently worst-served point
            _, far = kernels.assign_nearest(x, new[filled])
            for j in np.flatnonzero(~filled):
                i = int(np.argmax(far))
                new[j] = x[i]
                far[i] = 0.0
        shift = float(np.abs(new - centroids).max())
        centroids = new
        new_labels, d2 = kernels.assign_nearest(x, centroids)
        new_cost = float((w * d2).sum() / total)
        assert new_cost <= cost + 1e-12 * max(1.0, cost), "Lloyd cost increased"
        history.append(new_cost)
        changed = bool((new_labels != labels).any())
        labels, cost = new_labels, new_cost
        if not changed:
            converged = True
            break
        if shift < tol:
            sums, mass = _means(x, w, labels, k)
            filled = mass > 0
            centroids[filled] = sums[filled] / mass[filled, None]
            converged = True
            break

    sums, mass = _means(x, w, labels, k)
    filled = mass > 0
    assert not converged or np.allclose(centroids[filled], sums[filled] / mass[filled, None], rtol=0, atol=1e-12), \
        "converged centroids differ from cluster means"
    return ClusterModel(k, centroids, labels, cost, n_iter=n_iter, cost_history=history, converged=converged)


def _silhouette_collapsed(x, labels, weights) -> float:
    present = np.unique(labels)
    if len(present) < 2:
        raise ValueError("silhouette undefined for k=1")
    # relabel densely so the kernel's per-cluster arrays stay small
    dense = np.searchsorted(present, labels)
    s = kernels.silhouette_weighted(x, dense, weights, len(present))
    return float((s * weights).sum() / weights.sum())


def mean_silhouette(points, labels) -> float:
    """Average of ``(b - a) / max(a, b)`` over all points.

    ``a`` is the mean distance to the other members of the point's cluster,
    ``b`` the smallest mean distance to the members of another cluster.
    Points in singleton clusters score 0.
    """
    x = _as_points(points)
    labels = np.asarray(labels, dtype=np.int64)
    if len(labels) != len(x):
        raise ValueError("points and labels differ in length")
    ux, ul, w, _ = collapse(x, labels)
    return _silhouette_collapsed(ux, ul, w)


def _best_of_restarts(ux, w, k, seed, restarts, max_iter, tol):
    best = None
    for r in range(restarts):
        init = kmeanspp_init(ux, k, seed=_child_seed(seed, k, r), weights=w)
        model = lloyd(ux, init, max_iter=max_iter, tol=tol, weights=w)
        if best is None or model.cost < best.cost:
            best = model
    return best


def select_k(points, k_min: int = 2, k_max: int = 10, seed=42, restarts: int = DEFAULT_RESTARTS,
             max_iter: int = 300, tol: float = 1e-9) -> KSelection:
    """Fit K-Means for each K in ``[k_min, k_max]`` and keep the best mean silhouette.

    Each K uses the lowest-cost of ``restarts`` k-means++ runs. Ties in
    silhouette (within 1e-12) go to the smaller K.
    """
    x = _as_points(points)
    ux, w, inverse = collapse(x)
    distinct = len(ux)
    if distinct < 2:
        raise ValueError("need at least 2 distinct points")
    if k_min < 2 or k_min > k_max:
        raise ValueError("need 2 <= k_min <= k_max")
    if distinct < k_max:
        warnings.warn(f"only {distinct} distinct points; k_max clamped from {k_max}", RuntimeWarning, stacklevel=2)
        k_max = distinct
        k_min = min(k_min, k_max)

    per_k, per_k_cost, models = {}, {}, {}
    for k in range(k_min, k_max + 1):
        model = _best_of_restarts(ux, w, k, seed, restarts, max_iter, tol)
        model.mean_silhouette = _silhouette_collapsed(ux, model.labels, w)
        per_k[k] = model.mean_silhouette
        per_k_cost[k] = model.cost
        models[k] = model

    k_star = _argmax_k(per_k)
    best = models[k_star]
    full = ClusterModel(
        best.k, best.centroids, best.labels[inverse], best.cost,
        best.mean_silhouette, best.n_iter, best.cost_history, best.converged,
    )
    return KSelection(per_k, k_star, full, per_k_cost)


def _argmax_k(per_k) -> int:
    k_star, best = None, -np.inf
    for k in sorted(per_k):
        if per_k[k] > best + TIE_EPS:
            k_star, best = k, per_k[k]
    return k_star


def random_baseline(points, seed=42, k_min: int = 2, k_max: int = 10) -> KSelection:
    """Silhouettes of uniformly random labelings, one per K, as a sanity floor."""
    x = _as_points(points)
    if n_distinct(x) < 2:
        raise ValueError("need at least 2 distinct points")
    per_k, per_k_cost, models = {}, {}, {}
    for k in range(k_min, k_max + 1):
        rng = np.random.default_rng(_child_seed(seed, k))
        labels = rng.integers(0, k, size=len(x))
        sums, mass = _means(x, np.ones(len(x)), labels, k)
        centroids = np.divide(sums, mass[:, None], out=np.zeros_like(sums), where=mass[:, None] > 0)
        cost = float(((x - centroids[labels]) ** 2).sum(axis=1).mean())
        s = mean_silhouette(x, labels)
        per_k[k], per_k_cost[k] = s, cost
        models[k] = ClusterModel(k, centroids, labels, cost, s)
    k_star = _argmax_k(per_k)
    return KSelection(per_k, k_star, models[k_star], per_k_cost)


def principal_axes(points, dims: int = 2):
    """Top ``dims`` covariance eigenvectors (rows), their eigenvalues, the mean and total variance.

    Each axis is oriented so its largest-magnitude coordinate is positive.
    """
    x = _as_points(points)
    if len(x) < 2:
        raise ValueError("PCA needs at least 2 points")
    mean = x.mean(axis=0)
    centred = x - mean
    cov = centred.T @ centred / (len(x) - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1][:dims]
    axes = evecs[:, order].T.copy()
    for row in axes:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1
    evals = np.clip(evals, 0.0, None)
    return axes, evals[order], mean, float(evals.sum())


def pca_project(points, dims: int = 2):
    """Project onto the top principal components.

    Returns ``(coordinates, explained_variance_fractions)``.
    """
    axes, evals, mean, total = principal_axes(points, dims)
    x = _as_points(points)
    if total <= 0:
        warnings.warn("zero-variance data; PCA projection is degenerate", RuntimeWarning, stacklevel=2)
        return np.zeros((len(x), len(axes))), np.zeros(len(axes))
    return (x - mean) @ axes.T, evals / total

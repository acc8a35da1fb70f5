"""Pure NumPy implementations of the hot kernels.

These mirror ``_ckernels.pyx`` one-to-one and are used whenever the compiled
extension is unavailable (or ``QA_ARCHETYPES_PURE_PYTHON=1`` is set).
"""
import numpy as np

# upper bound on the number of pairwise distances held in memory at once
_BLOCK_ELEMENTS = 1 << 22


def series_features(x):
    """Per-row peak count, duplicate-maximum flag and distinct positive values.

    ``x`` is an ``(n, T)`` integer matrix. Peaks use an implicit zero beyond
    both ends of each row.
    """
    x = np.ascontiguousarray(x, dtype=np.int64)
    n, t = x.shape
    if n == 0:
        return (np.zeros(0, np.int64), np.zeros(0, np.uint8), np.zeros(0, np.int64))
    padded = np.zeros((n, t + 2), dtype=np.int64)
    padded[:, 1:-1] = x
    is_peak = (x > padded[:, :-2]) & (x > padded[:, 2:])
    peak_count = is_peak.sum(axis=1).astype(np.int64)

    peak_values = np.where(is_peak, x, np.iinfo(np.int64).min)
    top = peak_values.max(axis=1)
    n_top = (is_peak & (x == top[:, None])).sum(axis=1)
    duplicate = (n_top >= 2).astype(np.uint8)

    ordered = np.sort(x, axis=1)
    fresh = np.ones_like(ordered, dtype=bool)
    fresh[:, 1:] = ordered[:, 1:] != ordered[:, :-1]
    unique_positive = (fresh & (ordered > 0)).sum(axis=1).astype(np.int64)
    return peak_count, duplicate, unique_positive


def assign_nearest(points, centroids):
    """Index of the nearest centroid (lowest index on ties) and its squared distance."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    centroids = np.ascontiguousarray(centroids, dtype=np.float64)
    d2 = np.zeros((points.shape[0], centroids.shape[0]))
    for dim in range(points.shape[1]):
        diff = points[:, dim, None] - centroids[None, :, dim]
        d2 += diff * diff
    labels = np.argmin(d2, axis=1).astype(np.int64)
    return labels, d2[np.arange(points.shape[0]), labels]


def silhouette_weighted(points, labels, weights, n_clusters):
    """Silhouette value of each row, where row ``j`` stands for ``weights[j]`` copies.

    A row whose cluster holds a single element gets 0.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    labels = np.ascontiguousarray(labels, dtype=np.int64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    m = points.shape[0]
    sizes = np.bincount(labels, weights=weights, minlength=n_clusters)
    member = np.zeros((m, n_clusters))
    member[np.arange(m), labels] = weights

    out = np.zeros(m)
    block = max(1, _BLOCK_ELEMENTS // max(m, 1))
    for lo in range(0, m, block):
        hi = min(m, lo + block)
        d2 = np.zeros((hi - lo, m))
        for dim in range(points.shape[1]):
            diff = points[lo:hi, dim, None] - points[None, :, dim]
            d2 += diff * diff
        sums = np.sqrt(d2) @ member

        own = labels[lo:hi]
        own_size = sizes[own]
        rows = np.arange(hi - lo)
        with np.errstate(divide="ignore", invalid="ignore"):
            a = sums[rows, own] / (own_size - 1.0)
            mean_to = sums / sizes[None, :]
        mean_to[:, sizes == 0] = np.inf
        mean_to[rows, own] = np.inf
        b = mean_to.min(axis=1)
        top = np.maximum(a, b)
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.where(top > 0, (b - a) / top, 0.0)
        s[own_size <= 1] = 0.0
        out[lo:hi] = s
    return out

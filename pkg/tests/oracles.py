"""Independent brute-force reference implementations used by the tests.

These deliberately avoid numpy vectorisation and the package kernels so a
shared bug cannot hide on both sides of a comparison.
"""
import math


def peaks(series):
    out = []
    n = len(series)
    for t in range(n):
        left = series[t - 1] if t > 0 else 0
        right = series[t + 1] if t < n - 1 else 0
        if series[t] > left and series[t] > right:
            out.append(t)
    return out


def many_peaks(series, threshold=5):
    return 1 if len(peaks(series)) > threshold else 0


def duplicate_max(series):
    p = peaks(series)
    if len(p) < 2:
        return 0
    top = max(series[t] for t in p)
    hits = 0
    for t in p:
        if series[t] == top:
            hits += 1
    return 1 if hits >= 2 else 0


def unique_nonzero_ratio(series):
    seen = []
    for v in series:
        if v > 0 and v not in seen:
            seen.append(v)
    return len(seen) / len(series)


def dist(p, q):
    return math.sqrt(sum((a - b) ** 2 for a, b in zip(p, q)))


def silhouette(points, labels):
    """Direct O(n^2) mean silhouette; singletons score 0."""
    n = len(points)
    clusters = sorted(set(labels))
    total = 0.0
    for i in range(n):
        own = [j for j in range(n) if labels[j] == labels[i] and j != i]
        if not own:
            continue
        a = sum(dist(points[i], points[j]) for j in own) / len(own)
        b = math.inf
        for c in clusters:
            if c == labels[i]:
                continue
            members = [j for j in range(n) if labels[j] == c]
            b = min(b, sum(dist(points[i], points[j]) for j in members) / len(members))
        m = max(a, b)
        total += 0.0 if m == 0 else (b - a) / m
    return total / n


def ols_slope(y):
    """Slope of min-max normalised y on 0..n-1 from the textbook sum formula."""
    lo, hi = min(y), max(y)
    z = [(v - lo) / (hi - lo) for v in y]
    n = len(z)
    sx = sum(range(n))
    sy = sum(z)
    sxy = sum(t * v for t, v in enumerate(z))
    sxx = sum(t * t for t in range(n))
    return (n * sxy - sx * sy) / (n * sxx - sx * sx)

# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels. Signatures match ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, INFINITY
from libc.stdlib cimport malloc, free, qsort

cnp.import_array()


cdef int _cmp_i64(const void *a, const void *b) noexcept nogil:
    cdef long long x = (<const long long *> a)[0]
    cdef long long y = (<const long long *> b)[0]
    return (x > y) - (x < y)


def series_features(x):
    cdef const long long[:, ::1] v = np.ascontiguousarray(x, dtype=np.int64)
    cdef Py_ssize_t n = v.shape[0], t = v.shape[1], i, j, m
    peaks_np = np.zeros(n, dtype=np.int64)
    dup_np = np.zeros(n, dtype=np.uint8)
    uniq_np = np.zeros(n, dtype=np.int64)
    cdef long long[::1] peaks = peaks_np
    cdef unsigned char[::1] dup = dup_np
    cdef long long[::1] uniq = uniq_np
    cdef long long cur, left, right, top, count, n_top, distinct
    cdef long long *buf = <long long *> malloc((t if t > 0 else 1) * sizeof(long long))
    if buf == NULL:
        raise MemoryError()
    try:
        with nogil:
            for i in range(n):
                count = 0
                n_top = 0
                top = 0
                m = 0
                for j in range(t):
                    cur = v[i, j]
                    left = v[i, j - 1] if j > 0 else 0
                    right = v[i, j + 1] if j < t - 1 else 0
                    if cur > left and cur > right:
                        if count == 0 or cur > top:
                            top = cur
                            n_top = 1
                        elif cur == top:
                            n_top += 1
                        count += 1
                    if cur > 0:
                        buf[m] = cur
                        m += 1
                peaks[i] = count
                dup[i] = 1 if n_top >= 2 else 0
                distinct = 0
                if m > 0:
                    qsort(buf, m, sizeof(long long), _cmp_i64)
                    distinct = 1
                    for j in range(1, m):
                        if buf[j] != buf[j - 1]:
                            distinct += 1
                uniq[i] = distinct
    finally:
        free(buf)
    return peaks_np, dup_np, uniq_np


def assign_nearest(points, centroids):
    cdef const double[:, ::1] p = np.ascontiguousarray(points, dtype=np.float64)
    cdef const double[:, ::1] c = np.ascontiguousarray(centroids, dtype=np.float64)
    cdef Py_ssize_t n = p.shape[0], k = c.shape[0], d = p.shape[1], i, j, q
    labels_np = np.zeros(n, dtype=np.int64)
    dist_np = np.zeros(n, dtype=np.float64)
    cdef long long[::1] labels = labels_np
    cdef double[::1] dist = dist_np
    cdef double best, acc, diff
    cdef long long arg
    with nogil:
        for i in range(n):
            best = INFINITY
            arg = 0
            for j in range(k):
                acc = 0.0
                for q in range(d):
                    diff = p[i, q] - c[j, q]
                    acc = acc + diff * diff
                if acc < best:
                    best = acc
                    arg = j
            labels[i] = arg
            dist[i] = best
    return labels_np, dist_np


def silhouette_weighted(points, labels, weights, Py_ssize_t n_clusters):
    cdef const double[:, ::1] p = np.ascontiguousarray(points, dtype=np.float64)
    cdef const long long[::1] lab = np.ascontiguousarray(labels, dtype=np.int64)
    cdef const double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t m = p.shape[0], d = p.shape[1], i, j, q, c
    sizes_np = np.bincount(np.asarray(lab), weights=np.asarray(w), minlength=n_clusters)
    cdef const double[::1] sizes = sizes_np
    out_np = np.zeros(m, dtype=np.float64)
    cdef double[::1] out = out_np
    sums_np = np.zeros(n_clusters, dtype=np.float64)
    cdef double[::1] sums = sums_np
    cdef double acc, diff, a, b, mean, top
    cdef long long own
    with nogil:
        for i in range(m):
            own = lab[i]
            if sizes[own] <= 1.0:
                out[i] = 0.0
                continue
            for c in range(n_clusters):
                sums[c] = 0.0
            for j in range(m):
                acc = 0.0
                for q in range(d):
                    diff = p[i, q] - p[j, q]
                    acc = acc + diff * diff
                sums[lab[j]] += w[j] * sqrt(acc)
            a = sums[own] / (sizes[own] - 1.0)
            b = INFINITY
            for c in range(n_clusters):
                if c != own and sizes[c] > 0.0:
                    mean = sums[c] / sizes[c]
                    if mean < b:
                        b = mean
            top = a if a > b else b
            out[i] = (b - a) / top if top > 0.0 else 0.0
    return out_np

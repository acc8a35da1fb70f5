"""The three activity features clustered per user series.

* ``many_peaks`` -- 1 if the series has more than ``threshold`` peaks
* ``duplicate_max`` -- 1 if at least two peaks share the highest peak value
* ``unique_nonzero_ratio`` -- distinct positive values divided by series length

A peak is a month strictly above both neighbours, with an implicit zero
before the first and after the last month.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import kernels
from .series import SeriesTable

DEFAULT_PEAK_THRESHOLD = 5


@dataclass(frozen=True)
class FeatureVector:
    many_peaks: int
    duplicate_max: int
    unique_nonzero_ratio: float

    def as_tuple(self):
        return (self.many_peaks, self.duplicate_max, self.unique_nonzero_ratio)


def _row(series) -> np.ndarray:
    x = np.asarray(series, dtype=np.int64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("series must be a non-empty 1-D sequence")
    return x[None, :]


def detect_peaks(series) -> list:
    x = _row(series)[0]
    padded = np.concatenate(([0], x, [0]))
    return np.flatnonzero((x > padded[:-2]) & (x > padded[2:])).tolist()


def many_peaks(series, threshold: int = DEFAULT_PEAK_THRESHOLD) -> int:
    if threshold < 1:
        raise ValueError("threshold must be >= 1")
    return int(len(detect_peaks(series)) > threshold)


def duplicate_max(series) -> int:
    x = np.asarray(series, dtype=np.int64)
    peaks = detect_peaks(x)
    if len(peaks) < 2:
        return 0
    values = x[peaks]
    return int((values == values.max()).sum() >= 2)


def unique_nonzero_ratio(series) -> float:
    x = _row(series)[0]
    return len(set(x[x > 0].tolist())) / x.size


def extract_features(series, threshold: int = DEFAULT_PEAK_THRESHOLD) -> FeatureVector:
    peaks, dup, uniq = kernels.series_features(_row(series))
    return FeatureVector(int(peaks[0] > threshold), int(dup[0]), uniq[0] / len(series))


@dataclass
class FeatureMatrix:
    """Features for every user of a table, one row per user (table order)."""

    user_ids: list
    kind: str
    values: np.ndarray  # (n, 3) float64: many_peaks, duplicate_max, ratio
    peak_counts: np.ndarray


def featurize(table: SeriesTable, kind: str = "answers", threshold: int = DEFAULT_PEAK_THRESHOLD) -> FeatureMatrix:
    mat = table.matrix(kind)
    peaks, dup, uniq = kernels.series_features(mat)
    values = np.column_stack([
        (peaks > threshold).astype(np.float64),
        dup.astype(np.float64),
        uniq / float(table.window.month_count),
    ]) if len(mat) else np.zeros((0, 3))
    return FeatureMatrix(list(table.user_ids), kind, values, peaks)


def peak_count_quantile(peak_counts, q: float = 0.9) -> int:
    """Nearest-rank ``q``-quantile of per-series peak counts.

    The rank is ``ceil(q * n)`` evaluated exactly, so ``q=0.9`` over ``1..100``
    gives 90 rather than a float-rounding neighbour.
    """
    counts = sorted(int(c) for c in peak_counts)
    if not counts:
        raise ValueError("peak_count_quantile needs at least one series")
    if not 0 < q <= 1:
        raise ValueError("q must lie in (0, 1]")
    rank = math.ceil(Fraction(str(q)) * len(counts))
    return counts[max(rank, 1) - 1]


def write_features_csv(features: FeatureMatrix, out) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(("user_id", "kind", "many_peaks", "duplicate_max", "unique_nonzero_ratio"))
    for user, (mp, dm, r) in zip(features.user_ids, features.values.tolist()):
        writer.writerow((user, features.kind, int(mp), int(dm), repr(r)))

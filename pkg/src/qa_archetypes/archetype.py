"""Activity Archetypes, per-archetype statistics and instance maturity typing."""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .cluster import ClusterModel
from .series import SeriesTable

NON_RECURRING = "NonRecurring"
SPORADIC = "Sporadic"
FREQUENT = "Frequent"
PERMANENT = "Permanent"
NAMED = (NON_RECURRING, SPORADIC, FREQUENT, PERMANENT)

# (many_peaks, duplicate_max) corner -> archetype
CORNERS = {
    (0, 0): NON_RECURRING,
    (0, 1): SPORADIC,
    (1, 0): FREQUENT,
    (1, 1): PERMANENT,
}

DEFAULT_SUSTAINABLE_THRESHOLD = 0.9


def variant_name(i: int) -> str:
    return f"Variant({i})"


class InstanceType(str, enum.Enum):
    EMERGING = "Emerging"
    TRANSITIONING = "Transitioning"
    SUSTAINABLE = "Sustainable"


class ClassificationError(ValueError):
    """The instance cannot be typed, e.g. clusters could not be named."""


@dataclass(frozen=True)
class ArchetypeLabel:
    name: str
    cluster_index: int

    @property
    def is_variant(self) -> bool:
        return self.name not in NAMED


def label_clusters(model: ClusterModel, activity=None) -> dict:
    """Map cluster index -> :class:`ArchetypeLabel`.

    With four clusters, each centroid snaps to the nearest corner of the two
    Boolean feature axes; if every corner is hit exactly once the four named
    archetypes are assigned. Otherwise (any other K, or two centroids on one
    corner) clusters become ``Variant(i)``, numbered by ascending summed
    ``activity`` of their members (cluster index when ``activity`` is None).
    """
    k = model.k
    if k == 4:
        corners = [(int(c[0] >= 0.5), int(c[1] >= 0.5)) for c in model.centroids]
        if len(set(corners)) == 4:
            return {j: ArchetypeLabel(CORNERS[c], j) for j, c in enumerate(corners)}

    if activity is None:
        order = list(range(k))
    else:
        volume = np.bincount(model.labels, weights=np.asarray(activity, dtype=np.float64), minlength=k)
        order = sorted(range(k), key=lambda j: (volume[j], j))
    return {j: ArchetypeLabel(variant_name(rank), j) for rank, j in enumerate(order)}


def user_archetypes(model: ClusterModel, names: dict) -> np.ndarray:
    """Archetype name per point of ``model``."""
    lookup = np.array([names[j].name for j in range(model.k)], dtype=object)
    return lookup[model.labels]


def archetype_order(names) -> list:
    names = set(names)
    if names <= set(NAMED):
        return list(NAMED)
    return sorted(names, key=lambda n: (int(n[8:-1]) if n.startswith("Variant(") else -1, n))


@dataclass
class ArchetypeSummary:
    name: str
    users: int
    user_fraction: float
    median_questions: float | None
    median_answers: float | None
    median_active_months: float | None
    median_tenure_months: float | None
    question_fraction: float | None
    answer_fraction: float | None


@dataclass
class CompositionEntry:
    questions: int
    answers: int
    question_fraction: float | None
    answer_fraction: float | None


def user_activity_profile(table: SeriesTable):
    """Per-user totals, active months and tenure (months from first to last active month)."""
    q = table.questions
    a = table.answers
    active = (q + a) > 0
    n, t = active.shape
    first = np.argmax(active, axis=1)
    last = t - 1 - np.argmax(active[:, ::-1], axis=1)
    return {
        "questions": q.sum(axis=1),
        "answers": a.sum(axis=1),
        "active_months": active.sum(axis=1),
        "tenure_months": last - first,
    }


def activity_composition(table: SeriesTable, labels) -> dict:
    """Share of total question and answer activity generated by each archetype.

    ``labels`` holds one archetype name per table row. A kind with zero total
    activity yields ``None`` fractions.
    """
    labels = np.asarray(labels, dtype=object)
    q = table.questions.sum(axis=1)
    a = table.answers.sum(axis=1)
    q_total, a_total = int(q.sum()), int(a.sum())
    out = {}
    for name in archetype_order(set(labels.tolist())):
        mask = labels == name
        qs, as_ = int(q[mask].sum()), int(a[mask].sum())
        out[name] = CompositionEntry(
            qs, as_,
            qs / q_total if q_total else None,
            as_ / a_total if a_total else None,
        )
    return out


def archetype_stats(table: SeriesTable, labels) -> list:
    """Median activity statistics and shares per archetype.

    With named archetypes all four are reported; an archetype without users
    has ``None`` statistics rather than zeros.
    """
    labels = np.asarray(labels, dtype=object)
    if len(labels) != len(table):
        raise ValueError("one label per user is required")
    prof = user_activity_profile(table)
    comp = activity_composition(table, labels)
    n = len(table)
    out = []
    for name in archetype_order(set(labels.tolist())):
        mask = labels == name
        size = int(mask.sum())
        entry = comp.get(name)

        def med(key):
            return float(np.median(prof[key][mask])) if size else None

        out.append(ArchetypeSummary(
            name=name,
            users=size,
            user_fraction=size / n if n else 0.0,
            median_questions=med("questions"),
            median_answers=med("answers"),
            median_active_months=med("active_months"),
            median_tenure_months=med("tenure_months"),
            question_fraction=entry.question_fraction if entry else None,
            answer_fraction=entry.answer_fraction if entry else None,
        ))
    return out


def classify_instance(k_star: int, answer_activity: Mapping[str, float],
                      threshold: float = DEFAULT_SUSTAINABLE_THRESHOLD) -> InstanceType:
    """Emerging / Transitioning / Sustainable typing.

    ``answer_activity`` maps archetype name to answer activity (counts or
    fractions). Emerging iff ``k_star > 4``. Otherwise Sustainable when the
    non-NonRecurring archetypes together produce at least ``threshold`` times
    the NonRecurring answer activity, else Transitioning.
    """
    if k_star > 4:
        return InstanceType.EMERGING
    if set(answer_activity) - set(NAMED) or NON_RECURRING not in answer_activity:
        raise ClassificationError("unnamed clusters")
    values = {name: answer_activity.get(name) for name in NAMED}
    if any(v is None for v in values.values()):
        raise ClassificationError("no answer activity")
    base = values.pop(NON_RECURRING)
    others = sum(values.values())
    if others >= threshold * base:
        return InstanceType.SUSTAINABLE
    return InstanceType.TRANSITIONING


def trend_slope(monthly_totals) -> float:
    """OLS slope of min-max normalised totals against the month index.

    Units are normalised activity per month. Constant (or single-month)
    totals give 0 with a warning.
    """
    y = np.asarray(monthly_totals, dtype=np.float64)
    lo, hi = (y.min(), y.max()) if y.size else (0.0, 0.0)
    if y.size < 2 or hi == lo:
        warnings.warn("degenerate totals; trend slope set to 0", RuntimeWarning, stacklevel=2)
        return 0.0
    z = (y - lo) / (hi - lo)
    t = np.arange(y.size, dtype=np.float64)
    tc = t - t.mean()
    return float((tc * (z - z.mean())).sum() / (tc * tc).sum())

"""End-to-end analysis: series -> features -> K selection -> archetypes -> instance type."""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .archetype import (DEFAULT_SUSTAINABLE_THRESHOLD, ClassificationError, InstanceType,
                        activity_composition, archetype_stats, classify_instance, label_clusters,
                        trend_slope, user_archetypes)
from .cluster import KSelection, n_distinct, pca_project, random_baseline, select_k
from .features import DEFAULT_PEAK_THRESHOLD, FeatureMatrix, featurize, peak_count_quantile
from .ingest import IngestError, InstanceWindow, derive_window
from .series import SeriesTable, build_user_series, total_activity, truncate_events

INSUFFICIENT = "insufficient data"
UNCLASSIFIED = "unclassified"


@dataclass
class AnalysisConfig:
    seed: int = 42
    k_min: int = 2
    k_max: int = 10
    restarts: int = 10
    peak_threshold: int = DEFAULT_PEAK_THRESHOLD
    sustainable_threshold: float = DEFAULT_SUSTAINABLE_THRESHOLD
    kind: str = "answers"
    evolution: bool = False
    evolution_step: int = 6
    evolution_horizon: int = 36
    baseline: bool = True
    jobs: int = 1  # worker threads for evolution checkpoints
    granularity: str = "month"  # only calendar months are implemented


@dataclass
class EvolutionPoint:
    cutoff_month: int  # instance age in months at the checkpoint
    type: str


@dataclass
class InstanceReport:
    window: InstanceWindow
    kind: str
    table: SeriesTable
    features: FeatureMatrix
    selection: KSelection
    names: dict
    user_labels: np.ndarray
    archetypes: list
    composition: dict
    instance_type: InstanceType | None
    classification_error: str | None
    trend_slope: float
    peak_threshold: int
    peak_count_q90: int
    pca: tuple
    baseline: KSelection | None = None
    evolution: list = field(default_factory=list)

    @property
    def k_star(self) -> int:
        return self.selection.k_star


def _checkpoint_seed(seed, cutoff):
    return np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=(int(cutoff),))


def _classify(table: SeriesTable, config: AnalysisConfig, seed):
    """Cluster one table and type it. Returns (selection, names, labels, composition, type, error)."""
    fm = featurize(table, config.kind, config.peak_threshold)
    sel = select_k(fm.values, config.k_min, config.k_max, seed=seed, restarts=config.restarts)
    activity = table.questions.sum(axis=1) + table.answers.sum(axis=1)
    names = label_clusters(sel.model, activity)
    labels = user_archetypes(sel.model, names)
    comp = activity_composition(table, labels)
    try:
        itype = classify_instance(sel.k_star, {n: c.answer_fraction for n, c in comp.items()},
                                  config.sustainable_threshold)
        err = None
    except ClassificationError as exc:
        itype, err = None, str(exc)
    return fm, sel, names, labels, comp, itype, err


def analyze_table(table: SeriesTable, config: AnalysisConfig | None = None) -> InstanceReport:
    config = config or AnalysisConfig()
    if len(table) == 0:
        raise IngestError("no events")
    fm, sel, names, labels, comp, itype, err = _classify(table, config, config.seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        slope = trend_slope(total_activity(table).totals)
        pca = pca_project(fm.values, 2) if len(table) >= 2 else (np.zeros((len(table), 2)), np.zeros(2))
    baseline = random_baseline(fm.values, config.seed, config.k_min, config.k_max) \
        if config.baseline and n_distinct(fm.values) >= 2 else None
    return InstanceReport(
        window=table.window, kind=config.kind, table=table, features=fm, selection=sel,
        names=names, user_labels=labels, archetypes=archetype_stats(table, labels),
        composition=comp, instance_type=itype, classification_error=err,
        trend_slope=slope, peak_threshold=config.peak_threshold,
        peak_count_q90=peak_count_quantile(fm.peak_counts, 0.9),
        pca=pca, baseline=baseline,
    )


def analyze_events(events, config: AnalysisConfig | None = None, end_month=None) -> InstanceReport:
    """Analyse one instance; ``end_month`` pins the final observation month."""
    config = config or AnalysisConfig()
    if config.granularity != "month":
        raise ValueError(f"unsupported granularity {config.granularity!r}")
    events = list(events)
    if end_month is not None:
        events = truncate_events(events, end_month)
    window = derive_window(events, end_month)
    table = build_user_series(events, window)
    report = analyze_table(table, config)
    if config.evolution:
        if window.month_count < config.evolution_step:
            warnings.warn("instance younger than one evolution step; no checkpoints", RuntimeWarning, stacklevel=2)
        else:
            report.evolution = evolution(events, config, window=window)
    return report


def classify_checkpoint(events, window: InstanceWindow, config: AnalysisConfig, seed) -> str:
    table = build_user_series(events, window)
    if len(table) == 0:
        return INSUFFICIENT
    values = featurize(table, config.kind, config.peak_threshold).values
    if n_distinct(values) < config.k_max:
        return INSUFFICIENT
    *_, itype, _err = _classify(table, config, seed)
    return itype.value if itype is not None else UNCLASSIFIED


def evolution(events, config: AnalysisConfig | None = None, step: int | None = None,
              horizon: int | None = None, window: InstanceWindow | None = None) -> list:
    """Instance type at every ``step`` months of age up to ``horizon`` months.

    Each checkpoint reruns the whole pipeline on the events observed so far,
    seeded from ``(config.seed, cutoff)``.
    """
    config = config or AnalysisConfig()
    step = step or config.evolution_step
    horizon = horizon or config.evolution_horizon
    events = list(events)
    window = window or derive_window(events)
    age = window.month_count
    if age < step:
        raise ValueError(f"instance is {age} months old, shorter than one step of {step}")
    cutoffs = list(range(step, min(horizon, age) + 1, step))

    def run(cutoff):
        sub_window = window.prefix(cutoff)
        sub_events = truncate_events(events, sub_window.end_month)
        return EvolutionPoint(cutoff, classify_checkpoint(sub_events, sub_window, config,
                                                          _checkpoint_seed(config.seed, cutoff)))

    if config.jobs > 1 and len(cutoffs) > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            return list(pool.map(run, cutoffs))
    return [run(c) for c in cutoffs]

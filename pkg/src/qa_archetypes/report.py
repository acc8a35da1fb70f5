"""Serialisation of analysis results: report JSON, model JSON, CSV exports and SVG scatter.

All writers are byte-deterministic: field order is fixed and floats are
rounded to 12 significant digits.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict

import numpy as np

from .archetype import archetype_order
from .ingest import format_month
from .pipeline import InstanceReport

FLOAT_DIGITS = 12

# colour-blind friendly palette; Variants cycle through the tail
PALETTE = ("#0072b2", "#e69f00", "#009e73", "#d55e00", "#cc79a7", "#56b4e9",
           "#f0e442", "#000000", "#999999", "#882255")
NAMED_COLOURS = {"NonRecurring": PALETTE[0], "Sporadic": PALETTE[1], "Frequent": PALETTE[2],
                 "Permanent": PALETTE[3]}


def round_floats(obj):
    """Recursively round floats to ``FLOAT_DIGITS`` significant digits; NaN/inf become None."""
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None
        return float(f"{x:.{FLOAT_DIGITS}g}")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return round_floats(obj.tolist())
    return obj


def dumps(obj) -> str:
    return json.dumps(round_floats(obj), indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def _per_k(per_k: dict) -> dict:
    return {str(k): per_k[k] for k in sorted(per_k)}


def report_dict(report: InstanceReport, skipped: dict | None = None) -> dict:
    """Report as an ordered dict with stable field names."""
    w = report.window
    out = {
        "instance_type": report.instance_type.value if report.instance_type is not None else None,
        "k_star": report.k_star,
        "per_k_silhouette": _per_k(report.selection.per_k),
        "archetypes": [asdict(a) for a in report.archetypes],
        "trend_slope": report.trend_slope,
        "evolution": [{"cutoff_month": p.cutoff_month, "type": p.type} for p in report.evolution],
        "classification_error": report.classification_error,
        "kind": report.kind,
        "window": {"start": format_month(w.start_month), "end": format_month(w.end_month),
                   "months": w.month_count},
        "users": len(report.table),
        "mean_silhouette": report.selection.per_k[report.k_star],
        "peak_threshold": report.peak_threshold,
        "peak_count_q90": report.peak_count_q90,
        "random_baseline_silhouette": _per_k(report.baseline.per_k) if report.baseline else None,
    }
    if skipped is not None:
        out["skipped_rows"] = {k: skipped[k] for k in sorted(skipped)}
    return out


def write_report(report: InstanceReport, out, skipped: dict | None = None) -> None:
    out.write(dumps(report_dict(report, skipped)))


def model_dict(report: InstanceReport) -> dict:
    m = report.selection.model
    coords, frac = report.pca
    return {
        "k_star": report.k_star,
        "per_k_silhouette": _per_k(report.selection.per_k),
        "per_k_cost": _per_k(report.selection.per_k_cost),
        "features": ["many_peaks", "duplicate_max", "unique_nonzero_ratio"],
        "centroids": m.centroids.tolist(),
        "cluster_names": [report.names[j].name for j in range(m.k)],
        "users": list(report.table.user_ids),
        "labels": m.labels.tolist(),
        "pca_explained_variance": list(frac),
        "pca": coords.tolist(),
    }


def write_model(report: InstanceReport, out) -> None:
    out.write(dumps(model_dict(report)))


def write_composition_csv(report: InstanceReport, out) -> None:
    """Monthly question/answer totals per archetype, for stacked composition plots."""
    table = report.table
    labels = np.asarray(report.user_labels, dtype=object)
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(("month", "archetype", "questions", "answers"))
    per = {}
    for name in archetype_order(set(labels.tolist())):
        mask = labels == name
        per[name] = (table.questions[mask].sum(axis=0), table.answers[mask].sum(axis=0))
    for t in range(table.window.month_count):
        month = format_month(table.window.month_at(t))
        for name, (q, a) in per.items():
            writer.writerow((month, name, int(q[t]), int(a[t])))


def _colour(name: str, variants: list) -> str:
    if name in NAMED_COLOURS:
        return NAMED_COLOURS[name]
    return PALETTE[(4 + variants.index(name)) % len(PALETTE)]


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def scatter_svg(report: InstanceReport, width: int = 640, height: int = 480) -> str:
    """SVG 1.1 scatter of the first two principal components, coloured by archetype.

    Users sharing a position and archetype are drawn once, with the marker
    area growing logarithmically in their count.
    """
    coords, frac = report.pca
    labels = np.asarray(report.user_labels, dtype=object)
    names = archetype_order(set(labels.tolist()))
    variants = [n for n in names if n not in NAMED_COLOURS]
    margin, legend_w = 50, 150
    pw, ph = width - 2 * margin - legend_w, height - 2 * margin

    xy = np.asarray(coords, dtype=np.float64).reshape(len(labels), -1)
    if xy.shape[1] < 2:
        xy = np.column_stack([xy, np.zeros((len(xy), 2 - xy.shape[1]))])
    lo, hi = xy[:, :2].min(axis=0) if len(xy) else np.zeros(2), xy[:, :2].max(axis=0) if len(xy) else np.ones(2)
    span = np.where(hi - lo > 0, hi - lo, 1.0)

    def sx(v):
        return margin + (v - lo[0]) / span[0] * pw

    def sy(v):
        return margin + ph - (v - lo[1]) / span[1] * ph

    parts = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        '<!DOCTYPE svg PUBLIC "-//W3C//DTD SVG 1.1//EN" "http://www.w3.org/Graphics/SVG/1.1/DTD/svg11.dtd">',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
        f'<rect x="{margin}" y="{margin}" width="{pw}" height="{ph}" fill="none" stroke="#444444"/>',
        f'<text x="{margin + pw / 2:.2f}" y="{height - 12}" font-family="sans-serif" font-size="12" '
        f'text-anchor="middle">PC1 ({frac[0] * 100 if len(frac) else 0:.1f}% variance)</text>',
        f'<text x="14" y="{margin + ph / 2:.2f}" font-family="sans-serif" font-size="12" text-anchor="middle" '
        f'transform="rotate(-90 14 {margin + ph / 2:.2f})">PC2 ({frac[1] * 100 if len(frac) > 1 else 0:.1f}% variance)</text>',
    ]
    for name in names:
        mask = labels == name
        if not mask.any():
            continue
        pts, counts = np.unique(np.round(xy[mask, :2], 9), axis=0, return_counts=True)
        colour = _colour(name, variants)
        parts.append(f'<g fill="{colour}" fill-opacity="0.7" stroke="#222222" stroke-width="0.5">')
        for (px, py), c in zip(pts.tolist(), counts.tolist()):
            r = 3.0 + 2.0 * math.log10(c)
            parts.append(f'<circle cx="{_fmt(sx(px))}" cy="{_fmt(sy(py))}" r="{_fmt(r)}">'
                         f'<title>{name}: {c} users</title></circle>')
        parts.append("</g>")
    lx = width - legend_w - margin / 2 + 10
    for i, name in enumerate(names):
        y = margin + 10 + 20 * i
        parts.append(f'<circle cx="{lx:.2f}" cy="{y}" r="5" fill="{_colour(name, variants)}"/>')
        parts.append(f'<text x="{lx + 12:.2f}" y="{y + 4}" font-family="sans-serif" font-size="12">{name}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_scatter(report: InstanceReport, out) -> None:
    out.write(scatter_svg(report))

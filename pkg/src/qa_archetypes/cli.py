"""Command-line interface: ``qa-archetypes analyze`` and ``qa-archetypes synth``."""
from __future__ import annotations

import argparse
import contextlib
import sys
import warnings

from . import __version__
from .archetype import DEFAULT_SUSTAINABLE_THRESHOLD
from .features import DEFAULT_PEAK_THRESHOLD, write_features_csv
from .ingest import IngestError, SkipReport, parse_month, read_events, write_event_csv
from .pipeline import AnalysisConfig, analyze_events
from .report import write_composition_csv, write_model, write_report, write_scatter
from .series import KINDS, write_series_csv
from .synth import SpecError, default_spec, generate_instance, load_spec, validate_spec, write_labels_csv

EXIT_OK = 0
EXIT_DATA = 2
EXIT_REFUSED = 3


def _month(text):
    try:
        return parse_month(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qa-archetypes",
                                     description="Activity archetypes and maturity typing for Q&A communities.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="analyse one instance (dump XML and/or event CSV files)")
    a.add_argument("inputs", nargs="+", help="Posts.xml, Comments.xml or event CSV files of one instance")
    a.add_argument("--seed", type=int, default=42)
    a.add_argument("--k-min", type=int, default=2)
    a.add_argument("--k-max", type=int, default=10)
    a.add_argument("--restarts", type=int, default=10, help="k-means++ restarts per K")
    a.add_argument("--peak-threshold", type=int, default=DEFAULT_PEAK_THRESHOLD,
                   help="many_peaks is set above this many peaks")
    a.add_argument("--sustainable-threshold", type=float, default=DEFAULT_SUSTAINABLE_THRESHOLD)
    a.add_argument("--kind", choices=KINDS, default="answers", help="series kind that is clustered")
    a.add_argument("--granularity", choices=("month",), default="month",
                   help="time bin of the activity series (only calendar months are supported)")
    a.add_argument("--cutoff-month", type=_month, metavar="YYYY-MM",
                   help="ignore events after this month and end the window there")
    a.add_argument("--evolution", action="store_true", help="classify the instance every --step months")
    a.add_argument("--step", type=int, default=6, help="evolution checkpoint spacing in months")
    a.add_argument("--horizon", type=int, default=36, help="last evolution checkpoint in months")
    a.add_argument("--jobs", type=int, default=1, help="worker threads for evolution checkpoints")
    a.add_argument("--no-baseline", action="store_true", help="skip the random-label silhouette baseline")
    a.add_argument("--export-features", metavar="CSV")
    a.add_argument("--export-series", metavar="CSV")
    a.add_argument("--export-composition", metavar="CSV", help="monthly activity per archetype")
    a.add_argument("--export-scatter", metavar="SVG", help="PCA scatter coloured by archetype")
    a.add_argument("--export-model", metavar="JSON", help="centroids, labels and PCA coordinates")
    a.add_argument("--out", metavar="JSON", help="report path (default: stdout)")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("synth", help="generate a synthetic instance from a mixture spec")
    s.add_argument("spec", nargs="?", help="INI mixture spec (default: four-archetype mixture)")
    s.add_argument("--users", type=int, default=1000, help="users of the default spec")
    s.add_argument("--months", type=int, default=60, help="months of the default spec")
    s.add_argument("--seed", type=int, help="override the spec seed")
    s.add_argument("--out", required=True, metavar="CSV", help="event CSV")
    s.add_argument("--labels", metavar="CSV", help="ground-truth labels CSV")
    s.set_defaults(func=cmd_synth)
    return parser


def _check_analyze(parser, args):
    if args.k_min < 2:
        parser.error("--k-min must be at least 2")
    if args.k_min > args.k_max:
        parser.error("--k-min must not exceed --k-max")
    if args.restarts < 1:
        parser.error("--restarts must be positive")
    if args.peak_threshold < 1:
        parser.error("--peak-threshold must be at least 1")
    if not 0 < args.sustainable_threshold:
        parser.error("--sustainable-threshold must be positive")
    if args.step < 1 or args.horizon < args.step:
        parser.error("need 1 <= --step <= --horizon")
    if args.jobs < 1:
        parser.error("--jobs must be positive")
    if (args.step != 6 or args.horizon != 36) and not args.evolution:
        parser.error("--step/--horizon require --evolution")


def _open_out(path):
    if path is None or path == "-":
        return contextlib.nullcontext(sys.stdout)
    return open(path, "w", encoding="utf-8", newline="")


def _fail(message, code=EXIT_DATA):
    print(f"qa-archetypes: error: {message}", file=sys.stderr)
    return code


def cmd_analyze(args) -> int:
    skips = SkipReport()
    events = []
    for path in args.inputs:
        try:
            events.extend(read_events(path, skips))
        except OSError as exc:
            return _fail(f"cannot read {path}: {exc.strerror or exc}")
        except IngestError as exc:
            return _fail(f"{path}: {exc}")
    if skips.n_skipped:
        print(f"qa-archetypes: skipped {skips.n_skipped} of {skips.rows} rows "
              f"({', '.join(f'{k}={v}' for k, v in sorted(skips.skipped.items()))})", file=sys.stderr)
    config = AnalysisConfig(
        seed=args.seed, k_min=args.k_min, k_max=args.k_max, restarts=args.restarts,
        peak_threshold=args.peak_threshold, sustainable_threshold=args.sustainable_threshold,
        kind=args.kind, evolution=args.evolution, evolution_step=args.step,
        evolution_horizon=args.horizon, baseline=not args.no_baseline, jobs=args.jobs,
        granularity=args.granularity,
    )
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            report = analyze_events(events, config, end_month=args.cutoff_month)
    except (IngestError, ValueError) as exc:
        return _fail(str(exc))
    for w in caught:
        print(f"qa-archetypes: warning: {w.message}", file=sys.stderr)

    with _open_out(args.out) as fh:
        write_report(report, fh, dict(skips.skipped))
    exports = (
        (args.export_features, lambda fh: write_features_csv(report.features, fh)),
        (args.export_series, lambda fh: write_series_csv(report.table, fh)),
        (args.export_composition, lambda fh: write_composition_csv(report, fh)),
        (args.export_scatter, lambda fh: write_scatter(report, fh)),
        (args.export_model, lambda fh: write_model(report, fh)),
    )
    for path, writer in exports:
        if path:
            with _open_out(path) as fh:
                writer(fh)
    if report.classification_error is not None:
        return _fail(f"classification refused: {report.classification_error}", EXIT_REFUSED)
    return EXIT_OK


def cmd_synth(args) -> int:
    try:
        if args.spec:
            spec = load_spec(args.spec)
        else:
            spec = default_spec(args.users, args.months)
        if args.seed is not None:
            spec.seed = args.seed
        validate_spec(spec)
        inst = generate_instance(spec)
    except OSError as exc:
        return _fail(f"cannot read {args.spec}: {exc.strerror or exc}")
    except SpecError as exc:
        raise _UsageError(f"invalid spec field {exc.field!r}: {exc}") from None
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        write_event_csv(inst.events, fh)
    if args.labels:
        with open(args.labels, "w", encoding="utf-8", newline="") as fh:
            write_labels_csv(inst.labels, fh)
    return EXIT_OK


class _UsageError(Exception):
    pass


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "analyze":
        _check_analyze(parser, args)
    try:
        return args.func(args)
    except _UsageError as exc:
        parser.error(str(exc))


if __name__ == "__main__":
    sys.exit(main())

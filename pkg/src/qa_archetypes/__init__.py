"""Activity archetypes of Q&A community users and instance maturity typing."""

__version__ = "0.1.0"

from .ingest import ActivityEvent, EventKind, IngestError, InstanceWindow, read_events  # noqa: E402
from .pipeline import AnalysisConfig, InstanceReport, analyze_events, analyze_table, evolution  # noqa: E402

__all__ = [
    "ActivityEvent", "EventKind", "IngestError", "InstanceWindow", "read_events",
    "AnalysisConfig", "InstanceReport", "analyze_events", "analyze_table", "evolution",
]

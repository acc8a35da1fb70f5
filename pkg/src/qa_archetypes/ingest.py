"""Activity event ingestion from Stack Exchange dumps and a generic CSV format.

All parsers stream their input: the ``iter_*`` functions yield events while
reading fixed-size chunks, and the ``parse_*`` helpers simply collect them.
Rows that cannot be turned into an event are skipped and tallied in a
:class:`SkipReport`; structurally broken input raises :class:`IngestError`.
"""
from __future__ import annotations

import csv
import enum
import io
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import BinaryIO, Iterable, Iterator
from xml.parsers import expat

CHUNK_SIZE = 1 << 16
MAX_SKIP_EXAMPLES = 20
CSV_HEADER = ("user_id", "timestamp", "kind")


class IngestError(ValueError):
    """Fatal input error (malformed XML, wrong CSV header, no events)."""

    def __init__(self, message, byte_offset=None, line=None):
        super().__init__(message)
        self.byte_offset = byte_offset
        self.line = line


class EventKind(enum.Enum):
    QUESTION = "question"
    ANSWER = "answer"
    COMMENT = "comment"


@dataclass(frozen=True, slots=True)
class ActivityEvent:
    user_id: str
    timestamp: datetime  # timezone-aware UTC, second resolution
    kind: EventKind

    def __post_init__(self):
        if not self.user_id or not self.user_id.strip():
            raise ValueError("user_id must be non-empty")
        if self.timestamp.tzinfo is None:
            raise ValueError("timestamp must be timezone-aware")


@dataclass
class SkipReport:
    """Tally of input rows and the reasons rows were skipped."""

    rows: int = 0
    skipped: Counter = field(default_factory=Counter)
    examples: list = field(default_factory=list)

    @property
    def n_skipped(self):
        return sum(self.skipped.values())

    @property
    def n_valid(self):
        return self.rows - self.n_skipped

    def skip(self, reason, where=None):
        self.skipped[reason] += 1
        if len(self.examples) < MAX_SKIP_EXAMPLES:
            self.examples.append((where, reason))

    def merge(self, other):
        self.rows += other.rows
        self.skipped.update(other.skipped)
        room = MAX_SKIP_EXAMPLES - len(self.examples)
        self.examples.extend(other.examples[: max(room, 0)])


@dataclass
class ParseResult:
    events: list
    report: SkipReport


Month = tuple  # (year, month)


def month_of(ts: datetime) -> Month:
    return (ts.year, ts.month)


def month_ordinal(month: Month) -> int:
    return month[0] * 12 + (month[1] - 1)


def month_from_ordinal(n: int) -> Month:
    return (n // 12, n % 12 + 1)


def parse_month(text: str) -> Month:
    """Parse ``YYYY-MM`` into a ``(year, month)`` pair."""
    try:
        year, month = text.strip().split("-")
        year, month = int(year), int(month)
    except ValueError:
        raise ValueError(f"expected YYYY-MM, got {text!r}") from None
    if not 1 <= month <= 12:
        raise ValueError(f"month out of range in {text!r}")
    return (year, month)


def format_month(month: Month) -> str:
    return f"{month[0]:04d}-{month[1]:02d}"


@dataclass(frozen=True)
class InstanceWindow:
    """Inclusive span of calendar months observed for one instance."""

    start_month: Month
    end_month: Month

    def __post_init__(self):
        for m in (self.start_month, self.end_month):
            if not 1 <= m[1] <= 12:
                raise ValueError(f"invalid month {m}")
        if month_ordinal(self.start_month) > month_ordinal(self.end_month):
            raise ValueError("start_month must not be after end_month")

    @property
    def month_count(self) -> int:
        return month_ordinal(self.end_month) - month_ordinal(self.start_month) + 1

    def index_of(self, month: Month) -> int:
        """Zero-based position of ``month`` in the window (may fall outside)."""
        return month_ordinal(month) - month_ordinal(self.start_month)

    def month_at(self, index: int) -> Month:
        return month_from_ordinal(month_ordinal(self.start_month) + index)

    def contains(self, month: Month) -> bool:
        return 0 <= self.index_of(month) < self.month_count

    def prefix(self, n_months: int) -> "InstanceWindow":
        return InstanceWindow(self.start_month, self.month_at(n_months - 1))


def derive_window(events: Iterable[ActivityEvent], end_month: Month | None = None) -> InstanceWindow:
    """Window from the earliest to the latest event month.

    ``end_month`` overrides the final month, e.g. to pin a fixed observation
    cutoff shared by several instances.
    """
    lo = hi = None
    for ev in events:
        o = month_ordinal(month_of(ev.timestamp))
        lo = o if lo is None or o < lo else lo
        hi = o if hi is None or o > hi else hi
    if lo is None:
        raise IngestError("no events")
    end = end_month if end_month is not None else month_from_ordinal(hi)
    return InstanceWindow(month_from_ordinal(lo), end)


# -- timestamps -------------------------------------------------------------

def parse_dump_timestamp(text: str) -> datetime:
    """Dump timestamps (``YYYY-MM-DDThh:mm:ss.fff``) carry no offset; read as UTC."""
    ts = datetime.fromisoformat(text.strip())
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc).replace(microsecond=0)


def parse_rfc3339(text: str) -> datetime:
    """Parse an RFC 3339 timestamp; an explicit offset or ``Z`` is required."""
    s = text.strip()
    if len(s) < 20 or s[10] not in "Tt ":
        raise ValueError(f"not an RFC 3339 timestamp: {text!r}")
    if s[-1] in "Zz":
        s = s[:-1] + "+00:00"
    ts = datetime.fromisoformat(s)
    if ts.tzinfo is None:
        raise ValueError(f"timestamp lacks an offset: {text!r}")
    return ts.astimezone(timezone.utc).replace(microsecond=0)


def format_rfc3339(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


# -- Stack Exchange XML -----------------------------------------------------

def _iter_dump_rows(stream: BinaryIO, root_name: str, on_row) -> Iterator[ActivityEvent]:
    """Drive expat over ``stream`` in chunks, yielding whatever ``on_row`` produced."""
    parser = expat.ParserCreate()
    pending: list = []
    depth = 0
    seen_root = False

    def start(name, attrs):
        nonlocal depth, seen_root
        if depth == 0:
            if name != root_name:
                raise IngestError(
                    f"expected root element <{root_name}>, found <{name}>",
                    byte_offset=parser.CurrentByteIndex,
                )
            seen_root = True
        elif depth == 1 and name == "row":
            ev = on_row(attrs, parser.CurrentByteIndex)
            if ev is not None:
                pending.append(ev)
        depth += 1

    def end(name):
        nonlocal depth
        depth -= 1

    parser.StartElementHandler = start
    parser.EndElementHandler = end

    def feed(data, final):
        try:
            parser.Parse(data, final)
        except expat.ExpatError as exc:
            raise IngestError(
                f"malformed XML at byte {parser.ErrorByteIndex}: {expat.errors.messages[exc.code]}",
                byte_offset=parser.ErrorByteIndex,
                line=exc.lineno,
            ) from None

    while True:
        chunk = stream.read(CHUNK_SIZE)
        if not chunk:
            break
        feed(chunk, False)
        if pending:
            yield from pending
            pending.clear()
    feed(b"", True)
    yield from pending
    if not seen_root:
        raise IngestError("empty document", byte_offset=0)


_POST_KINDS = {"1": EventKind.QUESTION, "2": EventKind.ANSWER}


def iter_stackexchange_posts(stream: BinaryIO, report: SkipReport | None = None) -> Iterator[ActivityEvent]:
    """Stream question/answer events from a ``Posts.xml`` dump."""
    report = report if report is not None else SkipReport()

    def on_row(attrs, offset):
        report.rows += 1
        kind = _POST_KINDS.get(attrs.get("PostTypeId", "").strip())
        if kind is None:
            report.skip("post_type", offset)
            return None
        user = attrs.get("OwnerUserId", "").strip()
        if not user:
            report.skip("missing_user", offset)
            return None
        try:
            ts = parse_dump_timestamp(attrs["CreationDate"])
        except (KeyError, ValueError):
            report.skip("bad_timestamp", offset)
            return None
        return ActivityEvent(user, ts, kind)

    return _iter_dump_rows(stream, "posts", on_row)


def iter_stackexchange_comments(stream: BinaryIO, report: SkipReport | None = None) -> Iterator[ActivityEvent]:
    """Stream comment events from a ``Comments.xml`` dump."""
    report = report if report is not None else SkipReport()

    def on_row(attrs, offset):
        report.rows += 1
        user = attrs.get("UserId", "").strip()
        if not user:
            report.skip("missing_user", offset)
            return None
        try:
            ts = parse_dump_timestamp(attrs["CreationDate"])
        except (KeyError, ValueError):
            report.skip("bad_timestamp", offset)
            return None
        return ActivityEvent(user, ts, EventKind.COMMENT)

    return _iter_dump_rows(stream, "comments", on_row)


def parse_stackexchange_posts(stream: BinaryIO) -> ParseResult:
    report = SkipReport()
    return ParseResult(list(iter_stackexchange_posts(stream, report)), report)


def parse_stackexchange_comments(stream: BinaryIO) -> ParseResult:
    report = SkipReport()
    return ParseResult(list(iter_stackexchange_comments(stream, report)), report)


# -- generic CSV ------------------------------------------------------------

def iter_event_csv(stream: BinaryIO, report: SkipReport | None = None) -> Iterator[ActivityEvent]:
    """Stream events from ``user_id,timestamp,kind`` CSV (UTF-8, LF or CRLF)."""
    report = report if report is not None else SkipReport()
    text = io.TextIOWrapper(stream, encoding="utf-8-sig", newline="")
    try:
        yield from _csv_rows(csv.reader(text), report)
    finally:
        text.detach()


def _csv_rows(reader, report):
    try:
        header = next(reader)
    except StopIteration:
        raise IngestError("empty CSV: missing header", line=1) from None
    except (UnicodeDecodeError, csv.Error) as exc:
        raise IngestError(f"unreadable CSV header: {exc}", line=1) from None
    if tuple(h.strip() for h in header) != CSV_HEADER:
        raise IngestError(f"bad header {header!r}; expected {','.join(CSV_HEADER)}", line=1)

    while True:
        try:
            row = next(reader)
        except StopIteration:
            break
        except (UnicodeDecodeError, csv.Error) as exc:
            raise IngestError(f"unreadable CSV near line {reader.line_num}: {exc}", line=reader.line_num) from None
        line = reader.line_num
        if not row:
            continue
        report.rows += 1
        if len(row) != 3:
            report.skip("field_count", line)
            continue
        user, stamp, kind_text = row
        user = user.strip()
        if not user:
            report.skip("missing_user", line)
            continue
        try:
            kind = EventKind(kind_text.strip().lower())
        except ValueError:
            report.skip("bad_kind", line)
            continue
        try:
            ts = parse_rfc3339(stamp)
        except ValueError:
            report.skip("bad_timestamp", line)
            continue
        yield ActivityEvent(user, ts, kind)


def parse_event_csv(stream: BinaryIO) -> ParseResult:
    report = SkipReport()
    return ParseResult(list(iter_event_csv(stream, report)), report)


def write_event_csv(events: Iterable[ActivityEvent], out) -> int:
    """Write events to a text stream in the generic CSV format. Returns the row count."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    n = 0
    for ev in events:
        writer.writerow((ev.user_id, format_rfc3339(ev.timestamp), ev.kind.value))
        n += 1
    return n


def sniff_format(head: bytes) -> str:
    """Guess ``posts``, ``comments`` or ``csv`` from the first bytes of a file."""
    text = head.lstrip(b"\xef\xbb\xbf").lstrip()
    if not text.startswith(b"<"):
        return "csv"
    parser = expat.ParserCreate()
    found = []

    def start(name, attrs):
        found.append(name)
        raise StopIteration

    parser.StartElementHandler = start
    try:
        parser.Parse(text, False)
    except StopIteration:
        pass
    except expat.ExpatError as exc:
        raise IngestError(
            f"malformed XML at byte {parser.ErrorByteIndex}: {expat.errors.messages[exc.code]}",
            byte_offset=parser.ErrorByteIndex,
        ) from None
    if found and found[0] in ("posts", "comments"):
        return found[0]
    raise IngestError(f"unsupported XML root {found[0] if found else '?'!r}")


def read_events(path, report: SkipReport | None = None) -> list:
    """Load all events from a dump XML or event CSV file, detecting the format."""
    report = report if report is not None else SkipReport()
    with open(path, "rb") as fh:
        fmt = sniff_format(fh.read(4096))
        fh.seek(0)
        if fmt == "posts":
            return list(iter_stackexchange_posts(fh, report))
        if fmt == "comments":
            return list(iter_stackexchange_comments(fh, report))
        return list(iter_event_csv(fh, report))

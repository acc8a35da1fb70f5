import io
from datetime import datetime, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qa_archetypes import ingest as I
from qa_archetypes.ingest import ActivityEvent, EventKind
from xmlgen import peak_parse_memory

UTC = timezone.utc

POSTS = b"""<?xml version="1.0" encoding="utf-8"?>
<posts>
  <row Id="1" PostTypeId="1" CreationDate="2014-04-01T10:00:00.000" OwnerUserId="7" />
  <row Id="2" PostTypeId="2" CreationDate="2014-04-02T00:00:00.000" OwnerUserId="9" />
  <row Id="3" PostTypeId="1" CreationDate="2014-04-01T10:00:00.000" />
</posts>
"""

COMMENTS = b"""<?xml version="1.0" encoding="utf-8"?>
<comments>
  <row Id="1" PostId="1" CreationDate="2015-01-15T08:30:00.000" UserId="42" />
  <row Id="2" PostId="1" CreationDate="2015-01-16T09:00:00.000" />
  <row Id="3" PostId="2" CreationDate="2015-02-01T23:59:59.997" UserId="7" />
</comments>
"""


def test_posts_fixture():
    res = I.parse_stackexchange_posts(io.BytesIO(POSTS))
    assert res.events == [
        ActivityEvent("7", datetime(2014, 4, 1, 10, tzinfo=UTC), EventKind.QUESTION),
        ActivityEvent("9", datetime(2014, 4, 2, tzinfo=UTC), EventKind.ANSWER),
    ]
    assert res.report.rows == 3
    assert res.report.skipped == {"missing_user": 1}


def test_comments_fixture():
    res = I.parse_stackexchange_comments(io.BytesIO(COMMENTS))
    assert res.events == [
        ActivityEvent("42", datetime(2015, 1, 15, 8, 30, tzinfo=UTC), EventKind.COMMENT),
        ActivityEvent("7", datetime(2015, 2, 1, 23, 59, 59, tzinfo=UTC), EventKind.COMMENT),
    ]
    assert res.report.n_skipped == 1


def test_empty_comments_document():
    res = I.parse_stackexchange_comments(io.BytesIO(b"<comments/>"))
    assert res.events == [] and res.report.rows == 0 and res.report.n_skipped == 0


def test_posts_skip_reasons():
    doc = b"""<posts>
      <row PostTypeId="3" CreationDate="2014-04-01T10:00:00.000" OwnerUserId="1"/>
      <row PostTypeId="1" CreationDate="yesterday" OwnerUserId="1"/>
      <row PostTypeId="2" OwnerUserId="1"/>
      <row PostTypeId="2" CreationDate="2014-04-01T10:00:00.000" OwnerUserId="  "/>
      <row PostTypeId="2" CreationDate="2014-04-01T10:00:00.000" OwnerUserId="5"><row PostTypeId="1"/></row>
    </posts>"""
    res = I.parse_stackexchange_posts(io.BytesIO(doc))
    assert [e.user_id for e in res.events] == ["5"]
    assert res.report.skipped == {"post_type": 1, "bad_timestamp": 2, "missing_user": 1}
    assert res.report.n_valid + res.report.n_skipped == res.report.rows == 5


def test_malformed_xml_reports_byte_offset():
    doc = b"<posts>\n  <row PostTypeId='1' <oops\n</posts>"
    with pytest.raises(I.IngestError) as info:
        I.parse_stackexchange_posts(io.BytesIO(doc))
    assert info.value.byte_offset == doc.index(b"<oops")
    assert "byte" in str(info.value)


def test_wrong_root_rejected():
    with pytest.raises(I.IngestError, match="root"):
        I.parse_stackexchange_posts(io.BytesIO(b"<comments/>"))


def test_streaming_yields_before_end():
    # rows before a late syntax error are delivered first
    good = b"".join(b'<row PostTypeId="1" CreationDate="2014-04-01T10:00:00.000" OwnerUserId="1"/>'
                    for _ in range(2000))
    it = I.iter_stackexchange_posts(io.BytesIO(b"<posts>" + good + b"<broken"))
    first = next(it)
    assert first.user_id == "1"
    with pytest.raises(I.IngestError):
        list(it)


def test_streaming_memory_independent_of_length():
    small, n1 = peak_parse_memory(I.iter_stackexchange_posts, 20_000)
    large, n2 = peak_parse_memory(I.iter_stackexchange_posts, 200_000)
    assert (n1, n2) == (20_000, 200_000)
    assert large < small + 256 * 1024


# -- CSV ---------------------------------------------------------------------

def _csv(text):
    return I.parse_event_csv(io.BytesIO(text.encode()))


def test_csv_examples():
    res = _csv("user_id,timestamp,kind\nu1,2016-02-01T00:00:00Z,question\r\n"
               "u1,2016-02-01T00:00:00Z,QUESTION\nu1,not-a-date,answer\n")
    want = ActivityEvent("u1", datetime(2016, 2, 1, tzinfo=UTC), EventKind.QUESTION)
    assert res.events == [want, want]
    assert res.report.skipped == {"bad_timestamp": 1}
    assert res.report.examples == [(4, "bad_timestamp")]


def test_csv_offsets_normalised_to_utc():
    res = _csv("user_id,timestamp,kind\nu,2016-02-01T01:30:00+02:00,comment\n")
    assert res.events[0].timestamp == datetime(2016, 1, 31, 23, 30, tzinfo=UTC)


def test_csv_bad_rows_tallied():
    res = _csv("user_id,timestamp,kind\n,2016-02-01T00:00:00Z,answer\nu,2016-02-01T00:00:00Z,vote\n"
               "u,2016-02-01T00:00:00Z\nu,2016-02-01T00:00:00,answer\n\n")
    assert res.events == []
    assert res.report.skipped == {"missing_user": 1, "bad_kind": 1, "field_count": 1, "bad_timestamp": 1}
    assert res.report.rows == 4


def test_csv_bad_header_is_fatal():
    with pytest.raises(I.IngestError, match="header"):
        _csv("user,timestamp,kind\nu1,2016-02-01T00:00:00Z,question\n")
    with pytest.raises(I.IngestError):
        _csv("")


def test_csv_does_not_close_caller_stream():
    buf = io.BytesIO(b"user_id,timestamp,kind\nu,2016-02-01T00:00:00Z,answer\n")
    I.parse_event_csv(buf)
    assert not buf.closed


events_st = st.lists(st.builds(
    ActivityEvent,
    st.text(st.characters(blacklist_categories=("Cs", "Cc", "Zl", "Zp")), min_size=1, max_size=8)
      .filter(lambda s: s.strip() == s and s),
    st.datetimes(min_value=datetime(1990, 1, 1), max_value=datetime(2100, 1, 1))
      .map(lambda d: d.replace(microsecond=0, tzinfo=UTC)),
    st.sampled_from(list(EventKind)),
), max_size=30)


@settings(max_examples=150, deadline=None)
@given(events_st)
def test_csv_round_trip(events):
    out = io.StringIO()
    I.write_event_csv(events, out)
    assert _csv(out.getvalue()).events == events


# -- windows -----------------------------------------------------------------

def _ev(*ymd):
    return ActivityEvent("u", datetime(*ymd, tzinfo=UTC), EventKind.ANSWER)


def test_derive_window_examples():
    w = I.derive_window([_ev(2015, 2, 20), _ev(2014, 4, 3)])
    assert (w.start_month, w.end_month, w.month_count) == ((2014, 4), (2015, 2), 11)
    w = I.derive_window([_ev(2016, 6, 10)])
    assert (w.start_month, w.end_month, w.month_count) == ((2016, 6), (2016, 6), 1)
    with pytest.raises(I.IngestError, match="no events"):
        I.derive_window([])


def test_derive_window_override():
    w = I.derive_window([_ev(2014, 4, 3)], end_month=(2017, 2))
    assert w.month_count == 35
    assert w.month_at(34) == (2017, 2)
    assert w.prefix(12).end_month == (2015, 3)
    with pytest.raises(ValueError):
        I.InstanceWindow((2015, 1), (2014, 12))


def test_event_validation():
    with pytest.raises(ValueError):
        ActivityEvent("  ", datetime(2014, 1, 1, tzinfo=UTC), EventKind.ANSWER)
    with pytest.raises(ValueError):
        ActivityEvent("u", datetime(2014, 1, 1), EventKind.ANSWER)


def test_read_events_sniffs_format(tmp_path):
    (tmp_path / "p.xml").write_bytes(POSTS)
    (tmp_path / "c.xml").write_bytes(COMMENTS)
    (tmp_path / "e.csv").write_text("user_id,timestamp,kind\nu1,2016-02-01T00:00:00Z,question\n")
    assert len(I.read_events(tmp_path / "p.xml")) == 2
    assert {e.kind for e in I.read_events(tmp_path / "c.xml")} == {EventKind.COMMENT}
    assert len(I.read_events(tmp_path / "e.csv")) == 1
    (tmp_path / "u.xml").write_bytes(b"<users/>")
    with pytest.raises(I.IngestError):
        I.read_events(tmp_path / "u.xml")

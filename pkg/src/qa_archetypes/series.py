"""Per-user monthly activity series over an instance window."""
from __future__ import annotations

import csv
import re
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .ingest import ActivityEvent, EventKind, InstanceWindow, Month, month_of, month_ordinal

KINDS = ("questions", "answers")


def user_sort_key(user_id: str):
    """Natural ordering: numeric ids by value, then everything else lexically."""
    parts = re.split(r"(\d+)", user_id)
    return tuple((0, int(p), "") if p.isdigit() else (1, 0, p) for p in parts if p)


@dataclass(frozen=True)
class UserActivitySeries:
    user_id: str
    questions: np.ndarray
    answers: np.ndarray  # answers and comments combined

    def kind(self, name: str) -> np.ndarray:
        return self.questions if name == "questions" else self.answers


class SeriesTable(Mapping):
    """All users' series for one window, stored as two ``(n_users, T)`` matrices.

    Behaves as a read-only mapping ``user_id -> UserActivitySeries``; rows are
    in natural user-id order.
    """

    def __init__(self, window: InstanceWindow, user_ids, questions, answers, dropped=0):
        self.window = window
        self.user_ids = list(user_ids)
        self.questions = np.asarray(questions, dtype=np.int64).reshape(len(self.user_ids), window.month_count)
        self.answers = np.asarray(answers, dtype=np.int64).reshape(len(self.user_ids), window.month_count)
        self.dropped = dropped
        self._row = {u: i for i, u in enumerate(self.user_ids)}

    def __getitem__(self, user_id):
        i = self._row[user_id]
        return UserActivitySeries(user_id, self.questions[i], self.answers[i])

    def __iter__(self):
        return iter(self.user_ids)

    def __len__(self):
        return len(self.user_ids)

    def matrix(self, kind: str) -> np.ndarray:
        if kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
        return self.questions if kind == "questions" else self.answers

    def truncated(self, n_months: int) -> "SeriesTable":
        """The table restricted to the first ``n_months`` of the window.

        Users without activity in the kept months are removed.
        """
        q = self.questions[:, :n_months]
        a = self.answers[:, :n_months]
        keep = (q.sum(axis=1) + a.sum(axis=1)) > 0
        users = [u for u, k in zip(self.user_ids, keep) if k]
        return SeriesTable(self.window.prefix(n_months), users, q[keep], a[keep])


def build_user_series(events: Iterable[ActivityEvent], window: InstanceWindow) -> SeriesTable:
    """Count each user's questions and answers+comments per calendar month.

    Events outside ``window`` are dropped and counted in ``SeriesTable.dropped``.
    Users appear only if they have at least one event inside the window.
    """
    counts: dict[str, dict] = {}
    dropped = 0
    t = window.month_count
    for ev in events:
        idx = window.index_of(month_of(ev.timestamp))
        if not 0 <= idx < t:
            dropped += 1
            continue
        slot = 0 if ev.kind is EventKind.QUESTION else 1
        per_user = counts.setdefault(ev.user_id, {})
        key = (slot, idx)
        per_user[key] = per_user.get(key, 0) + 1

    users = sorted(counts, key=user_sort_key)
    q = np.zeros((len(users), t), dtype=np.int64)
    a = np.zeros((len(users), t), dtype=np.int64)
    for row, user in enumerate(users):
        for (slot, idx), c in counts[user].items():
            (q if slot == 0 else a)[row, idx] = c
    return SeriesTable(window, users, q, a, dropped)


def truncate_events(events: Iterable[ActivityEvent], cutoff_month: Month) -> list:
    """Events whose calendar month is at or before ``cutoff_month``."""
    limit = month_ordinal(cutoff_month)
    return [ev for ev in events if month_ordinal(month_of(ev.timestamp)) <= limit]


@dataclass(frozen=True)
class MonthlyTotals:
    totals: np.ndarray
    questions: np.ndarray
    answers: np.ndarray


def total_activity(table: SeriesTable) -> MonthlyTotals:
    q = table.questions.sum(axis=0)
    a = table.answers.sum(axis=0)
    return MonthlyTotals(q + a, q, a)


def write_series_csv(table: SeriesTable, out) -> None:
    """Long-form export ``user_id,kind,month_index,count``; zero cells are omitted."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(("user_id", "kind", "month_index", "count"))
    for kind in KINDS:
        mat = table.matrix(kind)
        rows, cols = np.nonzero(mat)
        for r, c in zip(rows.tolist(), cols.tolist()):
            writer.writerow((table.user_ids[r], kind, c, int(mat[r, c])))

"""Synthetic Q&A instances built from archetype mixtures with known labels.

Every user draws a set of active months and Poisson-distributed counts per
active month. The construction guarantees each archetype's feature corner:

* NonRecurring -- a single active month
* Sporadic -- 2-3 separated months with identical counts (duplicate maximum)
* Frequent -- >= 12 isolated active months, one strict answer maximum
* Permanent -- >= 14 isolated active months, tied answer maxima
* Irregular -- one burst of consecutive months (ground truth ``Variant``)

Specs are read from INI files; see :func:`parse_spec`.
"""
from __future__ import annotations

import calendar
import configparser
import csv
import warnings
from dataclasses import dataclass, field, fields
from datetime import datetime, timedelta, timezone

import numpy as np

from .archetype import FREQUENT, NAMED, NON_RECURRING, PERMANENT, SPORADIC
from .ingest import (ActivityEvent, EventKind, InstanceWindow, format_month, month_ordinal,
                     parse_month)
from .series import user_sort_key

IRREGULAR = "Irregular"
VARIANT_LABEL = "Variant"
ARCHETYPES = NAMED + (IRREGULAR,)

# average user shares per archetype reported for Stack Exchange instances
DEFAULT_USER_FRACTIONS = {NON_RECURRING: 0.884, SPORADIC: 0.101, FREQUENT: 0.013, PERMANENT: 0.002}

# rates are mean counts per active month; counts marked "shifted" are 1 + Poisson(rate - 1)
ARCHETYPE_DEFAULTS = {
    NON_RECURRING: dict(question_rate=1.0, answer_rate=1.27, active_months=1,
                        extra_active_months=0.0, tenure_slack=0.0, rate_shape=0.0),
    SPORADIC: dict(question_rate=1.045, answer_rate=1.13, active_months=2,
                   extra_active_months=0.06, tenure_slack=4.0, rate_shape=0.0),
    FREQUENT: dict(question_rate=1.6, answer_rate=2.35, active_months=12,
                   extra_active_months=0.3, tenure_slack=9.0, rate_shape=2.0),
    PERMANENT: dict(question_rate=1.87, answer_rate=4.05, active_months=14,
                    extra_active_months=0.3, tenure_slack=6.0, rate_shape=2.0),
    IRREGULAR: dict(question_rate=1.0, answer_rate=2.0, active_months=2,
                    extra_active_months=2.0, tenure_slack=0.0, rate_shape=2.0),
}
MAX_ACTIVE = {NON_RECURRING: 1, SPORADIC: 3}
SHIFTED_QUESTIONS = {NON_RECURRING, SPORADIC}


class SpecError(ValueError):
    """Invalid mixture specification; ``field`` names the offending key."""

    def __init__(self, field_name, message):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class UserGroup:
    archetype: str
    users: int
    question_rate: float
    answer_rate: float
    active_months: int
    extra_active_months: float
    tenure_slack: float
    rate_shape: float = 0.0  # Gamma shape of per-user rate multipliers; 0 = identical users
    first_month: int = 0
    last_month: int | None = None  # inclusive; None = final month

    @classmethod
    def of(cls, archetype, users, **overrides):
        if archetype not in ARCHETYPE_DEFAULTS:
            raise SpecError("archetype", f"unknown archetype {archetype!r}")
        params = dict(ARCHETYPE_DEFAULTS[archetype])
        params.update(overrides)
        return cls(archetype=archetype, users=users, **params)


@dataclass
class MixtureSpec:
    months: int = 60
    seed: int = 42
    start_month: tuple = (2014, 1)
    comment_share: float = 0.4  # fraction of answer-series activity emitted as comments
    groups: list = field(default_factory=list)

    @property
    def window(self) -> InstanceWindow:
        end = month_ordinal(self.start_month) + self.months - 1
        return InstanceWindow(self.start_month, (end // 12, end % 12 + 1))

    @property
    def n_users(self) -> int:
        return sum(g.users for g in self.groups)


def _largest_remainder(total, fractions):
    raw = {k: total * f for k, f in fractions.items()}
    counts = {k: int(np.floor(v)) for k, v in raw.items()}
    left = total - sum(counts.values())
    for k in sorted(raw, key=lambda k: (counts[k] - raw[k], list(raw).index(k)))[:left]:
        counts[k] += 1
    return counts


def default_spec(n_users: int = 1000, months: int = 60, seed: int = 42) -> MixtureSpec:
    """Four-archetype mixture with the average Stack Exchange user shares."""
    counts = _largest_remainder(n_users, DEFAULT_USER_FRACTIONS)
    return MixtureSpec(months=months, seed=seed,
                       groups=[UserGroup.of(a, counts[a]) for a in NAMED])


def staged_spec(seed: int = 42) -> MixtureSpec:
    """36-month instance whose mixture shifts every 12 months.

    Months 0-11 are Variant-heavy (bursty Irregular users next to one-off
    users), months 12-23 bring a wave of NonRecurring users, and a Frequent
    cohort arriving from month 12 leads answer activity in months 24-35.
    Meant for maturity-evolution checks.
    """
    g = UserGroup.of
    return MixtureSpec(months=36, seed=seed, groups=[
        g(IRREGULAR, 100, last_month=11),
        g(NON_RECURRING, 300, last_month=11),
        g(NON_RECURRING, 2000, first_month=12, last_month=23),
        g(SPORADIC, 100),
        g(FREQUENT, 120, first_month=12, answer_rate=3.0),
        g(PERMANENT, 8),
    ])


def validate_spec(spec: MixtureSpec) -> None:
    if spec.months < 1:
        raise SpecError("months", "must be >= 1")
    if not 4 <= spec.months <= 80:
        warnings.warn(f"months={spec.months} outside the 4-80 range seen in practice", RuntimeWarning, stacklevel=2)
    if not 0 <= spec.comment_share <= 1:
        raise SpecError("comment_share", "must lie in [0, 1]")
    for g in spec.groups:
        if g.archetype not in ARCHETYPE_DEFAULTS:
            raise SpecError("archetype", f"unknown archetype {g.archetype!r}")
        if g.users < 0:
            raise SpecError("users", "must be >= 0")
        if g.users == 0:
            continue
        if g.answer_rate < 1:
            raise SpecError("answer_rate", "must be >= 1 (every active month has an answer)")
        if g.archetype in SHIFTED_QUESTIONS and g.question_rate < 1:
            raise SpecError("question_rate", f"must be >= 1 for {g.archetype}")
        if g.question_rate <= 0:
            raise SpecError("question_rate", "must be > 0")
        if g.active_months < 1:
            raise SpecError("active_months", "must be >= 1")
        for key in ("extra_active_months", "tenure_slack", "rate_shape"):
            if getattr(g, key) < 0:
                raise SpecError(key, "must be >= 0")
        last = spec.months - 1 if g.last_month is None else g.last_month
        if not 0 <= g.first_month <= last < spec.months:
            raise SpecError("first_month", "placement range must lie inside the instance")
        need = _min_span(g.archetype, g.active_months)
        if last - g.first_month + 1 < need:
            raise SpecError("months", f"{g.archetype} users need {need} months, only "
                                      f"{last - g.first_month + 1} available")


def _min_span(archetype, active):
    if archetype == IRREGULAR:
        return active
    return 2 * active - 1


def _shifted_poisson(rng, rate, size=None):
    return 1 + rng.poisson(rate - 1.0, size=size)


def _isolated_positions(rng, m, span):
    """``m`` pairwise non-adjacent offsets in ``[0, span)`` including both ends."""
    if m == 1:
        return np.array([0])
    c = np.sort(rng.choice(span - m - 1, size=m - 2, replace=False)) if m > 2 else np.array([], int)
    inner = 2 + c + np.arange(m - 2)
    return np.concatenate(([0], inner, [span - 1]))


def generate_user(archetype: str, months: int, seed=None, group: UserGroup | None = None,
                  first_month: int = 0, last_month: int | None = None):
    """One synthetic user: ``(questions, answers, ground_truth_label)``.

    Raises ``ValueError`` when the placement range is too short for the
    archetype's active-month requirement.
    """
    g = group if group is not None else UserGroup.of(archetype, 1)
    if group is not None:
        first_month, last_month = g.first_month, g.last_month
    if months < 1:
        raise ValueError("months must be >= 1")
    last = months - 1 if last_month is None else last_month
    avail = last - first_month + 1
    if avail < _min_span(archetype, g.active_months):
        raise ValueError(f"{archetype} needs at least {_min_span(archetype, g.active_months)} months, got {avail}")
    rng = np.random.default_rng(seed)
    # mean-one Gamma multiplier on the Poisson part of both rates
    scale = rng.gamma(g.rate_shape, 1.0 / g.rate_shape) if g.rate_shape > 0 else 1.0
    q_rate = g.question_rate * scale
    a_rate = 1.0 + (g.answer_rate - 1.0) * scale

    m = g.active_months + int(rng.poisson(g.extra_active_months)) if g.extra_active_months else g.active_months
    m = min(m, MAX_ACTIVE.get(archetype, m))
    q = np.zeros(months, dtype=np.int64)
    a = np.zeros(months, dtype=np.int64)

    if archetype == IRREGULAR:
        m = min(m, avail)
        start = first_month + int(rng.integers(0, avail - m + 1))
        idx = np.arange(start, start + m)
        q[idx] = rng.poisson(q_rate, size=m)
        a[idx] = _shifted_poisson(rng, a_rate, size=m)
        return q, a, VARIANT_LABEL

    m = min(m, (avail + 1) // 2)
    span = 1 if m == 1 else min(avail, 2 * m - 1 + int(rng.poisson(g.tenure_slack)))
    start = first_month + int(rng.integers(0, avail - span + 1))
    idx = start + _isolated_positions(rng, m, span)

    if archetype in (NON_RECURRING, SPORADIC):
        # one height per kind, repeated across active months
        q[idx] = _shifted_poisson(rng, 1.0 + (g.question_rate - 1.0) * scale)
        a[idx] = _shifted_poisson(rng, a_rate)
        return q, a, archetype

    q[idx] = rng.poisson(q_rate, size=m)
    counts = _shifted_poisson(rng, a_rate, size=m)
    top = np.flatnonzero(counts == counts.max())
    if archetype == FREQUENT and len(top) > 1:
        counts[rng.choice(top)] += 1
    elif archetype == PERMANENT and len(top) == 1:
        others = np.delete(np.arange(m), top[0])
        counts[rng.choice(others)] = counts[top[0]]
    a[idx] = counts
    return q, a, archetype


@dataclass
class SyntheticInstance:
    events: list
    labels: dict  # user_id -> ground-truth archetype
    series: dict  # user_id -> (questions, answers)
    window: InstanceWindow


def _user_seed(seed, group_index, user_index):
    return np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=(group_index, user_index))


def _month_start(window, index):
    y, mo = window.month_at(index)
    return datetime(y, mo, 1, tzinfo=timezone.utc), calendar.monthrange(y, mo)[1] * 86400


def generate_instance(spec: MixtureSpec) -> SyntheticInstance:
    """Realise a mixture as an event stream plus ground-truth labels.

    Events of a user-month are spread uniformly over that month; answer-series
    activity is split between answers and comments by ``comment_share``.
    """
    validate_spec(spec)
    window = spec.window
    labels, series = {}, {}
    events = []
    uid = 0
    for gi, g in enumerate(spec.groups):
        for ui in range(g.users):
            uid += 1
            user = str(uid)
            ss = _user_seed(spec.seed, gi, ui)
            gen_seed, place_seed = ss.spawn(2)
            q, a, label = generate_user(g.archetype, spec.months, gen_seed, group=g)
            labels[user] = label
            series[user] = (q, a)
            rng = np.random.default_rng(place_seed)
            for t in np.flatnonzero((q + a) > 0).tolist():
                base, secs = _month_start(window, t)
                n_comments = int(rng.binomial(a[t], spec.comment_share))
                kinds = ([EventKind.QUESTION] * int(q[t]) + [EventKind.ANSWER] * int(a[t] - n_comments)
                         + [EventKind.COMMENT] * n_comments)
                offsets = rng.integers(0, secs, size=len(kinds))
                events.extend(ActivityEvent(user, base + timedelta(seconds=int(o)), k)
                              for o, k in zip(offsets.tolist(), kinds))
    kind_rank = {EventKind.QUESTION: 0, EventKind.ANSWER: 1, EventKind.COMMENT: 2}
    events.sort(key=lambda e: (e.timestamp, user_sort_key(e.user_id), kind_rank[e.kind]))
    return SyntheticInstance(events, labels, series, window)


# -- INI spec files ---------------------------------------------------------

_INT_KEYS = {"users", "active_months", "first_month", "last_month"}
_FLOAT_KEYS = {"question_rate", "answer_rate", "extra_active_months", "tenure_slack", "rate_shape"}


def parse_spec(text: str) -> MixtureSpec:
    """Parse an INI mixture spec.

    ``[instance]`` takes ``months``, ``seed``, ``start`` (YYYY-MM) and
    ``comment_share``. Each ``[group NAME]`` section takes ``archetype`` and
    ``users`` plus optional overrides of the archetype defaults
    (``question_rate``, ``answer_rate``, ``active_months``,
    ``extra_active_months``, ``tenure_slack``, ``rate_shape``, ``first_month``,
    ``last_month``).
    Without any group section the default four-archetype mixture is used.
    """
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise SpecError("file", str(exc).splitlines()[0]) from None
    inst = cp["instance"] if cp.has_section("instance") else {}

    def get(section, key, conv, default):
        if key not in section:
            return default
        raw = section[key]
        try:
            return conv(raw)
        except ValueError:
            raise SpecError(key, f"cannot parse {raw!r}") from None

    spec = MixtureSpec(
        months=get(inst, "months", int, 60),
        seed=get(inst, "seed", int, 42),
        start_month=get(inst, "start", parse_month, (2014, 1)),
        comment_share=get(inst, "comment_share", float, 0.4),
    )
    unknown = set(inst) - {"months", "seed", "start", "comment_share"}
    if unknown:
        raise SpecError(sorted(unknown)[0], "unknown key in [instance]")

    group_sections = [s for s in cp.sections() if s.startswith("group")]
    for name in group_sections:
        sec = cp[name]
        if "archetype" not in sec:
            raise SpecError("archetype", f"missing in [{name}]")
        if "users" not in sec:
            raise SpecError("users", f"missing in [{name}]")
        overrides = {}
        for key in sec:
            if key in ("archetype", "users"):
                continue
            if key in _INT_KEYS:
                overrides[key] = get(sec, key, int, None)
            elif key in _FLOAT_KEYS:
                overrides[key] = get(sec, key, float, None)
            else:
                raise SpecError(key, f"unknown key in [{name}]")
        spec.groups.append(UserGroup.of(sec["archetype"].strip(), get(sec, "users", int, 0), **overrides))
    if not group_sections:
        spec.groups = default_spec(1000, spec.months, spec.seed).groups
    validate_spec(spec)
    return spec


def load_spec(path) -> MixtureSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_spec(fh.read())


def format_spec(spec: MixtureSpec) -> str:
    """Inverse of :func:`parse_spec` (all group parameters written explicitly)."""
    lines = ["[instance]", f"months = {spec.months}", f"seed = {spec.seed}",
             f"start = {format_month(spec.start_month)}", f"comment_share = {spec.comment_share!r}", ""]
    for i, g in enumerate(spec.groups):
        lines.append(f"[group {i}]")
        for f in fields(UserGroup):
            v = getattr(g, f.name)
            if v is not None:
                lines.append(f"{f.name} = {v}")
        lines.append("")
    return "\n".join(lines)


def write_labels_csv(labels: dict, out) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(("user_id", "archetype"))
    for user in sorted(labels, key=user_sort_key):
        writer.writerow((user, labels[user]))

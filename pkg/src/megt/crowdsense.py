"""Crowdsensed-report scoring, publish decisions, and incentive payout.

The pipeline ingests Waze-schema report tables
(``object_id,generation_date,day_time,street,incident_type,uuid,
report_rating``), filters spam and duplicates, scores each device's
contributions into a composite reputation in (0, 1), decides per
spatio-temporal window which event type (if any) to publish, and splits
an incentive budget among positive-reputation contributors.

Space-time is discretised into windows of one calendar date times one of
eight 3-hour day segments.  A report's truthfulness is its rating mapped
to (0, 1); its contribution quality is the logit of that; a user's
reputation is the logistic of their cooperativeness-weighted quality
sum.  Cooperativeness comes in three flavours: mechanism A ignores it
(weight 1), mechanism B counts the fraction of windows with an
above-average-rated report, and mechanism C additionally up-weights
windows where cooperative reports are scarce.
"""

from __future__ import annotations

import csv
import datetime as dt
import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "INCIDENT_TYPES",
    "REPORT_COLUMNS",
    "MECHANISMS",
    "ReportRecord",
    "WindowIndex",
    "Rejection",
    "UserProfile",
    "IncentiveConfig",
    "parse_reports",
    "read_reports_csv",
    "write_reports_csv",
    "assign_window",
    "windows_of",
    "neighbours",
    "truthfulness",
    "qoc",
    "qoc_extended",
    "coop_flag",
    "logistic",
    "CorpusStats",
    "compute_corpus_stats",
    "empirical_gamma",
    "composite_rs",
    "build_profiles",
    "confidence",
    "decide_publish",
    "decision_rows",
    "incentives",
    "ScoreResult",
    "score_corpus",
    "write_ledger_csv",
    "write_decisions_csv",
    "SynthSpec",
    "synth_corpus",
]

INCIDENT_TYPES = ("accident", "jam", "road_closure", "weather_hazard")
REPORT_COLUMNS = ("object_id", "generation_date", "day_time", "street",
                  "incident_type", "uuid", "report_rating")
MECHANISMS = ("A", "B", "C")
SEGMENTS_PER_DAY = 8


@dataclass(frozen=True)
class ReportRecord:
    """One validated report row."""

    object_id: str
    generation_date: dt.date
    day_time: dt.time
    street: str
    incident_type: str
    uuid: str
    report_rating: float


@dataclass(frozen=True, order=True)
class WindowIndex:
    """A spatio-temporal bucket: calendar date x 3-hour segment (0-7)."""

    date: dt.date
    segment: int


@dataclass(frozen=True)
class Rejection:
    """Why an input row was dropped; reasons are ``malformed``,
    ``zero_rating`` or ``duplicate``."""

    row_number: int
    reason: str
    detail: str


@dataclass(frozen=True)
class UserProfile:
    """Per-device scoring summary under one mechanism."""

    user_id: str
    report_count: int
    active_windows: tuple[WindowIndex, ...]
    coop_windows: tuple[WindowIndex, ...]
    gamma_emp: float
    rs_raw: float
    rs_norm: float


@dataclass(frozen=True)
class IncentiveConfig:
    """Scoring/DSS/incentive knobs.

    ``preference_factor`` weighs contributor quantity against quality in
    the publish confidence; ``positive_rs_threshold`` marks positive
    reputation (0.5 = the logistic's neutral point); ``epsilon`` clamps
    truthfulness away from {0, 1} and floors window densities.
    """

    budget: float = 100.0
    preference_factor: float = 0.5
    publish_threshold: float = 0.5
    positive_rs_threshold: float = 0.5
    mechanism: str = "C"
    epsilon: float = 0.01

    def __post_init__(self):
        if self.budget < 0:
            raise ValueError(f"budget must be >= 0, got {self.budget}")
        if not 0.0 <= self.preference_factor <= 1.0:
            raise ValueError(
                f"preference_factor must lie in [0, 1], "
                f"got {self.preference_factor}")
        if not 0.0 <= self.publish_threshold <= 1.0:
            raise ValueError(
                f"publish_threshold must lie in [0, 1], "
                f"got {self.publish_threshold}")
        if self.mechanism not in MECHANISMS:
            raise ValueError(
                f"mechanism must be one of {MECHANISMS}, "
                f"got {self.mechanism!r}")
        if not 0.0 < self.epsilon < 0.5:
            raise ValueError(
                f"epsilon must lie in (0, 0.5), got {self.epsilon}")


# ---------------------------------------------------------------------------
# ingestion
# ---------------------------------------------------------------------------

def _parse_row(fields) -> ReportRecord:
    if len(fields) != len(REPORT_COLUMNS):
        raise ValueError(
            f"expected {len(REPORT_COLUMNS)} fields, got {len(fields)}")
    object_id, date_txt, time_txt, street, kind, uuid, rating_txt = (
        f.strip() for f in fields)
    if not object_id or not street or not uuid:
        raise ValueError("empty identifier field")
    if kind not in INCIDENT_TYPES:
        raise ValueError(f"unknown incident_type {kind!r}")
    date = dt.date.fromisoformat(date_txt)
    time = dt.time.fromisoformat(time_txt)
    rating = float(rating_txt)
    if not 0.0 <= rating <= 5.0:
        raise ValueError(f"report_rating {rating} outside [0, 5]")
    return ReportRecord(object_id=object_id, generation_date=date,
                        day_time=time, street=street, incident_type=kind,
                        uuid=uuid, report_rating=rating)


def parse_reports(rows, first_row_number: int = 1
                  ) -> tuple[list[ReportRecord], list[Rejection]]:
    """Validate and filter raw rows into kept records plus a rejection log.

    Three filters apply in order: rows that do not parse are rejected as
    ``malformed`` (logged, never fatal); rows with rating exactly 0 are
    ``zero_rating`` spam; within a (user, window, incident_type) group
    only the first report survives, later ones are ``duplicate``.
    """
    kept: list[ReportRecord] = []
    rejections: list[Rejection] = []
    seen: set[tuple[str, WindowIndex, str]] = set()
    for offset, fields in enumerate(rows):
        row_number = first_row_number + offset
        try:
            record = _parse_row(fields)
        except (ValueError, TypeError) as exc:
            rejections.append(Rejection(row_number, "malformed", str(exc)))
            continue
        if record.report_rating == 0.0:
            rejections.append(
                Rejection(row_number, "zero_rating", record.object_id))
            continue
        key = (record.uuid, assign_window(record), record.incident_type)
        if key in seen:
            rejections.append(
                Rejection(row_number, "duplicate", record.object_id))
            continue
        seen.add(key)
        kept.append(record)
    return kept, rejections


def read_reports_csv(path) -> tuple[list[ReportRecord], list[Rejection]]:
    """Read a Waze-schema CSV (header required, exact column order)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: row 1: empty file") from None
        if tuple(h.strip() for h in header) != REPORT_COLUMNS:
            raise ValueError(
                f"{path}: row 1: expected header "
                f"{','.join(REPORT_COLUMNS)!r}")
        return parse_reports(reader, first_row_number=2)


def write_reports_csv(rows, path) -> None:
    """Write raw report rows (sequences in schema order) with header."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_COLUMNS)
        writer.writerows(rows)


# ---------------------------------------------------------------------------
# windows
# ---------------------------------------------------------------------------

def assign_window(record: ReportRecord) -> WindowIndex:
    """The record's spatio-temporal window (3-hour day segment)."""
    return WindowIndex(date=record.generation_date,
                       segment=record.day_time.hour // 3)


def windows_of(reports) -> dict[WindowIndex, list[ReportRecord]]:
    """Group kept reports by window, keys sorted chronologically."""
    grouped: dict[WindowIndex, list[ReportRecord]] = {}
    for record in reports:
        grouped.setdefault(assign_window(record), []).append(record)
    return dict(sorted(grouped.items()))


def neighbours(window_reports) -> list[tuple[str, str]]:
    """All unordered pairs of distinct users reporting in one window."""
    users = sorted({r.uuid for r in window_reports})
    return list(itertools.combinations(users, 2))


# ---------------------------------------------------------------------------
# report quality
# ---------------------------------------------------------------------------

def truthfulness(record_or_rating, epsilon: float = 0.01) -> float:
    """Rating mapped to (0, 1): ``clamp(rating / 5, eps, 1 - eps)``.

    The clamp keeps the subsequent logit finite at the rating extremes.
    """
    rating = (record_or_rating.report_rating
              if isinstance(record_or_rating, ReportRecord)
              else float(record_or_rating))
    return min(max(rating / 5.0, epsilon), 1.0 - epsilon)


def qoc(tau: float) -> float:
    """Contribution quality: the logit ``ln(tau / (1 - tau))``."""
    if not 0.0 < tau < 1.0:
        raise ValueError(f"truthfulness must lie in (0, 1), got {tau}")
    return math.log(tau / (1.0 - tau))


def qoc_extended(quality: float, gamma: float) -> float:
    """Cooperativeness-weighted contribution quality, ``gamma * Q``."""
    return gamma * quality


def coop_flag(record: ReportRecord, mean_rating: float) -> bool:
    """A report is cooperative iff its rating strictly exceeds the
    corpus mean rating."""
    return record.report_rating > mean_rating


def logistic(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-min(x, 700.0)))
    z = math.exp(max(x, -700.0))
    return z / (1.0 + z)


# ---------------------------------------------------------------------------
# corpus statistics and cooperativeness mechanisms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CorpusStats:
    """Window-level aggregates of a filtered corpus.

    ``total_window_count`` covers the full observed date span (days with
    no reports still count: it normalises per-user persistence over the
    whole campaign horizon).  ``coop_density`` and ``window_weight`` are
    defined on windows holding at least one kept report; the weights are
    inverse densities rescaled to mean 1 over those windows.
    """

    mean_rating: float
    window_reports: dict[WindowIndex, list[ReportRecord]]
    total_window_count: int
    coop_density: dict[WindowIndex, float]
    window_weight: dict[WindowIndex, float]


def compute_corpus_stats(kept, epsilon: float = 0.01) -> CorpusStats:
    kept = list(kept)
    if not kept:
        return CorpusStats(mean_rating=0.0, window_reports={},
                           total_window_count=0, coop_density={},
                           window_weight={})
    mean_rating = sum(r.report_rating for r in kept) / len(kept)
    window_reports = windows_of(kept)
    dates = [r.generation_date for r in kept]
    span_days = (max(dates) - min(dates)).days + 1
    total_window_count = span_days * SEGMENTS_PER_DAY
    coop_density = {
        w: sum(coop_flag(r, mean_rating) for r in rows) / len(rows)
        for w, rows in window_reports.items()}
    raw_weight = {w: 1.0 / max(d, epsilon)
                  for w, d in coop_density.items()}
    weight_mean = sum(raw_weight.values()) / len(raw_weight)
    window_weight = {w: v / weight_mean for w, v in raw_weight.items()}
    return CorpusStats(mean_rating=mean_rating,
                       window_reports=window_reports,
                       total_window_count=total_window_count,
                       coop_density=coop_density,
                       window_weight=window_weight)


def empirical_gamma(coop_windows, mechanism: str,
                    stats: CorpusStats) -> float:
    """Report-derived cooperativeness of one user.

    * A: neutral, always 1.
    * B: persistence — fraction of all campaign windows in which the
      user filed a cooperative (above-mean-rated) report.
    * C: as B, but each cooperative window counts with its inverse-
      cooperative-density weight, rewarding scarce cooperation.
    """
    if mechanism == "A":
        return 1.0
    if stats.total_window_count < 1:
        raise ValueError("empty corpus: no windows to normalise against")
    if mechanism == "B":
        return len(set(coop_windows)) / stats.total_window_count
    if mechanism == "C":
        # sorted so the float sum has one canonical order (set iteration
        # order varies across processes and would leak into output bytes)
        return (sum(stats.window_weight[w] for w in sorted(set(coop_windows)))
                / stats.total_window_count)
    raise ValueError(f"mechanism must be one of {MECHANISMS}, "
                     f"got {mechanism!r}")


def composite_rs(reports, gamma: float,
                 epsilon: float = 0.01) -> tuple[float, float]:
    """Aggregate a user's weighted contribution qualities.

    Returns ``(rs_raw, rs_norm)`` with ``rs_raw`` the sum of
    ``gamma * qoc(truthfulness)`` over the user's kept reports and
    ``rs_norm`` its logistic squash into (0, 1).  A user with no kept
    reports is a neutral newcomer: (0, 0.5).
    """
    raw = sum(qoc_extended(qoc(truthfulness(r, epsilon)), gamma)
              for r in reports)
    return raw, logistic(raw)


def build_profiles(kept, config: IncentiveConfig, mechanism: str,
                   stats: CorpusStats | None = None,
                   gamma_override: dict[str, float] | None = None
                   ) -> dict[str, UserProfile]:
    """Score every contributing user under one mechanism.

    ``gamma_override`` substitutes externally derived cooperativeness
    values (e.g. simulation-based honesty) for the report-derived ones,
    keyed by user id; users absent from the map fall back to the
    mechanism's empirical value.
    """
    kept = list(kept)
    if stats is None:
        stats = compute_corpus_stats(kept, config.epsilon)
    by_user: dict[str, list[ReportRecord]] = {}
    for record in kept:
        by_user.setdefault(record.uuid, []).append(record)
    profiles: dict[str, UserProfile] = {}
    for user_id in sorted(by_user):
        reports = by_user[user_id]
        active = sorted({assign_window(r) for r in reports})
        coop = sorted({assign_window(r) for r in reports
                       if coop_flag(r, stats.mean_rating)})
        if gamma_override is not None and user_id in gamma_override:
            gamma = gamma_override[user_id]
        else:
            gamma = empirical_gamma(coop, mechanism, stats)
        raw, norm = composite_rs(reports, gamma, config.epsilon)
        profiles[user_id] = UserProfile(
            user_id=user_id, report_count=len(reports),
            active_windows=tuple(active), coop_windows=tuple(coop),
            gamma_emp=gamma, rs_raw=raw, rs_norm=norm)
    return profiles


# ---------------------------------------------------------------------------
# decision support
# ---------------------------------------------------------------------------

def confidence(group_reports, window_reports, profiles,
               config: IncentiveConfig) -> dict[str, float]:
    """Per-event-type publish confidence for one report group.

    Quantity share: distinct contributors to the type over the window's
    positive-reputation user count.  Quality share: their summed
    reputations over the total across the group's event types.  The
    preference factor blends the two.  With no positive-reputation user
    in the window every confidence is 0 (nothing is publishable).
    """
    group_reports = list(group_reports)
    positive = {r.uuid for r in window_reports
                if profiles[r.uuid].rs_norm >= config.positive_rs_threshold}
    types = sorted({r.incident_type for r in group_reports})
    if not positive:
        return {kind: 0.0 for kind in types}
    contributors = {kind: {r.uuid for r in group_reports
                           if r.incident_type == kind}
                    for kind in types}
    rs_agg = {kind: sum(profiles[u].rs_norm
                        for u in sorted(contributors[kind]))
              for kind in types}
    rs_total = sum(rs_agg.values())
    nu = config.preference_factor
    out = {}
    for kind in types:
        quantity = len(contributors[kind]) / len(positive)
        quality = rs_agg[kind] / rs_total if rs_total > 0 else 0.0
        out[kind] = nu * quantity + (1.0 - nu) * quality
    return out


def decide_publish(confidences: dict[str, float],
                   threshold: float) -> tuple[str, str, float]:
    """Pick the most confident event type; publish iff it clears the
    threshold.  Ties break to the lexicographically first type.
    Returns (decision, event_type, confidence)."""
    if not confidences:
        raise ValueError("no event types to decide over")
    best = min(confidences, key=lambda kind: (-confidences[kind], kind))
    value = confidences[best]
    decision = "publish" if value >= threshold else "drop"
    return decision, best, value


def decision_rows(kept, profiles, config: IncentiveConfig):
    """DSS log: one decision per (window, street) report group.

    Trust (the positive-reputation user set) is assessed over the whole
    window; support and competition among event types are within the
    street group.  Rows come out sorted by date, segment, street.
    """
    by_window = windows_of(kept)
    rows = []
    for window, window_records in by_window.items():
        streets: dict[str, list[ReportRecord]] = {}
        for record in window_records:
            streets.setdefault(record.street, []).append(record)
        for street in sorted(streets):
            conf = confidence(streets[street], window_records, profiles,
                              config)
            decision, kind, value = decide_publish(
                conf, config.publish_threshold)
            rows.append((window.date.isoformat(), window.segment, street,
                         kind, value, decision))
    return rows


# ---------------------------------------------------------------------------
# incentives
# ---------------------------------------------------------------------------

def incentives(profiles: dict[str, UserProfile], budget: float,
               total_users: int,
               positive_rs_threshold: float = 0.5) -> dict[str, float]:
    """Split the budget pot among positive-reputation users.

    The pot is the budget discounted by the positive-user share,
    ``budget * |U+| / total_users``; within the pot each positive user
    receives their reputation share.  Everyone else gets 0; with no
    positive user the budget is untouched.
    """
    if total_users < 1:
        raise ValueError(f"total_users must be >= 1, got {total_users}")
    if budget < 0:
        raise ValueError(f"budget must be >= 0, got {budget}")
    positive = [u for u in sorted(profiles)
                if profiles[u].rs_norm >= positive_rs_threshold]
    out = {u: 0.0 for u in sorted(profiles)}
    if not positive:
        return out
    pot = budget * len(positive) / total_users
    rs_sum = sum(profiles[u].rs_norm for u in positive)
    for u in positive:
        out[u] = profiles[u].rs_norm / rs_sum * pot
    return out


# ---------------------------------------------------------------------------
# end-to-end scoring
# ---------------------------------------------------------------------------

@dataclass
class ScoreResult:
    """Everything cmd-level consumers need from one scoring pass."""

    users: list[str]
    total_users: int
    stats: CorpusStats
    profiles: dict[str, dict[str, UserProfile]]
    payouts: dict[str, dict[str, float]]
    decisions: list[tuple]
    rejections: list[Rejection]


def score_corpus(kept, config: IncentiveConfig,
                 rejections: list[Rejection] | None = None,
                 mechanisms=MECHANISMS,
                 total_users: int | None = None,
                 gamma_override: dict[str, float] | None = None
                 ) -> ScoreResult:
    """Run scoring, decisions and payouts for the given mechanisms.

    ``total_users`` defaults to the number of distinct contributing
    devices.  Decisions use the profiles of ``config.mechanism`` (when
    scored) so the published log matches the selected ledger.
    """
    kept = list(kept)
    stats = compute_corpus_stats(kept, config.epsilon)
    profiles = {mech: build_profiles(kept, config, mech, stats,
                                     gamma_override)
                for mech in mechanisms}
    users = sorted({r.uuid for r in kept})
    if total_users is None:
        total_users = len(users)
    payouts = {mech: incentives(profiles[mech], config.budget, total_users,
                                config.positive_rs_threshold)
               for mech in mechanisms}
    decision_mech = (config.mechanism if config.mechanism in profiles
                     else next(iter(mechanisms)))
    decisions = (decision_rows(kept, profiles[decision_mech], config)
                 if kept else [])
    return ScoreResult(users=users, total_users=total_users, stats=stats,
                       profiles=profiles, payouts=payouts,
                       decisions=decisions,
                       rejections=list(rejections or []))


def write_ledger_csv(result: ScoreResult, path,
                     selected_mechanism: str = "C") -> None:
    """``user_id,rs_raw,rs_norm,gamma_emp,incentive_A,incentive_B,
    incentive_C`` rows, users sorted.

    The rs/gamma columns report the selected mechanism; each incentive
    column comes from its own mechanism's ledger (mechanisms not scored
    in this pass stay empty).
    """
    selected = result.profiles[selected_mechanism]
    with open(path, "w", encoding="ascii") as fh:
        fh.write("user_id,rs_raw,rs_norm,gamma_emp,"
                 "incentive_A,incentive_B,incentive_C\n")
        for user in result.users:
            profile = selected[user]
            cells = [user, repr(profile.rs_raw), repr(profile.rs_norm),
                     repr(profile.gamma_emp)]
            for mech in MECHANISMS:
                if mech in result.payouts:
                    cells.append(repr(result.payouts[mech][user]))
                else:
                    cells.append("")
            fh.write(",".join(cells) + "\n")


def write_decisions_csv(result: ScoreResult, path) -> None:
    """``date,segment,street,event_type,confidence,decision`` rows."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("date,segment,street,event_type,confidence,decision\n")
        for date, segment, street, kind, value, decision in result.decisions:
            fh.write(f"{date},{segment},{street},{kind},{value!r},"
                     f"{decision}\n")


# ---------------------------------------------------------------------------
# synthetic corpora
# ---------------------------------------------------------------------------

_STREETS = (
    "Alder Way", "Birch Street", "Cedar Avenue", "Dogwood Lane",
    "Elm Road", "Fir Court", "Hazel Boulevard", "Juniper Drive",
    "Linden Square", "Maple Crossing", "Poplar Row", "Willow Parkway",
)


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for a synthetic report corpus.

    Three behaviour archetypes: honest devices file top-rated reports in
    many windows; selfish devices contribute rarely with decent ratings;
    malicious devices flood low-quality reports, a share of which carry
    the server's zero rating (and will be filtered out downstream).
    """

    user_count: int = 300
    day_count: int = 7
    honest_fraction: float = 0.5
    selfish_fraction: float = 0.3
    start_date: dt.date = dt.date(2019, 10, 7)
    rng_seed: int = 0

    def __post_init__(self):
        if self.user_count < 1:
            raise ValueError(f"user_count must be >= 1, got {self.user_count}")
        if self.day_count < 1:
            raise ValueError(f"day_count must be >= 1, got {self.day_count}")
        if (self.honest_fraction < 0 or self.selfish_fraction < 0
                or self.honest_fraction + self.selfish_fraction > 1):
            raise ValueError("behaviour fractions must be nonnegative "
                             "and sum to at most 1")


def synth_corpus(spec: SynthSpec) -> list[list[str]]:
    """Deterministic Waze-schema rows (pre-filtering, header excluded).

    Honest devices report rating 5.0 in 10-14 distinct windows; selfish
    devices rating 4.0 in 1-3 windows; malicious devices 10-14 windows
    with ratings drawn from {0, 1, 2} (zero-rated rows are the spam the
    ingest filter exists for).  Rows come out sorted by time then id.
    """
    rng = np.random.default_rng(np.random.SeedSequence(spec.rng_seed))
    honest_count = round(spec.user_count * spec.honest_fraction)
    selfish_count = round(spec.user_count * spec.selfish_fraction)
    window_total = spec.day_count * SEGMENTS_PER_DAY
    rows = []
    serial = 0
    for index in range(spec.user_count):
        user = f"u{index:04d}"
        if index < honest_count:
            window_count = int(rng.integers(10, 15))
            ratings = [5.0] * window_count
        elif index < honest_count + selfish_count:
            window_count = int(rng.integers(1, 4))
            ratings = [4.0] * window_count
        else:
            window_count = int(rng.integers(10, 15))
            ratings = rng.choice([0.0, 1.0, 2.0], size=window_count,
                                 p=[0.4, 0.3, 0.3]).tolist()
        window_count = min(window_count, window_total)
        chosen = rng.choice(window_total, size=window_count, replace=False)
        for window_flat, rating in zip(chosen.tolist(), ratings):
            day, segment = divmod(window_flat, SEGMENTS_PER_DAY)
            date = spec.start_date + dt.timedelta(days=day)
            minute_in_segment = int(rng.integers(180))
            hour, minute = divmod(segment * 180 + minute_in_segment, 60)
            street = _STREETS[int(rng.integers(len(_STREETS)))]
            kind = INCIDENT_TYPES[int(rng.integers(len(INCIDENT_TYPES)))]
            rows.append([f"r{serial:06d}", date.isoformat(),
                         f"{hour:02d}:{minute:02d}", street, kind, user,
                         f"{rating:.1f}"])
            serial += 1
    rows.sort(key=lambda row: (row[1], row[2], row[0]))
    return rows

"""Per-person case state machine and its event fold.

State is always derived by folding a person's events in
(effective_date, arrival sequence) order; out-of-order arrivals are handled
by re-folding from the log, never by compensating transitions. The fold also
emits day-granular bucket deltas that the aggregate layer consumes, including
the scheduled suspect-discard promotion that fires when a lone negative ages
past the configured window.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import date
from enum import IntEnum

from .model import CaseStatus, DeathProtocol, EpiCategory, SymptomStatus


class EventKind(IntEnum):
    REPORTED = 1            # aux = category * 4 + symptom
    SPECIMEN_POSITIVE = 2
    SPECIMEN_NEGATIVE = 3
    ADMITTED = 4
    DISCHARGED = 5
    ISOLATION_START = 6     # aux = location
    ISOLATION_END = 7
    RECOVERED = 8
    DIED = 9                # aux = protocol


class IsolationLocation(IntEnum):
    HOME = 1
    HOSPITAL = 2
    FACILITY = 3


def pack_reported_aux(category: int, symptom: int) -> int:
    return category * 4 + symptom


def unpack_reported_aux(aux: int) -> tuple[int, int]:
    return aux // 4, aux % 4


@dataclass(frozen=True, slots=True)
class CaseEvent:
    """One event in a person's history. ``seq`` is the global log sequence
    and provides the arrival-order tiebreak within a day."""

    person_key: str
    kind: EventKind
    effective_date: date
    seq: int = 0
    category: EpiCategory | None = None
    symptom: SymptomStatus = SymptomStatus.UNKNOWN
    location: IsolationLocation | None = None
    protocol: DeathProtocol = DeathProtocol.NONE
    source: str = ""

    def packed(self) -> tuple[int, int, int, int]:
        aux = 0
        if self.kind == EventKind.REPORTED:
            aux = pack_reported_aux(int(self.category or 0), int(self.symptom))
        elif self.kind == EventKind.ISOLATION_START:
            aux = int(self.location or IsolationLocation.HOME)
        elif self.kind == EventKind.DIED:
            aux = int(self.protocol or DeathProtocol.WITH_PROTOCOL)
        return (self.effective_date.toordinal(), self.seq, int(self.kind), aux)


@dataclass(frozen=True, slots=True)
class CaseState:
    category: int = 0                 # 0 = no event applied yet
    status: int = 0
    symptoms: int = int(SymptomStatus.UNKNOWN)
    confirmed_ord: int = -1           # ordinal of earliest confirmation
    outcome_ord: int = -1             # ordinal of death/recovery
    death_protocol: int = int(DeathProtocol.NONE)
    negative_count: int = 0
    last_negative_ord: int = -1
    discard_armed: bool = False

    @property
    def confirmed(self) -> bool:
        return self.category == int(EpiCategory.CONFIRMED)

    @property
    def terminal(self) -> bool:
        return self.status in (int(CaseStatus.DEAD), int(CaseStatus.RECOVERED))

    @property
    def confirmed_date(self) -> date | None:
        return date.fromordinal(self.confirmed_ord) if self.confirmed_ord >= 0 else None

    @property
    def outcome_date(self) -> date | None:
        return date.fromordinal(self.outcome_ord) if self.outcome_ord >= 0 else None


@dataclass(frozen=True)
class DiscardRules:
    negatives_immediate: int = 2
    window_days: int = 14


DEFAULT_RULES = DiscardRules()

# Status maps for location/outcome events, keyed by confirmed-ness.
# These dicts are the single source for both apply_event and the exported
# transition table.
_STATUS_EVENT_MAP: dict[int, dict[bool, int]] = {
    int(EventKind.ADMITTED): {False: int(CaseStatus.HOSPITAL_ISOLATION), True: int(CaseStatus.HOSPITALIZED)},
    int(EventKind.DISCHARGED): {False: int(CaseStatus.FINISHED_ISOLATION), True: int(CaseStatus.SELF_ISOLATION)},
    int(EventKind.ISOLATION_END): {False: int(CaseStatus.FINISHED_ISOLATION), True: int(CaseStatus.RECOVERED)},
    int(EventKind.RECOVERED): {False: int(CaseStatus.FINISHED_ISOLATION), True: int(CaseStatus.RECOVERED)},
}

_ISOLATION_START_MAP: dict[int, dict[bool, int]] = {
    int(IsolationLocation.HOME): {False: int(CaseStatus.HOME_ISOLATION), True: int(CaseStatus.SELF_ISOLATION)},
    int(IsolationLocation.HOSPITAL): {False: int(CaseStatus.HOSPITAL_ISOLATION), True: int(CaseStatus.HOSPITALIZED)},
    int(IsolationLocation.FACILITY): {False: int(CaseStatus.HOSPITAL_ISOLATION), True: int(CaseStatus.HOSPITALIZED)},
}

# Status a non-confirmed status maps onto when the person is confirmed.
_CONFIRM_STATUS_MAP: dict[int, int] = {
    0: int(CaseStatus.SELF_ISOLATION),
    int(CaseStatus.FINISHED_ISOLATION): int(CaseStatus.SELF_ISOLATION),
    int(CaseStatus.HOME_ISOLATION): int(CaseStatus.SELF_ISOLATION),
    int(CaseStatus.HOSPITAL_ISOLATION): int(CaseStatus.HOSPITALIZED),
    int(CaseStatus.HOSPITALIZED): int(CaseStatus.HOSPITALIZED),
    int(CaseStatus.SELF_ISOLATION): int(CaseStatus.SELF_ISOLATION),
}

DEFAULT_INITIAL_STATUS = int(CaseStatus.HOME_ISOLATION)


def _confirm(state: CaseState, ord_date: int) -> CaseState:
    """Confirmation is absorbing; earliest confirmation date wins."""
    if state.confirmed:
        if state.confirmed_ord < 0 or ord_date < state.confirmed_ord:
            state = replace(state, confirmed_ord=ord_date)
        return state
    status = _CONFIRM_STATUS_MAP.get(state.status, int(CaseStatus.SELF_ISOLATION))
    return replace(
        state,
        category=int(EpiCategory.CONFIRMED),
        status=status,
        confirmed_ord=ord_date,
        discard_armed=False,
    )


def _materialize_promotion(state: CaseState) -> CaseState:
    return replace(
        state,
        category=int(EpiCategory.DISCARDED),
        status=int(CaseStatus.FINISHED_ISOLATION),
        discard_armed=False,
    )


def promotion_ord(state: CaseState, rules: DiscardRules = DEFAULT_RULES) -> int:
    """Day on which an armed suspect-discard promotion fires, or -1."""
    if state.discard_armed and state.last_negative_ord >= 0:
        return state.last_negative_ord + rules.window_days
    return -1


def apply_event(
    state: CaseState,
    packed: tuple[int, int, int, int],
    rules: DiscardRules = DEFAULT_RULES,
) -> tuple[CaseState, bool]:
    """Apply one packed event (ord_date, seq, kind, aux).

    Returns (new_state, applied). ``applied`` is False for events ignored
    after a terminal status; callers log those as EventAfterTerminal. Any
    armed discard promotion whose day has passed is materialized first so
    incremental application agrees with a full re-fold.
    """
    ord_date, _seq, kind, aux = packed

    promo = promotion_ord(state, rules)
    if promo >= 0 and promo <= ord_date:
        state = _materialize_promotion(state)

    if state.terminal:
        return state, False

    if kind == EventKind.REPORTED:
        category, symptom = unpack_reported_aux(aux)
        if symptom != int(SymptomStatus.UNKNOWN):
            state = replace(state, symptoms=symptom)
        if category == int(EpiCategory.CONFIRMED):
            return _confirm(state, ord_date), True
        if state.confirmed:
            return state, True  # category change away from Confirmed is absorbed
        changed = category != state.category
        status = state.status if state.status else DEFAULT_INITIAL_STATUS
        state = replace(
            state,
            category=category,
            status=status,
            # A genuine reclassification restarts negative-result tracking.
            negative_count=0 if changed else state.negative_count,
            last_negative_ord=-1 if changed else state.last_negative_ord,
            discard_armed=False if changed else state.discard_armed,
        )
        return state, True

    if state.category == 0:
        # Defensive: a location/lab event with no prior report implies a
        # suspect under investigation.
        state = replace(state, category=int(EpiCategory.SUSPECT), status=DEFAULT_INITIAL_STATUS)

    if kind == EventKind.SPECIMEN_POSITIVE:
        return _confirm(state, ord_date), True

    if kind == EventKind.SPECIMEN_NEGATIVE:
        if state.confirmed:
            return state, True  # informational after confirmation
        count = state.negative_count + 1
        state = replace(state, negative_count=count, last_negative_ord=ord_date)
        if state.category == int(EpiCategory.SUSPECT):
            if count >= rules.negatives_immediate:
                state = _materialize_promotion(state)
            else:
                state = replace(state, discard_armed=True)
        return state, True

    if kind == EventKind.ISOLATION_START:
        status = _ISOLATION_START_MAP[aux][state.confirmed]
        return replace(state, status=status), True

    if kind == EventKind.DIED:
        return replace(
            state,
            status=int(CaseStatus.DEAD),
            outcome_ord=ord_date,
            death_protocol=aux or int(DeathProtocol.WITH_PROTOCOL),
            discard_armed=False,
        ), True

    if kind in _STATUS_EVENT_MAP:
        status = _STATUS_EVENT_MAP[kind][state.confirmed]
        outcome = ord_date if status == int(CaseStatus.RECOVERED) else state.outcome_ord
        return replace(state, status=status, outcome_ord=outcome), True

    raise ValueError(f"unknown event kind {kind}")


@dataclass(slots=True)
class FoldResult:
    state: CaseState
    # (day_ordinal, category, status, sign): end-of-day classification deltas
    bucket_deltas: list[tuple[int, int, int, int]]
    # (day_ordinal, symptom, sign): symptom partition deltas, confirmed only
    symptom_deltas: list[tuple[int, int, int]]
    ignored: int = 0


def _sched_of(state: CaseState, rules: DiscardRules) -> tuple[int, int, int] | None:
    """The standing scheduled-promotion pair for an armed state:
    (fire day, category left, status left)."""
    if not state.discard_armed:
        return None
    return (promotion_ord(state, rules), state.category, state.status)


def step_event(
    state: CaseState,
    packed: tuple[int, int, int, int],
    rules: DiscardRules = DEFAULT_RULES,
) -> tuple[CaseState, bool, list[tuple[int, int, int, int]], list[tuple[int, int, int]]]:
    """Apply one event and emit the exact bucket/symptom deltas it causes.

    Used identically by full re-folds and by incremental application, so the
    delta streams never depend on which path ran. Scheduled discard
    promotions are emitted as a future-dated delta pair the moment they are
    armed; a later event that pre-empts or reshapes the schedule retracts
    the old pair numerically. A promotion whose day has passed is
    materialized silently because its pair already stands in the stream.
    """
    bucket: list[tuple[int, int, int, int]] = []
    symptom: list[tuple[int, int, int]] = []
    day = packed[0]

    promo = promotion_ord(state, rules)
    if 0 <= promo <= day:
        state = _materialize_promotion(state)

    pre = state
    nxt, applied = apply_event(state, packed, rules)
    if applied:
        if (pre.category, pre.status) != (nxt.category, nxt.status):
            if pre.category:
                bucket.append((day, pre.category, pre.status, -1))
            bucket.append((day, nxt.category, nxt.status, +1))
        pre_sym = pre.symptoms if pre.confirmed else -1
        nxt_sym = nxt.symptoms if nxt.confirmed else -1
        if pre_sym != nxt_sym:
            if pre_sym >= 0:
                symptom.append((day, pre_sym, -1))
            if nxt_sym >= 0:
                symptom.append((day, nxt_sym, +1))
        pre_sched = _sched_of(pre, rules)
        nxt_sched = _sched_of(nxt, rules)
        if pre_sched != nxt_sched:
            if pre_sched is not None:
                fire, cat, status = pre_sched
                bucket.append((fire, cat, status, +1))
                bucket.append((fire, int(EpiCategory.DISCARDED), int(CaseStatus.FINISHED_ISOLATION), -1))
            if nxt_sched is not None:
                fire, cat, status = nxt_sched
                bucket.append((fire, cat, status, -1))
                bucket.append((fire, int(EpiCategory.DISCARDED), int(CaseStatus.FINISHED_ISOLATION), +1))
    return nxt, applied, bucket, symptom


def fold_events(
    events: list[tuple[int, int, int, int]],
    rules: DiscardRules = DEFAULT_RULES,
) -> FoldResult:
    """Fold packed events sorted by (date, seq) into state plus deltas.

    Deltas carry -1 for the bucket left and +1 for the bucket entered, dated
    by the day the transition takes effect; prefix sums over the streams give
    exact end-of-day population counts for any as-of date, including the
    scheduled suspect-discard promotion.
    """
    state = CaseState()
    out = FoldResult(state=state, bucket_deltas=[], symptom_deltas=[])
    for packed in events:
        state, applied, bucket, symptom = step_event(state, packed, rules)
        if not applied:
            out.ignored += 1
        out.bucket_deltas.extend(bucket)
        out.symptom_deltas.extend(symptom)
    out.state = state
    return out


def settled(state: CaseState, as_of_ord: int, rules: DiscardRules = DEFAULT_RULES) -> CaseState:
    """State as seen on a given day: a due discard promotion is applied."""
    promo = promotion_ord(state, rules)
    if 0 <= promo <= as_of_ord:
        return _materialize_promotion(state)
    return state


def rebuild(events: list[tuple[int, int, int, int]], rules: DiscardRules = DEFAULT_RULES) -> CaseState:
    """Replay a person's complete, unsorted event slice into its state."""
    from .errors import EmptyLog

    if not events:
        raise EmptyLog("no events for person")
    return fold_events(sorted(events, key=lambda e: (e[0], e[1])), rules).state


# Dashboard bucket labels per (confirmed, status); classification is total.
_CONFIRMED_BUCKETS = {
    int(CaseStatus.HOSPITALIZED): "active_hospitalized",
    int(CaseStatus.SELF_ISOLATION): "active_self_isolation",
    int(CaseStatus.RECOVERED): "recovered",
    int(CaseStatus.DEAD): "dead",
}

_NONCONFIRMED_BUCKETS = {
    int(CaseStatus.FINISHED_ISOLATION): "finished_isolation",
    int(CaseStatus.HOME_ISOLATION): "home_isolation",
    int(CaseStatus.HOSPITAL_ISOLATION): "hospital_isolation",
    int(CaseStatus.DEAD): "dead",
}


def classify(state: CaseState) -> tuple[str, str]:
    """(category label, dashboard bucket label) for one state."""
    cat = EpiCategory(state.category).name.lower() if state.category else "unreported"
    if state.confirmed:
        bucket = _CONFIRMED_BUCKETS.get(state.status, "active_self_isolation")
    else:
        bucket = _NONCONFIRMED_BUCKETS.get(state.status, "home_isolation")
    return cat, bucket


def transition_table(rules: DiscardRules = DEFAULT_RULES) -> dict:
    """Machine-readable transition table; rendered by tests and docs."""

    def status_name(code: int) -> str:
        return CaseStatus(code).name.lower()

    table: dict = {
        "initial_status": status_name(DEFAULT_INITIAL_STATUS),
        "terminal_statuses": ["dead", "recovered"],
        "confirmation": {
            "events": ["specimen_positive", "reported(confirmed)"],
            "absorbing": True,
            "status_map": {
                (status_name(k) if k else "none"): status_name(v)
                for k, v in _CONFIRM_STATUS_MAP.items()
            },
        },
        "suspect_discard": {
            "negatives_immediate": rules.negatives_immediate,
            "single_negative_window_days": rules.window_days,
            "resulting_status": "finished_isolation",
        },
        "events": {},
    }
    for kind, mapping in _STATUS_EVENT_MAP.items():
        table["events"][EventKind(kind).name.lower()] = {
            "non_confirmed": status_name(mapping[False]),
            "confirmed": status_name(mapping[True]),
        }
    table["events"]["isolation_start"] = {
        IsolationLocation(loc).name.lower(): {
            "non_confirmed": status_name(m[False]),
            "confirmed": status_name(m[True]),
        }
        for loc, m in _ISOLATION_START_MAP.items()
    }
    table["events"]["died"] = {"any": "dead", "records": "protocol"}
    return table


__all__ = [
    "CaseEvent", "CaseState", "DiscardRules", "EventKind", "FoldResult",
    "IsolationLocation", "apply_event", "classify", "fold_events",
    "pack_reported_aux", "promotion_ord", "rebuild", "settled", "step_event",
    "transition_table", "unpack_reported_aux",
]

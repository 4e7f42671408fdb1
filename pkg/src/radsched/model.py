"""Start-day assignment model, the 4-index binary formulation, criteria and
the schedule verifier.

The full model carries one binary variable per (linac i, patient j, day k,
session l).  The compact model is an exact reformulation: because the gap
rules make every later session a deterministic function of the start day and
the whole treatment stays on one machine, a patient's schedule is fully
described by a (linac, start day) candidate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional, Sequence, Union

from .domain import (
    BookingLedger,
    Calendar,
    DomainError,
    InvalidWeekdayForPattern,
    PatientCase,
    SessionExpansion,
    allowed_start_days,
    session_expansion,
    session_gap,
)


class ModelError(DomainError):
    pass


class HorizonTooShort(ModelError):
    """Some patient has no feasible (linac, start day) within the horizon."""


class UnassignedPatient(ModelError):
    """A schedule is missing an assignment for a batch patient."""


class CriteriaVector(NamedTuple):
    """The four lexicographic objective values of a schedule or batch."""

    f1: int  # patients past the breach date
    f2: int  # weighted count past the JCCO maximum acceptable date
    f3: int  # weighted count past the JCCO good practice date
    f4: int  # weighted sum of squared waiting times


@dataclass(frozen=True)
class Schedule:
    """Chosen (linac id, start day) per patient id."""

    assignments: dict[str, tuple[int, int]]

    def start_day(self, patient_id: str) -> int:
        return self.assignments[patient_id][1]

    def merged_with(self, other: "Schedule") -> "Schedule":
        merged = dict(self.assignments)
        merged.update(other.assignments)
        return Schedule(merged)


class PlacementRecord(NamedTuple):
    """One expanded session placement; the unit the verifier works on."""

    patient_id: str
    session: int  # l, 1-based
    linac_id: int
    day: int


def expand_schedule(schedule: Schedule, batch: Sequence[PatientCase],
                    calendar: Calendar) -> list[PlacementRecord]:
    """Expand start-day assignments into per-session placement records."""
    records = []
    for patient in batch:
        if patient.id not in schedule.assignments:
            raise UnassignedPatient(patient.id)
        linac_id, start = schedule.assignments[patient.id]
        expansion = session_expansion(patient, calendar.weekday(start))
        for l, (off, _dur) in enumerate(expansion.entries, start=1):
            records.append(PlacementRecord(patient.id, l, linac_id, start + off))
    return records


def start_contributions(patient: PatientCase, start_day: int) -> CriteriaVector:
    """Objective contributions of starting the patient on ``start_day``."""
    wait = start_day - patient.booking_date
    return CriteriaVector(
        f1=1 if start_day > patient.breach_date else 0,
        f2=patient.weight if start_day > patient.jcco_max_date else 0,
        f3=patient.weight if start_day > patient.jcco_good_date else 0,
        f4=patient.weight * wait * wait,
    )


def evaluate_criteria(schedule: Schedule, batch: Sequence[PatientCase]) -> CriteriaVector:
    """The (f1, f2, f3, f4) vector of a complete schedule for the batch."""
    totals = [0, 0, 0, 0]
    for patient in batch:
        if patient.id not in schedule.assignments:
            raise UnassignedPatient(patient.id)
        contrib = start_contributions(patient, schedule.start_day(patient.id))
        for m in range(4):
            totals[m] += contrib[m]
    return CriteriaVector(*totals)


class Candidate(NamedTuple):
    """A feasible (linac, start day) choice with its precomputed footprint."""

    linac_id: int
    start_day: int
    daily_load: tuple[tuple[int, int], ...]  # (absolute day, minutes)
    contrib: CriteriaVector


@dataclass
class CompactModel:
    """Per-patient candidate sets plus the remaining-capacity grid."""

    batch: tuple[PatientCase, ...]
    calendar: Calendar
    candidates: dict[str, tuple[Candidate, ...]]
    remaining: dict[tuple[int, int], int]  # (linac, day) -> free minutes


def _first_day_blocked(patient: PatientCase, start_day: int, first_day: int,
                       expansion: SessionExpansion) -> bool:
    # No session other than the first may occupy the first horizon day.
    if patient.num_sessions == 1 or start_day > first_day:
        return False
    return expansion.entries[1][0] == 0  # an intra-day second session on day 1


def _candidate_starts(patient: PatientCase, eligible_linacs: Sequence[int],
                      calendar: Calendar) -> list[Candidate]:
    first = calendar.first_day
    last = calendar.last_day
    if last is None:
        raise ModelError("model construction needs a bounded horizon")
    starts = allowed_start_days(patient)
    expansions = {wd: session_expansion(patient, wd) for wd in starts}
    out = []
    for day in range(max(patient.release_date, first), last + 1):
        wd = calendar.weekday(day)
        if wd not in starts:
            continue
        exp = expansions[wd]
        if day + exp.last_offset > last:
            continue
        if _first_day_blocked(patient, day, first, exp):
            continue
        load = tuple((day + off, minutes) for off, minutes in exp.daily_load())
        contrib = start_contributions(patient, day)
        for lid in eligible_linacs:
            out.append(Candidate(lid, day, load, contrib))
    out.sort(key=lambda c: (c.start_day, c.linac_id))
    return out


def build_compact_model(batch: Sequence[PatientCase], ledger: BookingLedger,
                        calendar: Calendar) -> CompactModel:
    """Candidate sets for exactly the feasible (linac, start day) pairs."""
    candidates: dict[str, tuple[Candidate, ...]] = {}
    days_used: set[int] = set()
    for patient in batch:
        eligible = [m.id for m in ledger.linacs_of_type(patient.machine_type)]
        cands = _candidate_starts(patient, eligible, calendar)
        if not cands:
            raise HorizonTooShort(patient.id)
        candidates[patient.id] = tuple(cands)
        for c in cands:
            days_used.update(day for day, _ in c.daily_load)
    remaining = {}
    for m in ledger.linacs:
        for day in days_used:
            remaining[(m.id, day)] = ledger.remaining(m.id, day)
    return CompactModel(tuple(batch), calendar, candidates, remaining)


@dataclass
class FullModel:
    """Explicit 4-index binary model over (linac, patient, day, session).

    Patients are addressed by their position in the batch (1-based j); only
    the free (not fixed-to-zero) variables are materialised.
    """

    batch: tuple[PatientCase, ...]
    linac_ids: tuple[int, ...]
    calendar: Calendar
    free: set[tuple[int, int, int, int]]  # (i, j, k, l)
    linkage: dict[tuple[int, int, int, int], tuple[int, int, int, int]]
    assignment_rows: dict[tuple[int, int], tuple[tuple[int, int], ...]]  # (j,l) -> (i,k)
    capacity_rows: dict[tuple[int, int], tuple[tuple[int, int, int], ...]]  # (i,k) -> (j,l,p)
    capacity_rhs: dict[tuple[int, int], int]
    objectives: dict[int, dict[tuple[int, int, int, int], int]]


def build_full_model(batch: Sequence[PatientCase], ledger: BookingLedger,
                     calendar: Calendar) -> FullModel:
    """Materialise the binary formulation with the ledger load folded into
    the capacity right-hand sides."""
    first = calendar.first_day
    last = calendar.last_day
    if last is None:
        raise ModelError("model construction needs a bounded horizon")
    free: set[tuple[int, int, int, int]] = set()
    linkage: dict[tuple[int, int, int, int], tuple[int, int, int, int]] = {}
    assignment: dict[tuple[int, int], list[tuple[int, int]]] = {}
    capacity: dict[tuple[int, int], list[tuple[int, int, int]]] = {}
    objectives: dict[int, dict[tuple[int, int, int, int], int]] = {1: {}, 2: {}, 3: {}, 4: {}}
    linac_ids = tuple(m.id for m in ledger.linacs)

    for j, patient in enumerate(batch, start=1):
        eligible = [m.id for m in ledger.linacs_of_type(patient.machine_type)]
        starts = allowed_start_days(patient)
        any_candidate = False
        for start_day in range(max(patient.release_date, first), last + 1):
            if calendar.weekday(start_day) not in starts:
                continue
            # Walk the session chain day by day; abandon starts whose chain
            # leaves the horizon or puts a later session on the first day.
            chain: list[tuple[int, int]] = []  # (k, l)
            day, wd = start_day, calendar.weekday(start_day)
            ok = True
            for l in range(1, patient.num_sessions + 1):
                if day > last or (l > 1 and day == first):
                    ok = False
                    break
                chain.append((day, l))
                if l < patient.num_sessions:
                    gap = session_gap(patient.pattern, wd, l)
                    day += gap
                    wd = (wd + gap) % 7
            if not ok:
                continue
            any_candidate = True
            for lid in eligible:
                prev = None
                for k, l in chain:
                    var = (lid, j, k, l)
                    free.add(var)
                    assignment.setdefault((j, l), []).append((lid, k))
                    capacity.setdefault((lid, k), []).append(
                        (j, l, patient.durations[l - 1]))
                    if prev is not None:
                        linkage[prev] = var
                    prev = var
                contrib = start_contributions(patient, start_day)
                head = (lid, j, start_day, 1)
                for m in range(1, 5):
                    if contrib[m - 1]:
                        objectives[m][head] = contrib[m - 1]
        if not any_candidate:
            raise HorizonTooShort(patient.id)

    capacity_rhs = {key: ledger.remaining(*key) for key in capacity}
    return FullModel(
        batch=tuple(batch),
        linac_ids=linac_ids,
        calendar=calendar,
        free=free,
        linkage=linkage,
        assignment_rows={key: tuple(sorted(set(v))) for key, v in assignment.items()},
        capacity_rows={key: tuple(sorted(set(v))) for key, v in capacity.items()},
        capacity_rhs=capacity_rhs,
        objectives=objectives,
    )


def _var_name(var: tuple[int, int, int, int]) -> str:
    i, j, k, l = var
    return f"x_{i}_{j}_{k}_{l}"


def export_lp(model: FullModel, objective: int = 1) -> str:
    """Serialise the model in the textual LP interchange format.

    Output is deterministic: identical models yield byte-identical text.
    """
    if objective not in (1, 2, 3, 4):
        raise ModelError(f"objective index out of range: {objective}")
    lines = ["Minimize"]
    terms = sorted(model.objectives[objective].items())
    if terms:
        parts = [f"{coeff} {_var_name(var)}" for var, coeff in terms]
        lines.append(" obj: " + " + ".join(parts))
    else:
        lines.append(" obj:")
    lines.append("Subject To")
    for (j, l), vars_ik in sorted(model.assignment_rows.items()):
        parts = [_var_name((i, j, k, l)) for i, k in vars_ik]
        lines.append(f" assign_{j}_{l}: " + " + ".join(parts) + " = 1")
    for (i, k), entries in sorted(model.capacity_rows.items()):
        parts = [f"{p} {_var_name((i, j, k, l))}" for j, l, p in entries]
        rhs = model.capacity_rhs[(i, k)]
        lines.append(f" cap_{i}_{k}: " + " + ".join(parts) + f" <= {rhs}")
    for var, nxt in sorted(model.linkage.items()):
        lines.append(
            f" link_{var[0]}_{var[1]}_{var[2]}_{var[3]}: "
            f"{_var_name(nxt)} - {_var_name(var)} = 0"
        )
    lines.append("Binary")
    for var in sorted(model.free):
        lines.append(f" {_var_name(var)}")
    lines.append("End")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Violation:
    """One broken constraint, naming its family and the offending indices."""

    family: str  # eligibility | release | start-day | first-day | gap | assignment | capacity
    i: Optional[int] = None
    j: Optional[str] = None
    k: Optional[int] = None
    l: Optional[int] = None

    def __str__(self) -> str:
        fmt = lambda v: "-" if v is None else str(v)
        return (f"{self.family} i={fmt(self.i)} j={fmt(self.j)} "
                f"k={fmt(self.k)} l={fmt(self.l)}")


PlacementsLike = Union[Schedule, Iterable[PlacementRecord]]


def check_feasibility(schedule: PlacementsLike, batch: Sequence[PatientCase],
                      ledger: BookingLedger, calendar: Calendar) -> list[Violation]:
    """Verifier for the seven constraint families on an expanded schedule.

    Returns an empty list iff the placements satisfy machine eligibility,
    release dates, start weekdays, the first-horizon-day rule, session gaps,
    single assignment and per-(linac, day) capacity including ledger load.
    """
    if isinstance(schedule, Schedule):
        records = expand_schedule(schedule, batch, calendar)
    else:
        records = list(schedule)
    by_patient = {p.id: p for p in batch}
    violations: list[Violation] = []

    placed: dict[tuple[str, int], list[PlacementRecord]] = {}
    for rec in records:
        placed.setdefault((rec.patient_id, rec.session), []).append(rec)

    for patient in batch:
        for l in range(1, patient.num_sessions + 1):
            recs = placed.get((patient.id, l), [])
            if len(recs) != 1:
                violations.append(Violation("assignment", j=patient.id, l=l))

    for rec in records:
        patient = by_patient.get(rec.patient_id)
        if patient is None or rec.session > patient.num_sessions:
            violations.append(Violation("assignment", i=rec.linac_id,
                                        j=rec.patient_id, k=rec.day, l=rec.session))
            continue
        eligible = {m.id for m in ledger.linacs_of_type(patient.machine_type)}
        if rec.linac_id not in eligible:
            violations.append(Violation("eligibility", i=rec.linac_id,
                                        j=patient.id, k=rec.day, l=rec.session))
        if rec.day < patient.release_date:
            violations.append(Violation("release", i=rec.linac_id,
                                        j=patient.id, k=rec.day, l=rec.session))
        if rec.session == 1 and calendar.weekday(rec.day) not in allowed_start_days(patient):
            violations.append(Violation("start-day", i=rec.linac_id,
                                        j=patient.id, k=rec.day, l=rec.session))
        if rec.session > 1 and rec.day == calendar.first_day:
            violations.append(Violation("first-day", i=rec.linac_id,
                                        j=patient.id, k=rec.day, l=rec.session))

    # Gap / same-machine chain checks, patient by patient.
    for patient in batch:
        for l in range(1, patient.num_sessions):
            cur = placed.get((patient.id, l), [])
            nxt = placed.get((patient.id, l + 1), [])
            if len(cur) != 1 or len(nxt) != 1:
                continue  # already reported as assignment violations
            cur_rec, nxt_rec = cur[0], nxt[0]
            try:
                gap = session_gap(patient.pattern, calendar.weekday(cur_rec.day), l)
            except InvalidWeekdayForPattern:
                violations.append(Violation("gap", i=cur_rec.linac_id, j=patient.id,
                                            k=cur_rec.day, l=l))
                continue
            if nxt_rec.day != cur_rec.day + gap or nxt_rec.linac_id != cur_rec.linac_id:
                violations.append(Violation("gap", i=nxt_rec.linac_id, j=patient.id,
                                            k=nxt_rec.day, l=l + 1))

    loads: dict[tuple[int, int], int] = {}
    for rec in records:
        patient = by_patient.get(rec.patient_id)
        if patient is None or rec.session > patient.num_sessions:
            continue
        key = (rec.linac_id, rec.day)
        loads[key] = loads.get(key, 0) + patient.durations[rec.session - 1]
    for (i, k), minutes in sorted(loads.items()):
        if ledger.load(i, k) + minutes > ledger.capacity.minutes(i, k):
            violations.append(Violation("capacity", i=i, k=k))

    return violations

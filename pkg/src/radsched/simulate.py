"""Day-by-day booking simulation with the SCD and MNDA policies.

At the end of each simulated day the patients who are eligible under the
policy are batched and scheduled against the partially booked ledger; the
earliest day any of them can start is the next day.  Committed sessions are
never moved.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .domain import (
    ALL_DAYS,
    BookingLedger,
    Calendar,
    CapacityGrid,
    DomainError,
    FRI,
    Linac,
    MON,
    PatientCase,
    SessionRecord,
    TUE,
    WaitingListStatus,
    WED,
    WEEKDAYS,
)
from .model import (
    CriteriaVector,
    Schedule,
    Violation,
    check_feasibility,
    expand_schedule,
    start_contributions,
)
from .solver import SolveBudget, solve_batch_detailed

# Weekday sets selectable as schedule-creation days, keyed by their size.
SCD_CHOICES: dict[int, frozenset[int]] = {
    7: ALL_DAYS,
    5: WEEKDAYS,
    3: frozenset({MON, WED, FRI}),
    2: frozenset({TUE, FRI}),
    1: frozenset({FRI}),
}

MNDA_CHOICES = (None, 21, 14, 7, 0)  # None = unlimited (schedule on arrival)


class PolicyError(DomainError):
    pass


@dataclass(frozen=True)
class PolicyConfig:
    """Schedule-creation weekdays and maximum days in advance per status.

    Emergency patients are always eligible: their SCD is every day and their
    MNDA is unlimited.
    """

    scd: dict[WaitingListStatus, frozenset[int]]
    mnda: dict[WaitingListStatus, Optional[int]]

    def __post_init__(self) -> None:
        if self.scd[WaitingListStatus.EMERGENCY] != ALL_DAYS:
            raise PolicyError("emergency SCD is fixed to every day")
        if self.mnda[WaitingListStatus.EMERGENCY] is not None:
            raise PolicyError("emergency MNDA is fixed to unlimited")

    @classmethod
    def from_counts(cls, scd_urgent: int = 5, scd_routine: int = 5,
                    mnda_urgent: Optional[int] = None,
                    mnda_routine: Optional[int] = None) -> "PolicyConfig":
        for n in (scd_urgent, scd_routine):
            if n not in SCD_CHOICES:
                raise PolicyError(f"SCD value must be one of {sorted(SCD_CHOICES)}")
        for v in (mnda_urgent, mnda_routine):
            if v not in MNDA_CHOICES:
                raise PolicyError(f"MNDA value must be one of {MNDA_CHOICES}")
        return cls(
            scd={
                WaitingListStatus.EMERGENCY: SCD_CHOICES[7],
                WaitingListStatus.URGENT: SCD_CHOICES[scd_urgent],
                WaitingListStatus.ROUTINE: SCD_CHOICES[scd_routine],
            },
            mnda={
                WaitingListStatus.EMERGENCY: None,
                WaitingListStatus.URGENT: mnda_urgent,
                WaitingListStatus.ROUTINE: mnda_routine,
            },
        )

    def label(self) -> str:
        def scd_n(status):
            return len(self.scd[status])

        def mnda_s(status):
            v = self.mnda[status]
            return "inf" if v is None else str(v)

        return (f"scd={scd_n(WaitingListStatus.URGENT)},"
                f"{scd_n(WaitingListStatus.ROUTINE)}"
                f" mnda={mnda_s(WaitingListStatus.URGENT)},"
                f"{mnda_s(WaitingListStatus.ROUTINE)}")


def eligible_for_scheduling(patient: PatientCase, today: int,
                            policy: PolicyConfig, calendar: Calendar) -> bool:
    """True iff today is a creation day for the status and the release date
    is within the status's maximum-days-in-advance window."""
    if calendar.weekday(today) not in policy.scd[patient.status]:
        return False
    mnda = policy.mnda[patient.status]
    if mnda is None:
        return True
    return patient.release_date - today <= mnda


def commit(ledger: BookingLedger, schedule: Schedule,
           batch: Sequence[PatientCase], calendar: Calendar) -> BookingLedger:
    """Book every session of the schedule onto the ledger (in place)."""
    violations = check_feasibility(schedule, batch, ledger, calendar)
    if violations:
        raise PolicyError("commit of infeasible schedule: "
                          + "; ".join(str(v) for v in violations[:5]))
    by_id = {p.id: p for p in batch}
    for rec in expand_schedule(schedule, batch, calendar):
        patient = by_id[rec.patient_id]
        ledger.add(SessionRecord(rec.patient_id, rec.linac_id, rec.day,
                                 patient.durations[rec.session - 1]))
    return ledger


@dataclass(frozen=True)
class PatientOutcome:
    patient_id: str
    status: WaitingListStatus
    weight: int
    booking_date: int
    start_day: int
    linac_id: int
    missed_breach: bool
    missed_jcco_max: bool
    missed_jcco_good: bool
    scored: bool  # False for warm-up arrivals

    @property
    def wait(self) -> int:
        return self.start_day - self.booking_date


@dataclass(frozen=True)
class OutcomeAggregates:
    """Table-style per-instance aggregates over the scored patients."""

    breach_pct: float
    jmax_pct: float
    jgood_pct: float
    waiting: float
    n_scored: int


def aggregate(rows: Sequence[PatientOutcome]) -> OutcomeAggregates:
    scored = [r for r in rows if r.scored]
    n = len(scored)
    if n == 0:
        return OutcomeAggregates(0.0, 0.0, 0.0, 0.0, 0)
    total_weight = sum(r.weight for r in scored)
    return OutcomeAggregates(
        breach_pct=100.0 * sum(r.missed_breach for r in scored) / n,
        jmax_pct=100.0 * sum(r.weight for r in scored if r.missed_jcco_max)
        / total_weight,
        jgood_pct=100.0 * sum(r.weight for r in scored if r.missed_jcco_good)
        / total_weight,
        waiting=sum(r.weight * r.wait * r.wait for r in scored) / n,
        n_scored=n,
    )


@dataclass
class BatchTrace:
    """Criteria of one day's batch, before and after the exact solve."""

    day: int
    size: int
    constructive: CriteriaVector
    final: CriteriaVector


@dataclass
class SimulationOutcome:
    instance_id: str
    policy_label: str
    rows: list[PatientOutcome] = field(default_factory=list)
    batches: list[BatchTrace] = field(default_factory=list)
    event_log: list[str] = field(default_factory=list)

    def aggregates(self) -> OutcomeAggregates:
        return aggregate(self.rows)


def _flags(missed_breach: bool, missed_max: bool, missed_good: bool) -> str:
    return ("B" if missed_breach else "-") + ("M" if missed_max else "-") \
        + ("G" if missed_good else "-")


def run_simulation(instance, policy: PolicyConfig, budget: SolveBudget,
                   seed: int = 0) -> SimulationOutcome:
    """Simulate the booking process for one generated instance.

    ``instance`` is a ``datagen.Instance``.  Patients arriving during the
    warm-up months are committed to the ledger but excluded from the outcome
    aggregates.  The run is deterministic for a fixed node-count budget.
    """
    calendar = Calendar(origin_weekday=instance.origin_weekday)
    capacity = CapacityGrid(calendar, dict(instance.capacity_template))
    ledger = BookingLedger(instance.fleet, capacity)
    outcome = SimulationOutcome(instance.id, policy.label())

    pending = sorted(instance.patients,
                     key=lambda p: (p.booking_date, p.id))
    day = 1
    limit = instance.span_days + 400  # policy deferral can outlast arrivals
    while pending:
        if day > limit:
            raise PolicyError("simulation did not drain the waiting list")
        batch = [p for p in pending
                 if p.booking_date <= day
                 and eligible_for_scheduling(p, day, policy, calendar)]
        if batch:
            cal = calendar.with_horizon(day + 1, None)
            result = solve_batch_detailed(batch, ledger, cal, budget)
            commit(ledger, result.schedule, batch, cal)
            outcome.batches.append(BatchTrace(
                day, len(batch), result.constructive_criteria,
                result.final_criteria))
            for patient in batch:
                linac_id, start = result.schedule.assignments[patient.id]
                contrib = start_contributions(patient, start)
                row = PatientOutcome(
                    patient_id=patient.id,
                    status=patient.status,
                    weight=patient.weight,
                    booking_date=patient.booking_date,
                    start_day=start,
                    linac_id=linac_id,
                    missed_breach=contrib.f1 > 0,
                    missed_jcco_max=contrib.f2 > 0,
                    missed_jcco_good=contrib.f3 > 0,
                    scored=patient.booking_date > instance.warmup_end_day,
                )
                outcome.rows.append(row)
                outcome.event_log.append(
                    f"{day}\t{patient.id}\t{linac_id}\t{start}\t"
                    f"{_flags(row.missed_breach, row.missed_jcco_max, row.missed_jcco_good)}"
                )
            booked = {p.id for p in batch}
            pending = [p for p in pending if p.id not in booked]
        day += 1
    return outcome


def replay_until(instance, policy: PolicyConfig, budget: SolveBudget,
                 day: int) -> tuple[BookingLedger, list[PatientCase], Calendar]:
    """Ledger state just before the given day's batch is solved, plus that
    day's batch and its scheduling calendar (used by the LP exporter)."""
    calendar = Calendar(origin_weekday=instance.origin_weekday)
    capacity = CapacityGrid(calendar, dict(instance.capacity_template))
    ledger = BookingLedger(instance.fleet, capacity)
    pending = sorted(instance.patients, key=lambda p: (p.booking_date, p.id))
    for today in range(1, day + 1):
        batch = [p for p in pending
                 if p.booking_date <= today
                 and eligible_for_scheduling(p, today, policy, calendar)]
        cal = calendar.with_horizon(today + 1, None)
        if today == day:
            return ledger, batch, cal
        if batch:
            schedule = solve_batch_detailed(batch, ledger, cal, budget).schedule
            commit(ledger, schedule, batch, cal)
            booked = set(schedule.assignments)
            pending = [p for p in pending if p.id not in booked]
    raise PolicyError(f"day {day} is before the simulation start")


def render_outcome(outcome: SimulationOutcome) -> str:
    """Tab-separated outcome file: one summary line, then patient rows."""
    agg = outcome.aggregates()
    lines = [
        f"summary\t{outcome.instance_id}\t{outcome.policy_label}\t"
        f"{agg.breach_pct:.6f}\t{agg.jmax_pct:.6f}\t{agg.jgood_pct:.6f}\t"
        f"{agg.waiting:.6f}\t{agg.n_scored}"
    ]
    for row in outcome.rows:
        lines.append(
            f"patient\t{row.patient_id}\t{row.status.name}\t{row.weight}\t"
            f"{row.booking_date}\t{row.start_day}\t{row.linac_id}\t"
            f"{_flags(row.missed_breach, row.missed_jcco_max, row.missed_jcco_good)}\t"
            f"{int(row.scored)}"
        )
    return "\n".join(lines) + "\n"


def parse_outcome_summary(text: str) -> tuple[str, str, OutcomeAggregates]:
    """(instance id, policy label, aggregates) from an outcome file."""
    for line in text.splitlines():
        if line.startswith("summary\t"):
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 8:
                raise PolicyError("malformed outcome summary line")
            _, iid, label, b, jm, jg, w, n = parts
            return iid, label, OutcomeAggregates(
                float(b), float(jm), float(jg), float(w), int(n))
    raise PolicyError("outcome file has no summary line")

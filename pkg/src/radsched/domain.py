"""Domain types and calendar/session-pattern rules shared by every layer.

All dates are integer day indices.  Day 1 is the first day of the scheduling
horizon (or of the simulated booking period); weekday arithmetic is done with
Monday = 0 .. Sunday = 6.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Iterable, Optional

MON, TUE, WED, THU, FRI, SAT, SUN = range(7)
WEEKDAY_NAMES = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")
ALL_DAYS = frozenset(range(7))
WEEKDAYS = frozenset(range(5))


class DomainError(Exception):
    """Base class for instance-data errors."""


class InvalidWeekdayForPattern(DomainError):
    """A session cannot fall on this weekday under the patient's pattern."""


class EmptyStartDaySet(DomainError):
    """No weekday can host the patient's first session (instance data error)."""


class WaitingListStatus(IntEnum):
    """Urgency class; the numeric value is the priority order."""

    EMERGENCY = 3
    URGENT = 2
    ROUTINE = 1


class TreatmentIntent(Enum):
    RADICAL = "radical"
    PALLIATIVE = "palliative"


class MachineType(Enum):
    A = "A"  # low energy photon only
    B = "B"  # low energy photon + electron
    C = "C"  # all three radiation types


class RadiationNeed(Enum):
    """Radiation requirement, collapsed to the machine-type group it maps to."""

    LOW_ENERGY_PHOTON_ONLY = "low"
    ELECTRON_GROUP = "electron"
    HIGH_ENERGY_PHOTON_GROUP = "high"

    @property
    def machine_type(self) -> MachineType:
        return _RADIATION_TO_MACHINE[self]


_RADIATION_TO_MACHINE = {
    RadiationNeed.LOW_ENERGY_PHOTON_ONLY: MachineType.A,
    RadiationNeed.ELECTRON_GROUP: MachineType.B,
    RadiationNeed.HIGH_ENERGY_PHOTON_GROUP: MachineType.C,
}


class Anchor(Enum):
    """Weekday anchor for patients with two session days per week."""

    MON_THU = "mon-thu"
    TUE_FRI = "tue-fri"


_WEIGHTS = {
    WaitingListStatus.EMERGENCY: 10,
    WaitingListStatus.URGENT: 3,
    WaitingListStatus.ROUTINE: 1,
}


def patient_weight(status: WaitingListStatus) -> int:
    """Fixed importance weight of a waiting-list status (10 / 3 / 1)."""
    return _WEIGHTS[status]


# (good practice, maximum acceptable) offsets in days from the booking date.
_JCCO = {
    (WaitingListStatus.EMERGENCY, TreatmentIntent.PALLIATIVE): (1, 2),
    (WaitingListStatus.EMERGENCY, TreatmentIntent.RADICAL): (1, 2),
    (WaitingListStatus.URGENT, TreatmentIntent.PALLIATIVE): (2, 14),
    (WaitingListStatus.URGENT, TreatmentIntent.RADICAL): (14, 28),
    (WaitingListStatus.ROUTINE, TreatmentIntent.PALLIATIVE): (2, 14),
    (WaitingListStatus.ROUTINE, TreatmentIntent.RADICAL): (14, 28),
}

BREACH_OFFSET_DAYS = 31


def jcco_targets(status: WaitingListStatus, intent: TreatmentIntent) -> tuple[int, int]:
    """(good-practice, maximum-acceptable) waiting targets in days."""
    return _JCCO[(status, intent)]


@dataclass(frozen=True)
class SessionPattern:
    """Weekly session-day pattern of a patient.

    ``days_per_week`` is one of 1, 2, 3, 5 or 7; two-days-per-week patterns
    carry an anchor (Mon/Thu or Tue/Fri).  CHART patients are the only ones
    with more than one session per day.
    """

    days_per_week: int
    sessions_per_day: int = 1
    anchor: Optional[Anchor] = None
    chart: bool = False

    def __post_init__(self) -> None:
        if self.days_per_week not in (1, 2, 3, 5, 7):
            raise DomainError(f"bad days_per_week: {self.days_per_week}")
        if self.sessions_per_day < 1:
            raise DomainError("sessions_per_day must be positive")
        if self.days_per_week == 2 and self.anchor is None:
            raise DomainError("2/week pattern requires an anchor")
        if self.chart:
            if self.days_per_week != 7 or self.sessions_per_day != 3:
                raise DomainError("CHART is 3 sessions/day, 7 days/week")
        elif self.sessions_per_day != 1:
            raise DomainError("multiple sessions per day only for CHART")


CHART_PATTERN = SessionPattern(days_per_week=7, sessions_per_day=3, chart=True)
CHART_SESSIONS = 36  # 3 fractions/day for 12 consecutive days

# Day gap to the next session day, keyed by the weekday of the current
# session day.
_GAP_TABLES = {
    1: {d: 7 for d in range(7)},
    (2, Anchor.MON_THU): {MON: 3, THU: 4},
    (2, Anchor.TUE_FRI): {TUE: 3, FRI: 4},
    3: {MON: 2, WED: 2, FRI: 3},
    5: {MON: 1, TUE: 1, WED: 1, THU: 1, FRI: 3},
    7: {d: 1 for d in range(7)},
}


def _gap_table(pattern: SessionPattern) -> dict[int, int]:
    if pattern.days_per_week == 2:
        return _GAP_TABLES[(2, pattern.anchor)]
    return _GAP_TABLES[pattern.days_per_week]


def session_gap(pattern: SessionPattern, weekday: int, session_index: int) -> int:
    """Days between session ``session_index`` (1-based) and the next one.

    Returns 0 for intra-day successors (CHART).  Raises
    InvalidWeekdayForPattern when the weekday cannot host a session.
    """
    table = _gap_table(pattern)
    if weekday not in table:
        raise InvalidWeekdayForPattern(
            f"{WEEKDAY_NAMES[weekday]} cannot host a session "
            f"({pattern.days_per_week}/week)"
        )
    if session_index % pattern.sessions_per_day != 0:
        return 0
    return table[weekday]


def pattern_session_weekdays(pattern: SessionPattern) -> frozenset[int]:
    """Weekdays on which any session day of the pattern may fall."""
    return frozenset(_gap_table(pattern))


def pattern_first_days(pattern: SessionPattern, num_sessions: int, weekend_ok: bool) -> frozenset[int]:
    """Weekdays admissible for the first session, before per-patient limits."""
    if pattern.chart:
        return frozenset({MON})
    if num_sessions == 1 or pattern.days_per_week == 1:
        return ALL_DAYS if weekend_ok else WEEKDAYS
    return pattern_session_weekdays(pattern)


@dataclass(frozen=True)
class SessionExpansion:
    """Deterministic (day offset, duration) list once a start weekday is fixed."""

    entries: tuple[tuple[int, int], ...]

    @property
    def offsets(self) -> tuple[int, ...]:
        return tuple(off for off, _ in self.entries)

    @property
    def last_offset(self) -> int:
        return self.entries[-1][0]

    def daily_load(self) -> list[tuple[int, int]]:
        """Aggregated (day offset, total minutes) pairs, offsets ascending."""
        agg: dict[int, int] = {}
        for off, dur in self.entries:
            agg[off] = agg.get(off, 0) + dur
        return sorted(agg.items())


@dataclass(frozen=True)
class PatientCase:
    """One patient's category, dates, targets and session-plan parameters."""

    id: str
    status: WaitingListStatus
    intent: TreatmentIntent
    radiation: RadiationNeed
    weight: int
    booking_date: int
    release_date: int
    breach_date: int
    jcco_max_date: int
    jcco_good_date: int
    num_sessions: int
    durations: tuple[int, ...]
    pattern: SessionPattern
    min_sessions_before_weekend: int = 0
    doctor_days: Optional[frozenset[int]] = None
    weekend_ok: bool = False

    def __post_init__(self) -> None:
        if self.release_date < self.booking_date:
            raise DomainError(f"{self.id}: release before booking")
        if self.jcco_good_date > self.jcco_max_date:
            raise DomainError(f"{self.id}: good-practice date after maximum")
        if self.num_sessions < 1:
            raise DomainError(f"{self.id}: needs at least one session")
        if len(self.durations) != self.num_sessions:
            raise DomainError(f"{self.id}: expected {self.num_sessions} durations")
        if any(d <= 0 for d in self.durations):
            raise DomainError(f"{self.id}: nonpositive session duration")
        if self.weight <= 0:
            raise DomainError(f"{self.id}: nonpositive weight")
        if self.min_sessions_before_weekend < 0:
            raise DomainError(f"{self.id}: negative min_sessions_before_weekend")
        if self.doctor_days is not None and not self.doctor_days:
            raise DomainError(f"{self.id}: empty doctor_days set")

    @property
    def machine_type(self) -> MachineType:
        return self.radiation.machine_type


def session_expansion(patient: PatientCase, start_weekday: int) -> SessionExpansion:
    """Expand the patient's sessions into (day offset, duration) pairs."""
    pattern = patient.pattern
    entries = []
    off = 0
    wd = start_weekday
    for l in range(1, patient.num_sessions + 1):
        entries.append((off, patient.durations[l - 1]))
        if l < patient.num_sessions:
            gap = session_gap(pattern, wd, l)
            off += gap
            wd = (wd + gap) % 7
    return SessionExpansion(entries=tuple(entries))


def _session_days_before_weekend(patient: PatientCase, start_weekday: int) -> int:
    days_to_sat = (SAT - start_weekday) % 7
    offsets = {off for off, _ in session_expansion(patient, start_weekday).entries}
    return sum(1 for off in offsets if off < days_to_sat)


def allowed_start_days(patient: PatientCase) -> frozenset[int]:
    """The W_j set: weekdays admissible for the patient's first session."""
    days = pattern_first_days(patient.pattern, patient.num_sessions, patient.weekend_ok)
    if patient.min_sessions_before_weekend > 0:
        distinct = len({off for off, _ in
                        session_expansion(patient, min(days)).entries})
        need = min(patient.min_sessions_before_weekend, distinct)
        days = frozenset(
            d for d in days if _session_days_before_weekend(patient, d) >= need
        )
    if patient.doctor_days is not None:
        days &= patient.doctor_days
    if not days:
        raise EmptyStartDaySet(f"{patient.id}: no admissible start weekday")
    return days


@dataclass(frozen=True)
class Linac:
    id: int
    machine_type: MachineType


@dataclass(frozen=True)
class Calendar:
    """Day-index to weekday map plus the horizon bounds for model building."""

    origin_weekday: int = MON  # weekday of day index 1
    first_day: int = 1
    last_day: Optional[int] = None

    def weekday(self, day: int) -> int:
        return (self.origin_weekday + day - 1) % 7

    def with_horizon(self, first_day: int, last_day: Optional[int]) -> "Calendar":
        return Calendar(self.origin_weekday, first_day, last_day)


@dataclass
class CapacityGrid:
    """Minutes available per (linac, day).

    Backed by a per-linac weekly template with optional per-day overrides, so
    the grid extends to any horizon.
    """

    calendar: Calendar
    template: dict[int, tuple[int, ...]]  # linac id -> 7 weekday minutes
    overrides: dict[tuple[int, int], int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for lid, week in self.template.items():
            if len(week) != 7 or any(m < 0 for m in week):
                raise DomainError(f"bad capacity template for linac {lid}")
        if any(m < 0 for m in self.overrides.values()):
            raise DomainError("negative capacity override")

    def minutes(self, linac_id: int, day: int) -> int:
        key = (linac_id, day)
        if key in self.overrides:
            return self.overrides[key]
        return self.template[linac_id][self.calendar.weekday(day)]

    @classmethod
    def uniform(cls, calendar: Calendar, linac_ids: Iterable[int],
                weekday_minutes: int, weekend_minutes: int) -> "CapacityGrid":
        week = (weekday_minutes,) * 5 + (weekend_minutes,) * 2
        return cls(calendar, {lid: week for lid in linac_ids})


# Opening hours of the modelled centre: 8:45-18:00 weekdays, 9:00-13:00
# weekends.
WEEKDAY_CAPACITY_MINUTES = 555
WEEKEND_CAPACITY_MINUTES = 240


def default_fleet() -> tuple[Linac, ...]:
    """One type-A, one type-B and two type-C machines."""
    return (
        Linac(1, MachineType.A),
        Linac(2, MachineType.B),
        Linac(3, MachineType.C),
        Linac(4, MachineType.C),
    )


@dataclass(frozen=True)
class SessionRecord:
    """One committed session on the booking ledger."""

    patient_id: str
    linac_id: int
    day: int
    duration: int


class CapacityViolation(DomainError):
    """Commit would exceed a linac's daily capacity (programming error guard)."""


class BookingLedger:
    """Committed load per (linac, day); the persistent simulation state."""

    def __init__(self, linacs: Iterable[Linac], capacity: CapacityGrid) -> None:
        self.linacs = tuple(sorted(linacs, key=lambda m: m.id))
        self.capacity = capacity
        self._load: dict[tuple[int, int], int] = {}
        self._records: list[SessionRecord] = []

    @property
    def records(self) -> tuple[SessionRecord, ...]:
        return tuple(self._records)

    def load(self, linac_id: int, day: int) -> int:
        return self._load.get((linac_id, day), 0)

    def remaining(self, linac_id: int, day: int) -> int:
        return self.capacity.minutes(linac_id, day) - self.load(linac_id, day)

    def linacs_of_type(self, machine_type: MachineType) -> tuple[Linac, ...]:
        return tuple(m for m in self.linacs if m.machine_type == machine_type)

    def add(self, record: SessionRecord) -> None:
        if record.duration > self.remaining(record.linac_id, record.day):
            raise CapacityViolation(
                f"linac {record.linac_id} day {record.day}: "
                f"{record.duration} min does not fit"
            )
        self._load[(record.linac_id, record.day)] = (
            self.load(record.linac_id, record.day) + record.duration
        )
        self._records.append(record)

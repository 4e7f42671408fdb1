"""Seeded synthetic instance generator.

Reproduces the statistical shape of the experimental data sets: the category
mix, mean pre-treatment gaps, session-count and session-pattern frequencies,
and the weekly arrival seasonality.  Parametric families (lognormal gaps,
Poisson arrivals) are declared here; the overall arrival rate is a calibrated
config value, not ground truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .domain import (
    Anchor,
    BREACH_OFFSET_DAYS,
    CHART_PATTERN,
    CHART_SESSIONS,
    DomainError,
    EmptyStartDaySet,
    Linac,
    MON,
    PatientCase,
    RadiationNeed,
    SessionPattern,
    TreatmentIntent,
    WaitingListStatus,
    WEEKDAY_CAPACITY_MINUTES,
    WEEKEND_CAPACITY_MINUTES,
    allowed_start_days,
    default_fleet,
    jcco_targets,
    pattern_first_days,
    patient_weight,
)


class InvalidConfig(DomainError):
    pass


class DisallowedCategory(DomainError):
    """The category is a structural zero of the mix table."""


DAYS_PER_MONTH = 30.4375

# Proportion (%) of each (status, intent, radiation) combination.
CATEGORY_MIX: dict[tuple[WaitingListStatus, TreatmentIntent, RadiationNeed], float] = {
    (WaitingListStatus.EMERGENCY, TreatmentIntent.PALLIATIVE,
     RadiationNeed.HIGH_ENERGY_PHOTON_GROUP): 1.3,
    (WaitingListStatus.EMERGENCY, TreatmentIntent.PALLIATIVE,
     RadiationNeed.LOW_ENERGY_PHOTON_ONLY): 2.4,
    (WaitingListStatus.URGENT, TreatmentIntent.PALLIATIVE,
     RadiationNeed.HIGH_ENERGY_PHOTON_GROUP): 17.1,
    (WaitingListStatus.URGENT, TreatmentIntent.PALLIATIVE,
     RadiationNeed.LOW_ENERGY_PHOTON_ONLY): 14.4,
    (WaitingListStatus.URGENT, TreatmentIntent.PALLIATIVE,
     RadiationNeed.ELECTRON_GROUP): 10.2,
    (WaitingListStatus.ROUTINE, TreatmentIntent.PALLIATIVE,
     RadiationNeed.LOW_ENERGY_PHOTON_ONLY): 2.8,
    (WaitingListStatus.ROUTINE, TreatmentIntent.PALLIATIVE,
     RadiationNeed.ELECTRON_GROUP): 1.5,
    (WaitingListStatus.ROUTINE, TreatmentIntent.RADICAL,
     RadiationNeed.HIGH_ENERGY_PHOTON_GROUP): 20.5,
    (WaitingListStatus.ROUTINE, TreatmentIntent.RADICAL,
     RadiationNeed.LOW_ENERGY_PHOTON_ONLY): 15.1,
    (WaitingListStatus.ROUTINE, TreatmentIntent.RADICAL,
     RadiationNeed.ELECTRON_GROUP): 14.6,
}


def _gap_class(status: WaitingListStatus, intent: TreatmentIntent) -> str:
    if status == WaitingListStatus.EMERGENCY:
        return "emergency"
    if status == WaitingListStatus.URGENT:
        return "urgent"
    if intent == TreatmentIntent.PALLIATIVE:
        return "routine-palliative"
    return "routine-radical"


def _default_profile(status: WaitingListStatus) -> tuple[float, ...]:
    """Weekly arrival multipliers: winter trough, spring peaks, year-end drop.

    The drop in the last two weeks is attenuated for emergency and urgent
    patients.  Each profile is normalised to mean 1 so the category mix is
    preserved in expectation.
    """
    prof = [1.0] * 52
    if status == WaitingListStatus.ROUTINE:
        for w in range(0, 8):
            prof[w] = 0.85
        for w in range(8, 13):
            prof[w] = 0.85 + 0.15 * (w - 7) / 5
        for w in range(13, 22):
            prof[w] = 1.15
        prof[50] = prof[51] = 0.55
    elif status == WaitingListStatus.URGENT:
        for w in range(0, 8):
            prof[w] = 0.92
        for w in range(13, 22):
            prof[w] = 1.10
        prof[50] = prof[51] = 0.72
    else:  # emergency: smaller variation early in the year, milder drop
        for w in range(0, 17):
            prof[w] = 0.97
        for w in range(13, 22):
            prof[w] = 1.05
        prof[50] = prof[51] = 0.85
    mean = sum(prof) / 52
    return tuple(p / mean for p in prof)


@dataclass(frozen=True)
class GeneratorConfig:
    instances: int = 33
    span_months: int = 18
    warmup_months: int = 6
    # CALIBRATED: tuned so the four-linac fleet runs contended but drains.
    mean_weekday_arrivals: float = 12.0
    category_mix: dict = field(default_factory=lambda: dict(CATEGORY_MIX))
    # Pre-treatment gap lognormals: class -> (mean days, sigma).
    gap_params: dict = field(default_factory=lambda: {
        "emergency": (1.0, 0.8),
        "urgent": (11.0, 0.55),
        "routine-palliative": (18.0, 0.60),
        "routine-radical": (33.0, 0.585),
    })
    urgent_single_fraction: float = 0.63
    urgent_five_per_week: float = 0.386
    urgent_multi_sessions: dict = field(default_factory=lambda: {
        2: 0.20, 3: 0.20, 5: 0.30, 6: 0.15, 10: 0.15})
    routine_pattern: dict = field(default_factory=lambda: {
        "five": 0.95, "chart": 0.015, "two": 0.015, "three": 0.02})
    routine_multiple_of_five: float = 0.68
    routine_sessions_mult5: dict = field(default_factory=lambda: {
        5: 0.06, 10: 0.09, 15: 0.14, 20: 0.24, 25: 0.24, 30: 0.23})
    routine_sessions_other: dict = field(default_factory=lambda: {
        4: 0.06, 7: 0.08, 8: 0.08, 12: 0.10, 13: 0.08, 16: 0.10,
        18: 0.10, 21: 0.10, 23: 0.10, 27: 0.10, 31: 0.10})
    session_minutes: int = 12
    first_session_extra_minutes: int = 3
    palliative_early_fraction: float = 0.25  # min 2 session days before weekend
    same_week_fraction: float = 0.50  # 5/week, <=5 sessions, all on one week
    doctor_fraction: float = 0.10
    seasonality: dict = field(default_factory=lambda: {
        status: _default_profile(status) for status in WaitingListStatus})

    def validate(self) -> None:
        total = sum(self.category_mix.values())
        if not math.isclose(total, 100.0, abs_tol=0.5):
            raise InvalidConfig(f"category mix sums to {total}, expected ~100")
        if self.instances < 1 or self.span_months < 1:
            raise InvalidConfig("need at least one instance and one month")
        if self.warmup_months >= self.span_months:
            raise InvalidConfig("warm-up must be shorter than the span")
        if self.mean_weekday_arrivals <= 0:
            raise InvalidConfig("arrival rate must be positive")
        for prof in self.seasonality.values():
            if len(prof) != 52 or any(p <= 0 for p in prof):
                raise InvalidConfig("profiles need 52 positive multipliers")

    @property
    def span_days(self) -> int:
        return round(self.span_months * DAYS_PER_MONTH)

    @property
    def warmup_end_day(self) -> int:
        return round(self.warmup_months * DAYS_PER_MONTH)

    def status_share(self, status: WaitingListStatus) -> float:
        total = sum(self.category_mix.values())
        return sum(v for (s, _, _), v in self.category_mix.items()
                   if s == status) / total


@dataclass(frozen=True)
class Instance:
    id: str
    origin_weekday: int
    span_days: int
    warmup_end_day: int
    fleet: tuple[Linac, ...]
    capacity_template: dict[int, tuple[int, ...]]
    patients: tuple[PatientCase, ...]


def seasonal_arrival_rate(config: GeneratorConfig, week_of_year: int,
                          status: WaitingListStatus) -> float:
    """Expected arrivals per arrival day for the status in that week."""
    if not 1 <= week_of_year <= 52:
        raise InvalidConfig(f"week out of range: {week_of_year}")
    weekly_total = config.mean_weekday_arrivals * 5
    arrival_days = 7 if status == WaitingListStatus.EMERGENCY else 5
    base = weekly_total * config.status_share(status) / arrival_days
    return base * config.seasonality[status][week_of_year - 1]


def _sample_gap(config: GeneratorConfig, status: WaitingListStatus,
                intent: TreatmentIntent, rng: np.random.Generator) -> int:
    mean, sigma = config.gap_params[_gap_class(status, intent)]
    mu = math.log(mean) - sigma * sigma / 2
    x = rng.lognormal(mu, sigma)
    # Stochastic rounding keeps the discretised mean unbiased.
    low = math.floor(x)
    return low + (1 if rng.random() < x - low else 0)


def _choice(rng: np.random.Generator, table: dict):
    keys = list(table)
    probs = np.array([table[k] for k in keys], dtype=float)
    return keys[rng.choice(len(keys), p=probs / probs.sum())]


def _sample_sessions_and_pattern(config: GeneratorConfig,
                                 status: WaitingListStatus,
                                 intent: TreatmentIntent,
                                 rng: np.random.Generator
                                 ) -> tuple[int, SessionPattern]:
    if status == WaitingListStatus.EMERGENCY:
        return 1, SessionPattern(days_per_week=1)
    if status == WaitingListStatus.URGENT:
        five = rng.random() < config.urgent_five_per_week
        pattern = SessionPattern(days_per_week=5) if five \
            else SessionPattern(days_per_week=1)
        if rng.random() < config.urgent_single_fraction:
            return 1, pattern
        return int(_choice(rng, config.urgent_multi_sessions)), pattern
    # Routine.
    kind = _choice(rng, config.routine_pattern)
    if kind == "chart" and intent == TreatmentIntent.PALLIATIVE:
        kind = "five"  # CHART is a radical regimen
    if kind == "chart":
        return CHART_SESSIONS, CHART_PATTERN
    if kind == "two":
        anchor = Anchor.MON_THU if rng.random() < 0.5 else Anchor.TUE_FRI
        pattern = SessionPattern(days_per_week=2, anchor=anchor)
    elif kind == "three":
        pattern = SessionPattern(days_per_week=3)
    else:
        pattern = SessionPattern(days_per_week=5)
    if rng.random() < config.routine_multiple_of_five:
        sessions = int(_choice(rng, config.routine_sessions_mult5))
    else:
        sessions = int(_choice(rng, config.routine_sessions_other))
    return sessions, pattern


def sample_patient(config: GeneratorConfig, status: WaitingListStatus,
                   intent: TreatmentIntent, radiation: RadiationNeed,
                   rng: np.random.Generator, patient_id: str = "p0",
                   booking_day: int = 1) -> PatientCase:
    """Populate one patient consistently with the core-domain invariants."""
    if (status, intent, radiation) not in config.category_mix:
        raise DisallowedCategory(f"({status.name}, {intent.name}, {radiation.name})")
    sessions, pattern = _sample_sessions_and_pattern(config, status, intent, rng)
    gap = _sample_gap(config, status, intent, rng)
    good, maxacc = jcco_targets(status, intent)
    base = config.session_minutes
    durations = (base + config.first_session_extra_minutes,) + (base,) * (sessions - 1)

    weekend_ok = pattern.chart or (
        status == WaitingListStatus.EMERGENCY and sessions == 1)

    min_before = 0
    if (pattern.days_per_week == 5 and sessions > 1
            and intent == TreatmentIntent.PALLIATIVE
            and rng.random() < config.palliative_early_fraction):
        min_before = 2
    if (pattern.days_per_week == 5 and 2 <= sessions <= 5
            and rng.random() < config.same_week_fraction):
        min_before = max(min_before, sessions)

    doctor_days: Optional[frozenset[int]] = None
    if (status != WaitingListStatus.EMERGENCY
            and rng.random() < config.doctor_fraction):
        admissible = sorted(pattern_first_days(pattern, sessions, weekend_ok)
                            & frozenset(range(5)))
        if admissible:
            anchor_day = admissible[int(rng.integers(len(admissible)))]
            other = int(rng.integers(5))
            doctor_days = frozenset({anchor_day, other})

    patient = PatientCase(
        id=patient_id,
        status=status,
        intent=intent,
        radiation=radiation,
        weight=patient_weight(status),
        booking_date=booking_day,
        release_date=booking_day + gap,
        breach_date=booking_day + BREACH_OFFSET_DAYS,
        jcco_max_date=booking_day + maxacc,
        jcco_good_date=booking_day + good,
        num_sessions=sessions,
        durations=durations,
        pattern=pattern,
        min_sessions_before_weekend=min_before,
        doctor_days=doctor_days,
        weekend_ok=weekend_ok,
    )
    try:
        allowed_start_days(patient)
    except EmptyStartDaySet:
        # Doctor availability clashed with the weekend rule; drop the
        # doctor constraint rather than emit an unschedulable patient.
        patient = replace(patient, doctor_days=None)
    return patient


def _conditional_mix(config: GeneratorConfig, status: WaitingListStatus) -> dict:
    return {(i, r): v for (s, i, r), v in config.category_mix.items()
            if s == status}


def generate_instance(config: GeneratorConfig, master_seed: int,
                      index: int) -> Instance:
    """One instance; deterministic in (config, master_seed, index)."""
    config.validate()
    rng = np.random.default_rng([master_seed, index])
    fleet = default_fleet()
    week_template = (WEEKDAY_CAPACITY_MINUTES,) * 5 + (WEEKEND_CAPACITY_MINUTES,) * 2
    capacity_template = {m.id: week_template for m in fleet}
    origin = MON
    patients: list[PatientCase] = []
    counter = 0
    for day in range(1, config.span_days + 1):
        weekday = (origin + day - 1) % 7
        week = (day - 1) // 7 % 52 + 1
        for status in (WaitingListStatus.EMERGENCY, WaitingListStatus.URGENT,
                       WaitingListStatus.ROUTINE):
            if weekday >= 5 and status != WaitingListStatus.EMERGENCY:
                continue
            rate = seasonal_arrival_rate(config, week, status)
            for _ in range(int(rng.poisson(rate))):
                intent, radiation = _choice(rng, _conditional_mix(config, status))
                counter += 1
                patients.append(sample_patient(
                    config, status, intent, radiation, rng,
                    patient_id=f"i{index:02d}p{counter:05d}",
                    booking_day=day))
    return Instance(
        id=f"inst{index:02d}",
        origin_weekday=origin,
        span_days=config.span_days,
        warmup_end_day=config.warmup_end_day,
        fleet=fleet,
        capacity_template=capacity_template,
        patients=tuple(patients),
    )


def generate_instances(config: GeneratorConfig, master_seed: int
                       ) -> list[Instance]:
    """All instances for the configured experiment."""
    return [generate_instance(config, master_seed, idx)
            for idx in range(config.instances)]

import numpy as np
import pytest

from radsched.domain import (
    BookingLedger,
    Calendar,
    CapacityGrid,
    Linac,
    MachineType,
    PatientCase,
    RadiationNeed,
    SessionPattern,
    TreatmentIntent,
    WaitingListStatus,
)
from radsched.model import build_compact_model, check_feasibility, evaluate_criteria
from radsched.solver import (
    SolveBudget,
    compute_horizon,
    constructive_schedule,
    decompose,
    lexicographic_solve,
    solve_batch,
    solve_batch_detailed,
)

import oracles

UNLIMITED = SolveBudget(total_seconds=None)


def patient(pid, radiation=RadiationNeed.HIGH_ENERGY_PHOTON_GROUP,
            sessions=2, **overrides):
    base = dict(
        id=pid,
        status=WaitingListStatus.ROUTINE,
        intent=TreatmentIntent.RADICAL,
        radiation=radiation,
        weight=1,
        booking_date=1,
        release_date=1,
        breach_date=40,
        jcco_max_date=30,
        jcco_good_date=20,
        num_sessions=sessions,
        durations=(15,) + (12,) * (sessions - 1),
        pattern=SessionPattern(days_per_week=5),
    )
    base.update(overrides)
    return PatientCase(**base)


def setup(horizon=15, weekday=100, weekend=40):
    calendar = Calendar(first_day=1, last_day=horizon)
    fleet = (Linac(1, MachineType.A), Linac(2, MachineType.B),
             Linac(3, MachineType.C), Linac(4, MachineType.C))
    grid = CapacityGrid.uniform(calendar, (1, 2, 3, 4), weekday, weekend)
    return calendar, BookingLedger(fleet, grid)


class TestConstructive:
    def test_feasible_and_earliest_leaning(self):
        calendar, ledger = setup()
        batch = [patient(f"p{i}") for i in range(4)]
        schedule = constructive_schedule(batch, ledger, calendar)
        assert check_feasibility(schedule, batch, ledger, calendar) == []

    def test_priority_order(self):
        calendar = Calendar(first_day=1, last_day=15)
        fleet = (Linac(1, MachineType.C),)
        grid = CapacityGrid.uniform(calendar, (1,), 15, 0)
        ledger = BookingLedger(fleet, grid)
        # Only one session fits per day, so the emergency patient must get
        # the earliest start.
        batch = [
            patient("routine", sessions=1),
            patient("emergency", sessions=1,
                    status=WaitingListStatus.EMERGENCY,
                    intent=TreatmentIntent.PALLIATIVE, weight=10,
                    breach_date=32, jcco_max_date=3, jcco_good_date=2),
        ]
        schedule = constructive_schedule(batch, ledger, calendar)
        assert schedule.start_day("emergency") < schedule.start_day("routine")

    def test_extends_past_nominal_horizon(self):
        calendar, ledger = setup(horizon=3, weekday=15, weekend=0)
        batch = [patient(f"p{i}", sessions=1) for i in range(6)]
        schedule = constructive_schedule(batch, ledger, calendar)
        assert len(schedule.assignments) == 6


class TestHorizonAndDecompose:
    def test_horizon_adds_slack(self):
        calendar, ledger = setup()
        batch = [patient("p0", sessions=5)]
        schedule = constructive_schedule(batch, ledger, calendar)
        start = schedule.start_day("p0")
        # Five sessions at 5/week span five days from a Monday start.
        assert compute_horizon(schedule, batch, calendar) == start + 4 + 14

    def test_decompose_by_machine_type(self):
        batch = [patient("a", RadiationNeed.LOW_ENERGY_PHOTON_ONLY),
                 patient("b", RadiationNeed.ELECTRON_GROUP),
                 patient("c"), patient("d")]
        groups = decompose(batch)
        assert [p.id for p in groups[MachineType.A]] == ["a"]
        assert [p.id for p in groups[MachineType.B]] == ["b"]
        assert [p.id for p in groups[MachineType.C]] == ["c", "d"]


class TestLexicographicSolve:
    def test_matches_oracle_on_random_instances(self):
        rng = np.random.default_rng(11)
        for _ in range(15):
            batch, ledger, calendar = oracles.random_setup(
                rng, max_patients=4, max_linacs=2, horizon=14,
                product_cap=50_000, require_feasible=True)
            best = oracles.oracle_lex_best(batch, ledger, calendar)
            schedule = solve_batch(batch, ledger, calendar, UNLIMITED,
                                   horizon=calendar.last_day)
            got = tuple(evaluate_criteria(schedule, batch))
            assert got == best

    def test_stage_results_are_monotone_caps(self):
        calendar, ledger = setup()
        batch = [patient(f"p{i}", sessions=1) for i in range(3)]
        model = build_compact_model(batch, ledger, calendar)
        warm = constructive_schedule(batch, ledger, calendar)
        schedule, stages = lexicographic_solve(model, UNLIMITED, warm)
        assert [s.objective for s in stages] == [1, 2, 3, 4]
        assert all(s.proven_optimal for s in stages)
        criteria = evaluate_criteria(schedule, batch)
        assert tuple(criteria) == tuple(s.value for s in stages)

    def test_node_limit_still_returns_feasible(self):
        calendar, ledger = setup()
        batch = [patient(f"p{i}") for i in range(5)]
        budget = SolveBudget(total_seconds=None, node_limit=3)
        result = solve_batch_detailed(batch, ledger, calendar, budget)
        assert check_feasibility(result.schedule, batch, ledger, calendar) == []

    def test_never_worse_than_warm_start(self):
        rng = np.random.default_rng(23)
        for _ in range(10):
            batch, ledger, calendar = oracles.random_setup(
                rng, max_patients=4, max_linacs=2, horizon=14,
                product_cap=50_000, require_feasible=True)
            result = solve_batch_detailed(batch, ledger, calendar, UNLIMITED)
            assert tuple(result.final_criteria) <= tuple(
                result.constructive_criteria)

    def test_deterministic_tie_break(self):
        calendar, ledger = setup()
        batch = [patient(f"p{i}", sessions=1, jcco_good_date=40,
                         jcco_max_date=40) for i in range(2)]
        first = solve_batch(batch, ledger, calendar, UNLIMITED)
        for _ in range(3):
            again = solve_batch(batch, ledger, calendar, UNLIMITED)
            assert again.assignments == first.assignments


class TestBudget:
    def test_share_split(self):
        budget = SolveBudget(total_seconds=9.0)
        assert budget.share_seconds == 3.0
        assert budget.share_for(2) == 3.0
        redistributed = SolveBudget(total_seconds=9.0, redistribute=True)
        assert redistributed.share_for(2) == 4.5

    def test_deadline_respected(self):
        import time

        calendar, ledger = setup(horizon=60)
        batch = [patient(f"p{i}", sessions=3) for i in range(9)]
        t0 = time.monotonic()
        solve_batch(batch, ledger, calendar, SolveBudget(total_seconds=0.3))
        assert time.monotonic() - t0 < 3.0

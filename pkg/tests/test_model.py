from pathlib import Path

import numpy as np
import pytest

from radsched.domain import (
    Anchor,
    BookingLedger,
    Calendar,
    CapacityGrid,
    Linac,
    MachineType,
    PatientCase,
    RadiationNeed,
    SessionPattern,
    SessionRecord,
    TreatmentIntent,
    WaitingListStatus,
)
from radsched.model import (
    CriteriaVector,
    HorizonTooShort,
    ModelError,
    PlacementRecord,
    Schedule,
    UnassignedPatient,
    build_compact_model,
    build_full_model,
    check_feasibility,
    evaluate_criteria,
    expand_schedule,
    export_lp,
    start_contributions,
)

import oracles

DATA_DIR = Path(__file__).parent / "data"


def patient(pid="p1", sessions=3, pattern=None, **overrides) -> PatientCase:
    base = dict(
        id=pid,
        status=WaitingListStatus.URGENT,
        intent=TreatmentIntent.PALLIATIVE,
        radiation=RadiationNeed.HIGH_ENERGY_PHOTON_GROUP,
        weight=3,
        booking_date=1,
        release_date=1,
        breach_date=32,
        jcco_max_date=15,
        jcco_good_date=3,
        num_sessions=sessions,
        durations=(15,) + (12,) * (sessions - 1),
        pattern=pattern or SessionPattern(days_per_week=5),
    )
    base.update(overrides)
    return PatientCase(**base)


def small_setup(horizon=12, weekday_minutes=100, weekend_minutes=40):
    calendar = Calendar(first_day=1, last_day=horizon)
    fleet = (Linac(1, MachineType.C), Linac(2, MachineType.C))
    grid = CapacityGrid.uniform(calendar, (1, 2), weekday_minutes,
                                weekend_minutes)
    return calendar, BookingLedger(fleet, grid)


class TestCriteria:
    def test_start_contributions(self):
        p = patient()
        c = start_contributions(p, 5)
        assert c == CriteriaVector(0, 0, 3, 3 * 16)
        assert start_contributions(p, 33).f1 == 1
        assert start_contributions(p, 16).f2 == 3
        # Boundary days themselves are on time.
        assert start_contributions(p, 3).f3 == 0
        assert start_contributions(p, 15).f2 == 0
        assert start_contributions(p, 32).f1 == 0

    def test_evaluate_requires_complete_schedule(self):
        with pytest.raises(UnassignedPatient):
            evaluate_criteria(Schedule({}), [patient()])


class TestExpandSchedule:
    def test_records_follow_the_gap_rules(self):
        calendar, _ = small_setup()
        p = patient(sessions=4)
        records = expand_schedule(Schedule({"p1": (1, 4)}), [p], calendar)
        # Thursday start: Thu, Fri, Mon, Tue.
        assert [r.day for r in records] == [4, 5, 8, 9]
        assert [r.session for r in records] == [1, 2, 3, 4]


class TestCompactModel:
    def test_candidates_respect_release_and_weekdays(self):
        calendar, ledger = small_setup()
        p = patient(release_date=3)
        model = build_compact_model([p], ledger, calendar)
        days = {c.start_day for c in model.candidates["p1"]}
        assert min(days) >= 3
        assert all(calendar.weekday(d) < 5 for d in days)

    def test_horizon_too_short(self):
        calendar, ledger = small_setup(horizon=2)
        with pytest.raises(HorizonTooShort):
            build_compact_model([patient(sessions=10)], ledger, calendar)

    def test_ledger_load_is_subtracted(self):
        calendar, ledger = small_setup()
        ledger.add(SessionRecord("q", 1, 2, 70))
        model = build_compact_model([patient()], ledger, calendar)
        assert model.remaining[(1, 2)] == 30

    def test_unbounded_horizon_rejected(self):
        calendar = Calendar(first_day=1, last_day=None)
        _, ledger = small_setup()
        with pytest.raises(ModelError):
            build_compact_model([patient()], ledger, calendar)


class TestFullModel:
    def test_every_tail_variable_is_linked(self):
        calendar, ledger = small_setup()
        model = build_full_model([patient(sessions=3), patient("p2", 1)],
                                 ledger, calendar)
        tails = {v for v in model.free if v[3] > 1}
        assert tails == set(model.linkage.values())

    def test_matches_oracle_solution_set(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            batch, ledger, calendar = oracles.random_setup(
                rng, max_patients=3, max_linacs=2, horizon=12,
                product_cap=20_000)
            full = build_full_model(batch, ledger, calendar)
            sols = {frozenset((lid, j, day, 1)
                              for j, (pid, (lid, day)) in enumerate(
                                  sorted(assign.items()), start=1))
                    for assign, _ in oracles.oracle_enumerate(
                        batch, ledger, calendar)}
            heads = {frozenset(chain) for chain in _head_products(full)}
            # Same first-session choices must be available in both.
            avail_full = {(v[1], v[0], v[2]) for v in full.free if v[3] == 1}
            avail_oracle = set()
            for j, p in enumerate(batch, start=1):
                eligible = [m.id for m in ledger.linacs
                            if m.machine_type == p.machine_type]
                for lid, day, _ in oracles.oracle_options(p, eligible, calendar):
                    avail_oracle.add((j, lid, day))
            assert avail_full == avail_oracle
            del sols, heads


def _head_products(model):
    # Placeholder used only to exercise the chains; full equivalence is in
    # the acceptance suite.
    for (j, l), entries in model.assignment_rows.items():
        if l == 1:
            yield [(i, j, k, 1) for i, k in entries]


class TestExportLp:
    def _tiny_model(self):
        calendar = Calendar(first_day=1, last_day=7)
        fleet = (Linac(1, MachineType.C),)
        grid = CapacityGrid.uniform(calendar, (1,), 60, 0)
        ledger = BookingLedger(fleet, grid)
        batch = [
            patient("p1", sessions=2,
                    pattern=SessionPattern(days_per_week=2,
                                           anchor=Anchor.MON_THU)),
            patient("p2", sessions=1, jcco_good_date=1),
        ]
        return build_full_model(batch, ledger, calendar)

    def test_structure(self):
        text = export_lp(self._tiny_model(), objective=4)
        assert text.startswith("Minimize\n obj:")
        assert "Subject To" in text
        assert text.endswith("End\n")
        assert " = 1" in text and " <= " in text

    def test_objectives_share_constraints(self):
        model = self._tiny_model()
        texts = [export_lp(model, objective=m) for m in (1, 2, 3, 4)]
        bodies = [t.split("Subject To")[1] for t in texts]
        assert all(b == bodies[0] for b in bodies)

    def test_golden_file(self):
        text = export_lp(self._tiny_model(), objective=4)
        golden = DATA_DIR / "tiny_model_obj4.lp"
        assert text == golden.read_text(encoding="utf-8")

    def test_bad_objective(self):
        with pytest.raises(ModelError):
            export_lp(self._tiny_model(), objective=5)


class TestVerifier:
    def _feasible(self):
        calendar, ledger = small_setup()
        batch = [patient("p1", sessions=3), patient("p2", sessions=1)]
        schedule = Schedule({"p1": (1, 1), "p2": (2, 2)})
        return calendar, ledger, batch, schedule

    def test_accepts_feasible_schedule(self):
        calendar, ledger, batch, schedule = self._feasible()
        assert check_feasibility(schedule, batch, ledger, calendar) == []

    def test_detects_wrong_machine_type(self):
        calendar, _ = small_setup()
        fleet = (Linac(1, MachineType.A), Linac(2, MachineType.C))
        grid = CapacityGrid.uniform(calendar, (1, 2), 100, 40)
        ledger = BookingLedger(fleet, grid)
        batch = [patient("p1", sessions=1)]  # needs type C
        violations = check_feasibility(Schedule({"p1": (1, 1)}), batch,
                                       ledger, calendar)
        assert [v.family for v in violations] == ["eligibility"]

    def test_detects_gap_break(self):
        calendar, ledger, batch, schedule = self._feasible()
        records = expand_schedule(schedule, batch, calendar)
        records = [r._replace(day=r.day + 1)
                   if (r.patient_id, r.session) == ("p1", 3) else r
                   for r in records]
        violations = check_feasibility(records, batch, ledger, calendar)
        assert [v.family for v in violations] == ["gap"]

    def test_detects_machine_switch_as_gap_break(self):
        calendar, ledger, batch, schedule = self._feasible()
        records = expand_schedule(schedule, batch, calendar)
        records = [r._replace(linac_id=2)
                   if (r.patient_id, r.session) == ("p1", 2) else r
                   for r in records]
        violations = check_feasibility(records, batch, ledger, calendar)
        assert {v.family for v in violations} == {"gap"}

    def test_detects_missing_and_duplicate_sessions(self):
        calendar, ledger, batch, schedule = self._feasible()
        records = expand_schedule(schedule, batch, calendar)
        violations = check_feasibility(records[:-1], batch, ledger, calendar)
        assert [v.family for v in violations] == ["assignment"]
        violations = check_feasibility(records + [records[0]], batch,
                                       ledger, calendar)
        assert "assignment" in {v.family for v in violations}

    def test_detects_capacity_overrun(self):
        calendar, _ = small_setup(weekday_minutes=20)
        fleet = (Linac(1, MachineType.C),)
        grid = CapacityGrid.uniform(calendar, (1,), 20, 0)
        ledger = BookingLedger(fleet, grid)
        batch = [patient("p1", sessions=1), patient("p2", sessions=1)]
        schedule = Schedule({"p1": (1, 1), "p2": (1, 1)})
        violations = check_feasibility(schedule, batch, ledger, calendar)
        assert [v.family for v in violations] == ["capacity"]

    def test_violation_rendering(self):
        calendar, ledger, batch, _ = self._feasible()
        records = [PlacementRecord("p2", 1, 2, 0)]
        violations = check_feasibility(
            records + expand_schedule(Schedule({"p1": (1, 1)}), batch[:1],
                                      calendar),
            batch, ledger, calendar)
        assert any(str(v).startswith("release i=2 j=p2 k=0 l=1")
                   for v in violations)

"""Constructive heuristic, sub-problem decomposition and the exact
lexicographic stage solver.

Each daily batch is split by machine-type group, warm-started from a greedy
earliest-day schedule and then solved stage by stage: stage m minimises
objective m subject to caps on all earlier objectives, by depth-first branch
and bound over the compact (linac, start day) candidates.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from .domain import (
    BookingLedger,
    Calendar,
    DomainError,
    MachineType,
    PatientCase,
    allowed_start_days,
    session_expansion,
)
from .model import (
    Candidate,
    CompactModel,
    CriteriaVector,
    Schedule,
    build_compact_model,
    evaluate_criteria,
)


class SolverError(DomainError):
    pass


class NoFeasiblePlacement(SolverError):
    """No day admits the patient even after extending the horizon."""


class InfeasibleModel(SolverError):
    """The warm start does not map onto the model's candidate sets."""


# Days the constructive heuristic will extend past the nominal horizon before
# giving up; with template-backed capacity grids this is never reached.
_MAX_EXTENSION_DAYS = 3660

HORIZON_SLACK_DAYS = 14  # search-space margin added to the constructive end


@dataclass(frozen=True)
class SolveBudget:
    """Wall-clock budget for one batch, split across the machine groups."""

    total_seconds: float = 10.0
    subproblems: int = 3
    node_limit: Optional[int] = None  # per stage; makes runs reproducible
    redistribute: bool = False  # give empty groups' shares to the others

    @property
    def share_seconds(self) -> float:
        return self.total_seconds / self.subproblems

    def share_for(self, nonempty_groups: int) -> float:
        if self.redistribute and nonempty_groups > 0:
            return self.total_seconds / nonempty_groups
        return self.share_seconds


@dataclass(frozen=True)
class StageResult:
    objective: int
    value: int
    proven_optimal: bool
    nodes: int
    elapsed: float


def _sort_key(patient: PatientCase) -> tuple:
    return (-int(patient.status), patient.breach_date, patient.jcco_max_date,
            -patient.num_sessions, patient.id)


def constructive_schedule(batch: Sequence[PatientCase], ledger: BookingLedger,
                          calendar: Calendar) -> Schedule:
    """Greedy earliest-day placement in priority order.

    Patients are sorted by status, breach date, JCCO maximum date, session
    count (desc) and id, then placed on the earliest (day, linac) that fits
    all their sessions given the ledger plus the placements made so far.
    """
    if not batch:
        return Schedule({})
    first = calendar.first_day
    extra: dict[tuple[int, int], int] = {}
    assignments: dict[str, tuple[int, int]] = {}
    for patient in sorted(batch, key=_sort_key):
        starts = allowed_start_days(patient)
        expansions = {wd: session_expansion(patient, wd) for wd in starts}
        linacs = ledger.linacs_of_type(patient.machine_type)
        placed = False
        for day in range(max(patient.release_date, first),
                         first + _MAX_EXTENSION_DAYS):
            wd = calendar.weekday(day)
            if wd not in starts:
                continue
            exp = expansions[wd]
            if (patient.num_sessions > 1 and day == first
                    and exp.entries[1][0] == 0):
                continue  # intra-day second session would hit the first day
            load = exp.daily_load()
            for linac in linacs:
                if all(ledger.remaining(linac.id, day + off)
                       - extra.get((linac.id, day + off), 0) >= minutes
                       for off, minutes in load):
                    for off, minutes in load:
                        key = (linac.id, day + off)
                        extra[key] = extra.get(key, 0) + minutes
                    assignments[patient.id] = (linac.id, day)
                    placed = True
                    break
            if placed:
                break
        if not placed:
            raise NoFeasiblePlacement(patient.id)
    return Schedule(assignments)


def compute_horizon(constructive: Schedule, batch: Sequence[PatientCase],
                    calendar: Calendar) -> int:
    """Last constructive session day plus a fixed search-space margin."""
    last = calendar.first_day
    for patient in batch:
        _linac, start = constructive.assignments[patient.id]
        exp = session_expansion(patient, calendar.weekday(start))
        last = max(last, start + exp.last_offset)
    return last + HORIZON_SLACK_DAYS


def decompose(batch: Sequence[PatientCase]) -> dict[MachineType, list[PatientCase]]:
    """Split a batch into the three machine-type groups."""
    groups: dict[MachineType, list[PatientCase]] = {t: [] for t in MachineType}
    for patient in batch:
        groups[patient.machine_type].append(patient)
    return groups


class _SearchAborted(Exception):
    pass


class _StageSearch:
    """One branch-and-bound stage over the compact candidates."""

    def __init__(self, model: CompactModel, stage: int,
                 caps: list[int], incumbent: dict[str, tuple[int, int]],
                 deadline: Optional[float], node_limit: Optional[int]) -> None:
        self.model = model
        self.stage = stage  # 1-based objective index
        self.caps = caps  # caps for objectives 1..stage-1
        self.pids = [p.id for p in model.batch]
        self.n = len(self.pids)
        self.deadline = deadline
        self.node_limit = node_limit
        self.nodes = 0
        self.aborted = False

        obj = stage - 1
        self.cands: list[list[Candidate]] = []
        for pid in self.pids:
            ordered = sorted(model.candidates[pid],
                             key=lambda c: (c.contrib[obj], c.start_day, c.linac_id))
            self.cands.append(ordered)

        # Admissible lower bounds: per-objective suffix sums of the cheapest
        # candidate of each remaining patient, capacity ignored.
        self.minfut = [[0] * (self.n + 1) for _ in range(4)]
        for m in range(4):
            for d in range(self.n - 1, -1, -1):
                cheapest = min(c.contrib[m] for c in self.cands[d])
                self.minfut[m][d] = self.minfut[m][d + 1] + cheapest

        self.remaining = dict(model.remaining)
        self.best_assign = dict(incumbent)
        self.best_cost = self._cost_of(incumbent)
        self.best_key = self._tie_key(incumbent)

    def _cost_of(self, assign: dict[str, tuple[int, int]]) -> int:
        obj = self.stage - 1
        total = 0
        for pid, (lid, day) in assign.items():
            cand = next((c for c in self.model.candidates[pid]
                         if c.linac_id == lid and c.start_day == day), None)
            if cand is None:
                raise InfeasibleModel(f"{pid}: ({lid}, {day}) is not a candidate")
            total += cand.contrib[obj]
        return total

    def _tie_key(self, assign: dict[str, tuple[int, int]]) -> tuple:
        return tuple((assign[pid][1], assign[pid][0]) for pid in self.pids)

    def _tick(self) -> None:
        self.nodes += 1
        if self.node_limit is not None and self.nodes > self.node_limit:
            raise _SearchAborted
        if self.deadline is not None and self.nodes % 64 == 0:
            if time.monotonic() > self.deadline:
                raise _SearchAborted

    def run(self) -> tuple[dict[str, tuple[int, int]], int, bool]:
        try:
            self._dfs(0, [0, 0, 0, 0], {})
        except _SearchAborted:
            self.aborted = True
        return self.best_assign, self.best_cost, not self.aborted

    def _dfs(self, depth: int, partial: list[int],
             chosen: dict[str, tuple[int, int]]) -> None:
        if depth == self.n:
            cost = partial[self.stage - 1]
            if cost < self.best_cost:
                self.best_cost = cost
                self.best_assign = dict(chosen)
                self.best_key = self._tie_key(chosen)
            elif cost == self.best_cost and self.stage == 4:
                key = self._tie_key(chosen)
                if key < self.best_key:
                    self.best_assign = dict(chosen)
                    self.best_key = key
            return
        pid = self.pids[depth]
        obj = self.stage - 1
        for cand in self.cands[depth]:
            new_partial = [partial[m] + cand.contrib[m] for m in range(4)]
            if any(new_partial[m] + self.minfut[m][depth + 1] > self.caps[m]
                   for m in range(self.stage - 1)):
                continue
            bound = new_partial[obj] + self.minfut[obj][depth + 1]
            if bound > self.best_cost:
                continue
            if bound == self.best_cost and self.stage != 4:
                continue
            if any(self.remaining[key] < minutes
                   for key, minutes in self._loads(cand)):
                continue
            self._tick()
            for key, minutes in self._loads(cand):
                self.remaining[key] -= minutes
            chosen[pid] = (cand.linac_id, cand.start_day)
            try:
                self._dfs(depth + 1, new_partial, chosen)
            finally:
                del chosen[pid]
                for key, minutes in self._loads(cand):
                    self.remaining[key] += minutes

    @staticmethod
    def _loads(cand: Candidate):
        return [((cand.linac_id, day), minutes) for day, minutes in cand.daily_load]


def lexicographic_solve(model: CompactModel, budget: SolveBudget,
                        warm_start: Schedule,
                        deadline: Optional[float] = None
                        ) -> tuple[Schedule, list[StageResult]]:
    """Four sequential exact stages, each capping the earlier objectives at
    their best found values; returns the final schedule and per-stage stats.
    """
    incumbent = {p.id: warm_start.assignments[p.id] for p in model.batch}
    if deadline is None and budget.total_seconds is not None:
        deadline = time.monotonic() + budget.share_seconds
    caps: list[int] = []
    results: list[StageResult] = []
    for stage in range(1, 5):
        t0 = time.monotonic()
        search = _StageSearch(model, stage, caps, incumbent,
                              deadline, budget.node_limit)
        incumbent, value, proven = search.run()
        results.append(StageResult(stage, value, proven, search.nodes,
                                   time.monotonic() - t0))
        caps.append(value)
    return Schedule(dict(incumbent)), results


@dataclass
class BatchResult:
    """Outcome of solving one day's batch."""

    schedule: Schedule
    constructive: Schedule
    stage_results: dict[MachineType, list[StageResult]] = field(default_factory=dict)
    constructive_criteria: Optional[CriteriaVector] = None
    final_criteria: Optional[CriteriaVector] = None


def solve_batch_detailed(batch: Sequence[PatientCase], ledger: BookingLedger,
                         calendar: Calendar, budget: SolveBudget,
                         horizon: Optional[int] = None) -> BatchResult:
    """Decompose, warm-start, solve each group and merge the schedules."""
    groups = decompose(batch)
    nonempty = sum(1 for g in groups.values() if g)
    merged = Schedule({})
    merged_constructive = Schedule({})
    stage_results: dict[MachineType, list[StageResult]] = {}
    for machine_type in MachineType:
        group = groups[machine_type]
        if not group:
            continue
        constructive = constructive_schedule(group, ledger, calendar)
        last = horizon if horizon is not None else compute_horizon(
            constructive, group, calendar)
        cal = calendar.with_horizon(calendar.first_day, last)
        model = build_compact_model(group, ledger, cal)
        deadline = None
        if budget.total_seconds is not None:
            deadline = time.monotonic() + budget.share_for(nonempty)
        schedule, stages = lexicographic_solve(model, budget, constructive,
                                               deadline=deadline)
        stage_results[machine_type] = stages
        merged = merged.merged_with(schedule)
        merged_constructive = merged_constructive.merged_with(constructive)
    result = BatchResult(merged, merged_constructive, stage_results)
    if batch:
        result.constructive_criteria = evaluate_criteria(merged_constructive, batch)
        result.final_criteria = evaluate_criteria(merged, batch)
    else:
        result.constructive_criteria = CriteriaVector(0, 0, 0, 0)
        result.final_criteria = CriteriaVector(0, 0, 0, 0)
    return result


def solve_batch(batch: Sequence[PatientCase], ledger: BookingLedger,
                calendar: Calendar, budget: SolveBudget,
                horizon: Optional[int] = None) -> Schedule:
    """Schedule for the whole batch; see solve_batch_detailed for internals."""
    return solve_batch_detailed(batch, ledger, calendar, budget, horizon).schedule

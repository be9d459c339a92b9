"""Adaptive adversary forcing unbounded backlog below the competitive speedup.

One processor is crashed and restarted in consecutive phases. At each phase
start the scheduler is simulated on a fork with no further injections to see
what it would pick; the phase length, the offline reference's work and the
end-of-phase injections are then chosen from that sequence of picks.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal

from .. import codec, utils
from ..core import (
    AdversarialPattern,
    AdversaryEvent,
    BudgetExceededError,
    ConsistencyError,
    PreconditionError,
    RunTrace,
    ScheduleEntry,
    SystemParams,
    TimeLike,
    parse_time,
)
from ..engine import DEFAULT_MAX_EVENTS, Simulator, run_offline_reference
from ..schedulers import SchedulerSpec, create_scheduler, gamma, non_competitive_check

DEFAULT_MAX_PHASES = 200
PHASE_LOG_HEADER = ("phase", "scenario", "kappa", "alg_pending", "off_pending")
LOGGER = utils.get_logger()

Scenario = Literal[1, 2]


@dataclass(frozen=True)
class PhaseRecord:
    """Outcome of one phase, measured after its end-of-phase injections."""

    phase: int
    scenario: Scenario
    kappa: int
    start: Fraction
    end: Fraction
    alg_pending: int
    off_pending: int
    alg_lmax_pending: int

    def row(self) -> list[str]:
        return [
            str(self.phase),
            str(self.scenario),
            str(self.kappa),
            str(self.alg_pending),
            str(self.off_pending),
        ]


@dataclass
class AdversaryResult:
    pattern: AdversarialPattern
    alg_trace: RunTrace
    off_trace: RunTrace
    gamma: int
    phases: list[PhaseRecord] = field(default_factory=list)

    def divergence(self) -> list[int]:
        """ALG pending minus OFF pending after each phase."""
        return [record.alg_pending - record.off_pending for record in self.phases]


class _IdSource:
    def __init__(self) -> None:
        self._next = 1

    def take(self) -> int:
        value = self._next
        self._next += 1
        return value


def _classify(simulator: Simulator, first: int, params: SystemParams, g: int) -> int:
    """Number of lmin picks before the first lmax pick, capped at gamma."""
    lookahead = simulator.fork()
    kappa = 0
    seen = first
    guard = 4 * (g + 2)
    while True:
        for selection in lookahead.selections[seen:]:
            if selection.task.cost == params.lmax:
                return kappa
            kappa += 1
            if kappa == g:
                return g
        seen = len(lookahead.selections)
        guard -= 1
        if guard < 0 or lookahead.step() is None:
            raise ConsistencyError(
                "scheduler neither picked an lmax-task nor gamma lmin-tasks "
                "while work was pending"
            )


def lower_bound_adversary(
    scheduler: SchedulerSpec | str,
    lmin: int,
    lmax: int,
    s: TimeLike,
    phases: int,
    *,
    max_phases: int | None = None,
    max_events: int | None = None,
) -> AdversaryResult:
    """Run the phase construction against a deterministic scheduler on one processor."""
    speed = parse_time(s)
    if not non_competitive_check(lmin, lmax, speed):
        raise PreconditionError(
            "parameters are in the competitive regime: need s < lmax/lmin = "
            f"{utils.format_rational(Fraction(lmax, lmin))} and "
            f"s < (gamma*lmin+lmax)/lmax, got s={utils.format_rational(speed)}"
        )
    if phases < 0:
        raise PreconditionError("phases must not be negative")
    budget = utils.resolve_limit(max_phases, "MAX_PHASES", DEFAULT_MAX_PHASES)
    if phases > budget:
        raise BudgetExceededError(
            f"{phases} phases requested, above the phase budget of {budget}"
        )
    spec = (
        scheduler if isinstance(scheduler, SchedulerSpec) else SchedulerSpec(scheduler)
    )
    g = gamma(lmin, lmax, speed)
    params = SystemParams(
        n=1,
        speedup=speed,
        lmin=lmin,
        lmax=lmax,
        beta=spec.beta or math.ceil(Fraction(lmax, lmin)),
    )
    policy = create_scheduler(spec, params)

    if phases == 0:
        empty = AdversarialPattern(params)
        fingerprint = codec.pattern_fingerprint(empty)
        return AdversaryResult(
            empty,
            RunTrace(params, fingerprint, policy.name, Fraction(0)),
            RunTrace(params, fingerprint, "off", Fraction(0)),
            g,
        )

    ids = _IdSource()
    off_min: deque[int] = deque()
    off_max: deque[int] = deque()
    events = [AdversaryEvent.inject(0, ids.take(), lmin) for _ in range(g)]
    events.append(AdversaryEvent.inject(0, ids.take(), lmax))
    off_min.extend(e.task.id for e in events[:g] if e.task is not None)
    off_max.extend(e.task.id for e in events[g:] if e.task is not None)

    simulator = Simulator(
        params,
        policy,
        max_events=utils.resolve_limit(max_events, "MAX_EVENTS", DEFAULT_MAX_EVENTS),
    )
    simulator.schedule(events)
    off_schedule: list[ScheduleEntry] = []
    classified: list[tuple[int, Scenario, int, Fraction, Fraction]] = []
    start = Fraction(0)
    for phase in range(1, phases + 1):
        first = len(simulator.selections)
        simulator.run_until(start)
        kappa = _classify(simulator, first, params, g)
        if kappa < g:
            scenario: Scenario = 1
            end = start + (kappa + 1) * lmin
            for offset in range(kappa + 1):
                task_id = off_min.popleft()
                off_schedule.append(ScheduleEntry(1, task_id, start + offset * lmin))
            new_tasks = [
                AdversaryEvent.inject(end, ids.take(), lmin) for _ in range(kappa + 1)
            ]
            off_min.extend(e.task.id for e in new_tasks if e.task is not None)
        else:
            scenario = 2
            end = start + lmax
            off_schedule.append(ScheduleEntry(1, off_max.popleft(), start))
            new_tasks = [AdversaryEvent.inject(end, ids.take(), lmax)]
            off_max.extend(e.task.id for e in new_tasks if e.task is not None)

        simulator.run_until(end, inclusive=False)
        phase_events = [AdversaryEvent.crash(end, 1)]
        if phase < phases:
            phase_events.append(AdversaryEvent.restart(end, 1))
        phase_events.extend(new_tasks)
        simulator.schedule(phase_events)
        events.extend(phase_events)
        classified.append((phase, scenario, kappa, start, end))
        LOGGER.debug(
            "Adversary phase",
            extra={"phase": phase, "scenario": scenario, "kappa": kappa, "end": end},
        )
        start = end

    simulator.run_until(start)
    pattern = AdversarialPattern(params, tuple(events))
    fingerprint = codec.pattern_fingerprint(pattern)
    alg_trace = simulator.trace(start)
    alg_trace.fingerprint = fingerprint
    off_trace = run_offline_reference(
        pattern, off_schedule, horizon=start, source="off"
    )

    lmax_ids = {task.id for task in pattern.tasks if task.cost == lmax}
    for report in alg_trace.reports:
        if report.task_id in lmax_ids:
            raise ConsistencyError(
                f"scheduler completed lmax-task {report.task_id} at "
                f"{utils.format_rational(report.time)}"
            )

    result = AdversaryResult(pattern, alg_trace, off_trace, g)
    previous_lmax = 1
    for phase, scenario, kappa, begin, end in classified:
        alg = alg_trace.pending_at(end)
        off = off_trace.pending_at(end)
        record = PhaseRecord(
            phase,
            scenario,
            kappa,
            begin,
            end,
            alg.tasks,
            off.tasks,
            alg.count_of(lmax),
        )
        _check_phase(record, previous_lmax, g)
        previous_lmax = record.alg_lmax_pending
        result.phases.append(record)
    LOGGER.info(
        "Adversary finished",
        extra={
            "scheduler": policy.name,
            "phases": phases,
            "alg_pending": result.phases[-1].alg_pending,
            "off_pending": result.phases[-1].off_pending,
        },
    )
    return result


def _check_phase(record: PhaseRecord, previous_lmax: int, g: int) -> None:
    if record.off_pending != g + 1:
        raise ConsistencyError(
            f"offline reference has {record.off_pending} pending tasks after phase "
            f"{record.phase}, expected {g + 1}"
        )
    if record.scenario == 2 and record.alg_lmax_pending != previous_lmax + 1:
        raise ConsistencyError(
            f"lmax backlog went from {previous_lmax} to {record.alg_lmax_pending} "
            f"in phase {record.phase}"
        )


def phase_log_rows(result: AdversaryResult) -> list[list[str]]:
    return [record.row() for record in result.phases]

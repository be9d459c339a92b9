"""Deterministic discrete-event simulation of processor cycles.

Every instant is processed in a fixed order: completion informs (processor id
ascending), crashes, restarts, injections (pattern order), then gets by every
idle processor (processor id ascending), each followed immediately by the
scheduler's choice.
"""
from __future__ import annotations

import copy
import math
from collections import deque
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, replace
from enum import StrEnum
from fractions import Fraction
from typing import Any

from . import codec, utils
from .core import (
    AdversarialPattern,
    AdversaryEvent,
    BudgetExceededError,
    EventKind,
    Execution,
    PatternError,
    PendingSnapshot,
    PreconditionError,
    Report,
    RunTrace,
    ScheduleEntry,
    ScheduleError,
    SystemParams,
    TaskSpec,
    TraceSample,
    format_time,
    validate_pattern,
)
from .repository import RepositoryState, apply_instant
from .schedulers import Scheduler, SchedulerSpec, create_scheduler

DEFAULT_MAX_EVENTS = 10_000_000
LOGGER = utils.get_logger()

LifePeriod = tuple[Fraction, Fraction | None]


class ProcStatus(StrEnum):
    READY = "ready"
    BLOCKED = "blocked"
    EXECUTING = "executing"
    CRASHED = "crashed"


@dataclass(frozen=True)
class ProcessorState:
    id: int
    status: ProcStatus
    memory: Any = None
    task: TaskSpec | None = None
    start: Fraction | None = None
    finish: Fraction | None = None


@dataclass(frozen=True)
class Selection:
    """A scheduling decision taken at a get instant."""

    time: Fraction
    proc: int
    task: TaskSpec


@dataclass(frozen=True)
class SimulationConfig:
    pattern: AdversarialPattern
    scheduler: SchedulerSpec
    horizon: Fraction
    record_every: Fraction | None = None
    max_events: int | None = None


class _TraceRecorder:
    """Collects one instant's events and stamps them with post-instant values."""

    def __init__(self) -> None:
        self._open: list[tuple[str, int | None, int | None]] = []
        self.samples: list[TraceSample] = []
        self.snapshots: list[PendingSnapshot] = []
        self.reports: list[Report] = []
        self.executions: list[Execution] = []

    def note(self, event: str, proc: int | None, task: int | None) -> None:
        self._open.append((event, proc, task))

    def executed(self, execution: Execution) -> None:
        self.executions.append(execution)
        if execution.completed:
            self.reports.append(
                Report(execution.end, execution.proc, execution.task_id)
            )

    def close(self, t: Fraction, state: RepositoryState) -> None:
        if not self._open:
            return
        snapshot = state.snapshot(t)
        self.snapshots.append(snapshot)
        for event, proc, task in self._open:
            self.samples.append(
                TraceSample(t, event, proc, task, snapshot.tasks, snapshot.cost)
            )
        self._open = []


class Simulator:
    """Incremental simulation of one scheduler on a growing event sequence."""

    def __init__(
        self,
        params: SystemParams,
        scheduler: Scheduler[Any],
        *,
        fingerprint: str = "",
        max_events: int = DEFAULT_MAX_EVENTS,
    ) -> None:
        self._params = params
        self._scheduler = scheduler
        self._fingerprint = fingerprint
        self._max_events = max_events
        self._state = RepositoryState()
        self._procs = {
            proc: ProcessorState(proc, ProcStatus.READY, scheduler.initial_memory())
            for proc in range(1, params.n + 1)
        }
        self._queue: deque[AdversaryEvent] = deque()
        self._now: Fraction | None = None
        self._events_processed = 0
        self._recorder = _TraceRecorder()
        self.selections: list[Selection] = []

    @property
    def now(self) -> Fraction | None:
        """Last processed instant, or ``None`` before the first step."""
        return self._now

    @property
    def state(self) -> RepositoryState:
        return self._state

    @property
    def processors(self) -> Mapping[int, ProcessorState]:
        return dict(self._procs)

    def schedule(self, events: Iterable[AdversaryEvent]) -> None:
        """Append future adversary events in authoring order."""
        for event in events:
            if self._now is not None and event.time <= self._now:
                raise ScheduleError(
                    f"event at t={format_time(event.time)} is not after the "
                    f"last processed instant {format_time(self._now)}"
                )
            if self._queue and event.time < self._queue[-1].time:
                raise PatternError("events must be scheduled in time order")
            self._queue.append(event)

    def next_instant(self) -> Fraction | None:
        candidates: list[Fraction] = []
        if self._now is None:
            candidates.append(Fraction(0))
        if self._queue:
            candidates.append(self._queue[0].time)
        for proc_state in self._procs.values():
            if proc_state.finish is not None:
                candidates.append(proc_state.finish)
        return min(candidates, default=None)

    def run_until(self, horizon: Fraction, *, inclusive: bool = True) -> None:
        """Process instants up to *horizon*, excluding it when ``inclusive`` is off."""
        while (instant := self.next_instant()) is not None and (
            instant < horizon or (inclusive and instant == horizon)
        ):
            self.step()

    def step(self) -> Fraction | None:
        """Process the next instant and return it."""
        t = self.next_instant()
        if t is None:
            return None
        events: list[AdversaryEvent] = []
        while self._queue and self._queue[0].time == t:
            events.append(self._queue.popleft())

        informs = self._complete(t)
        for event in events:
            if event.kind is EventKind.CRASH:
                self._crash(t, event)
        for event in events:
            if event.kind is EventKind.RESTART:
                self._restart(event)
        injects = [event.task for event in events if event.task is not None]
        for task in injects:
            self._recorder.note("inject", None, task.id)
        gets = [
            proc
            for proc, proc_state in sorted(self._procs.items())
            if proc_state.status is ProcStatus.READY
        ]

        outcome = apply_instant(self._state, t, informs, injects, gets)
        self._state = outcome.state
        for proc in sorted(outcome.delivered):
            self._assign(t, proc, outcome.delivered[proc])
        for proc in gets:
            if proc not in outcome.delivered:
                self._procs[proc] = replace(
                    self._procs[proc], status=ProcStatus.BLOCKED
                )

        self._events_processed += (
            len(informs) + len(events) + len(gets) + len(outcome.delivered)
        )
        if self._events_processed > self._max_events:
            raise BudgetExceededError(
                f"simulation exceeded the event budget of {self._max_events}"
            )
        self._recorder.close(t, self._state)
        self._now = t
        return t

    def fork(self) -> Simulator:
        """Return an independent copy sharing immutable state, with an empty trace."""
        clone = copy.copy(self)
        clone._procs = dict(self._procs)
        clone._queue = deque(self._queue)
        clone._recorder = _TraceRecorder()
        clone.selections = list(self.selections)
        return clone

    def trace(self, horizon: Fraction, source: str | None = None) -> RunTrace:
        """Build the run trace; executions still running end at *horizon*."""
        recorder = self._recorder
        executions = list(recorder.executions)
        for proc_state in sorted(self._procs.values(), key=lambda s: s.id):
            if proc_state.task is not None and proc_state.start is not None:
                executions.append(
                    Execution(
                        proc_state.id,
                        proc_state.task.id,
                        proc_state.task.cost,
                        proc_state.start,
                        horizon,
                        completed=False,
                    )
                )
        return RunTrace(
            params=self._params,
            fingerprint=self._fingerprint,
            source=source or self._scheduler.name,
            horizon=horizon,
            samples=list(recorder.samples),
            snapshots=list(recorder.snapshots),
            reports=list(recorder.reports),
            executions=executions,
        )

    def _complete(self, t: Fraction) -> list[tuple[int, int]]:
        informs: list[tuple[int, int]] = []
        for proc, proc_state in sorted(self._procs.items()):
            task = proc_state.task
            if proc_state.finish != t or task is None or proc_state.start is None:
                continue
            informs.append((proc, task.id))
            self._recorder.note("inform", proc, task.id)
            self._recorder.executed(
                Execution(proc, task.id, task.cost, proc_state.start, t, True)
            )
            memory = self._scheduler.on_report(task, proc_state.memory)
            self._procs[proc] = ProcessorState(proc, ProcStatus.READY, memory)
        return informs

    def _crash(self, t: Fraction, event: AdversaryEvent) -> None:
        proc = self._require_proc(event)
        proc_state = self._procs[proc]
        if proc_state.status is ProcStatus.CRASHED:
            raise PatternError(f"crash of crashed processor {proc}")
        task_id: int | None = None
        if proc_state.task is not None and proc_state.start is not None:
            task_id = proc_state.task.id
            self._recorder.executed(
                Execution(
                    proc, task_id, proc_state.task.cost, proc_state.start, t, False
                )
            )
        if proc_state.status is ProcStatus.BLOCKED:
            self._state = self._state.without_getter(proc)
        self._procs[proc] = ProcessorState(proc, ProcStatus.CRASHED)
        self._recorder.note("crash", proc, task_id)

    def _restart(self, event: AdversaryEvent) -> None:
        proc = self._require_proc(event)
        if self._procs[proc].status is not ProcStatus.CRASHED:
            raise PatternError(f"restart of alive processor {proc}")
        self._procs[proc] = ProcessorState(
            proc, ProcStatus.READY, self._scheduler.initial_memory()
        )
        self._recorder.note("restart", proc, None)

    def _assign(self, t: Fraction, proc: int, pending: Sequence[TaskSpec]) -> None:
        proc_state = self._procs[proc]
        task, memory = self._scheduler.select(pending, proc, proc_state.memory)
        if task not in pending:
            raise ScheduleError(
                f"{self._scheduler.name} chose task {task.id} outside the pending "
                f"snapshot of processor {proc}"
            )
        finish = t + Fraction(task.cost) / self._params.speedup
        self._procs[proc] = ProcessorState(
            proc, ProcStatus.EXECUTING, memory, task, t, finish
        )
        self.selections.append(Selection(t, proc, task))

    def _require_proc(self, event: AdversaryEvent) -> int:
        if event.proc is None or event.proc not in self._procs:
            raise PatternError(f"processor {event.proc} out of range")
        return event.proc


def _require_valid(pattern: AdversarialPattern) -> None:
    violations = validate_pattern(pattern)
    if violations:
        raise PatternError("invalid pattern: " + "; ".join(violations))


def run_simulation(config: SimulationConfig) -> RunTrace:
    """Run the configured scheduler over the whole pattern up to the horizon."""
    pattern = config.pattern
    _require_valid(pattern)
    if config.horizon < pattern.last_event_time:
        raise PreconditionError(
            f"horizon {format_time(config.horizon)} precedes the last event at "
            f"{format_time(pattern.last_event_time)}"
        )
    scheduler = create_scheduler(config.scheduler, pattern.params)
    scheduler.check(pattern)
    max_events = utils.resolve_limit(
        config.max_events, "MAX_EVENTS", DEFAULT_MAX_EVENTS
    )
    simulator = Simulator(
        pattern.params,
        scheduler,
        fingerprint=codec.pattern_fingerprint(pattern),
        max_events=max_events,
    )
    simulator.schedule(pattern.events)
    simulator.run_until(config.horizon)
    trace = simulator.trace(config.horizon)
    if config.record_every is not None:
        _add_periodic_samples(trace, config.record_every, max_events)
    LOGGER.debug(
        "Simulation finished",
        extra={
            "scheduler": scheduler.name,
            "horizon": config.horizon,
            "reports": len(trace.reports),
            "pending_tasks": trace.final.tasks,
        },
    )
    return trace


def _add_periodic_samples(trace: RunTrace, step: Fraction, budget: int) -> None:
    if step <= 0:
        raise PreconditionError("record_every must be positive")
    count = math.floor(trace.horizon / step) + 1
    if count > budget:
        raise BudgetExceededError(
            f"record_every produces {count} samples, above the event budget"
        )
    ticks: list[TraceSample] = []
    for index in range(count):
        t = index * step
        snapshot = trace.pending_at(t)
        ticks.append(
            TraceSample(t, "sample", None, None, snapshot.tasks, snapshot.cost)
        )
    trace.samples = sorted(
        trace.samples + ticks, key=lambda s: (s.time, s.event == "sample")
    )


def life_periods(
    pattern: AdversarialPattern, until: Fraction | None = None
) -> dict[int, list[LifePeriod]]:
    """Alive intervals per processor; an open interval has end ``None``.

    Processors are alive from time 0. Events after *until* are ignored.
    """
    periods: dict[int, list[LifePeriod]] = {
        proc: [] for proc in range(1, pattern.params.n + 1)
    }
    opened: dict[int, Fraction | None] = dict.fromkeys(periods, Fraction(0))
    for event in pattern.events:
        if event.proc is None or (until is not None and event.time > until):
            continue
        start = opened.get(event.proc)
        if event.kind is EventKind.CRASH and start is not None:
            periods[event.proc].append((start, event.time))
            opened[event.proc] = None
        elif event.kind is EventKind.RESTART and start is None:
            opened[event.proc] = event.time
    for proc, start in opened.items():
        if start is not None:
            periods[proc].append((start, None))
    return periods


def run_offline_reference(
    pattern: AdversarialPattern,
    schedule: Sequence[ScheduleEntry],
    *,
    horizon: Fraction | None = None,
    source: str = "offline",
) -> RunTrace:
    """Replay an explicit speedup-1 schedule through the repository.

    Executions cut by a crash of their processor are not informed and are
    listed in ``RunTrace.flagged``. Idling between entries is allowed.
    """
    _require_valid(pattern)
    tasks = {task.id: task for task in pattern.tasks}
    periods = life_periods(pattern)
    crashes: dict[int, list[Fraction]] = {proc: [] for proc in periods}
    for event in pattern.events:
        if event.kind is EventKind.CRASH and event.proc is not None:
            crashes[event.proc].append(event.time)

    by_proc: dict[int, list[ScheduleEntry]] = {}
    for entry in schedule:
        task = tasks.get(entry.task_id)
        if task is None:
            raise ScheduleError(f"schedule references unknown task {entry.task_id}")
        if entry.proc not in periods:
            raise ScheduleError(f"schedule references unknown processor {entry.proc}")
        if entry.start < task.arrival:
            raise ScheduleError(
                f"task {task.id} assigned at {format_time(entry.start)} before its "
                f"arrival at {format_time(task.arrival)}"
            )
        if not _alive_at(periods[entry.proc], entry.start):
            raise ScheduleError(
                f"processor {entry.proc} is not alive at {format_time(entry.start)}"
            )
        by_proc.setdefault(entry.proc, []).append(entry)

    completions: list[tuple[Fraction, int, TaskSpec, Fraction]] = []
    aborted: list[tuple[Fraction, int, TaskSpec, Fraction]] = []
    flagged: list[ScheduleEntry] = []
    for proc, entries in by_proc.items():
        entries.sort(key=lambda e: e.start)
        busy_until: Fraction | None = None
        for entry in entries:
            task = tasks[entry.task_id]
            if busy_until is not None and entry.start < busy_until:
                raise ScheduleError(
                    f"processor {proc} runs overlapping entries at "
                    f"{format_time(entry.start)}"
                )
            finish = entry.start + task.cost
            busy_until = finish
            cut = [c for c in crashes[proc] if entry.start < c < finish]
            if cut:
                flagged.append(entry)
                aborted.append((min(cut), proc, task, entry.start))
            else:
                completions.append((finish, proc, task, entry.start))

    end = horizon
    if end is None:
        end = max(
            [pattern.last_event_time] + [finish for finish, *_ in completions]
        )
    recorder = _TraceRecorder()
    instants = sorted(
        {event.time for event in pattern.events if event.time <= end}
        | {finish for finish, *_ in completions if finish <= end}
        | {cut for cut, *_ in aborted if cut <= end}
    )
    state = RepositoryState()
    for t in instants:
        informs: list[tuple[int, int]] = []
        for finish, proc, task, start in sorted(
            (c for c in completions if c[0] == t), key=lambda c: c[1]
        ):
            informs.append((proc, task.id))
            recorder.note("inform", proc, task.id)
            recorder.executed(Execution(proc, task.id, task.cost, start, finish, True))
        at_t = [event for event in pattern.events if event.time == t]
        cut_now = {p: (task, start) for cut, p, task, start in aborted if cut == t}
        for event in at_t:
            if event.kind is EventKind.CRASH and event.proc is not None:
                cut_entry = cut_now.get(event.proc)
                recorder.note(
                    "crash", event.proc, cut_entry[0].id if cut_entry else None
                )
        for proc, (task, start) in sorted(cut_now.items()):
            recorder.executed(Execution(proc, task.id, task.cost, start, t, False))
        for event in at_t:
            if event.kind is EventKind.RESTART:
                recorder.note("restart", event.proc, None)
        injects = [event.task for event in at_t if event.task is not None]
        for task in injects:
            recorder.note("inject", None, task.id)
        state = apply_instant(state, t, informs, injects, []).state
        recorder.close(t, state)

    if flagged:
        LOGGER.debug(
            "Offline schedule had crashed executions", extra={"flagged": len(flagged)}
        )
    return RunTrace(
        params=pattern.params,
        fingerprint=codec.pattern_fingerprint(pattern),
        source=source,
        horizon=end,
        samples=recorder.samples,
        snapshots=recorder.snapshots,
        reports=recorder.reports,
        executions=recorder.executions,
        flagged=flagged,
    )


def _alive_at(periods: Sequence[LifePeriod], t: Fraction) -> bool:
    return any(start <= t and (end is None or t < end) for start, end in periods)

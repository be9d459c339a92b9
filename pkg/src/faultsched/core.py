"""Exact time arithmetic, task/pattern data model, validation and run traces."""
from __future__ import annotations

import bisect
import math
import re
from collections.abc import Iterable
from dataclasses import dataclass, field
from enum import StrEnum
from fractions import Fraction
from typing import Literal

from .utils import format_rational

TimePoint = Fraction
TimeLike = int | str | Fraction

_RATIONAL_RE = re.compile(r"^\s*(-?\d+)\s*(?:/\s*(\d+)\s*)?$")


class FaultSchedError(Exception):
    """Base class for every error raised by faultsched."""


class PatternError(FaultSchedError, ValueError):
    """Raised for malformed patterns, files or rational literals."""


class PreconditionError(FaultSchedError, ValueError):
    """Raised when parameters violate an operation's precondition."""


class ScheduleError(FaultSchedError):
    """Raised for corrupt schedules or a scheduler breaking its contract."""


class ConsistencyError(FaultSchedError):
    """Raised when an internal consistency assertion fails."""


class BudgetExceededError(FaultSchedError):
    """Raised when an event, phase or search budget is exhausted."""


def parse_time(value: TimeLike) -> Fraction:
    """Parse ``num/den`` strings, integers or fractions into an exact time."""
    if isinstance(value, bool):
        raise PatternError(f"Not a rational value: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        match = _RATIONAL_RE.match(value)
        if match is None:
            raise PatternError(f"Expected 'num/den' rational, got {value!r}")
        numerator = int(match.group(1))
        denominator = int(match.group(2)) if match.group(2) is not None else 1
        if denominator == 0:
            raise PatternError(f"Zero denominator in {value!r}")
        return Fraction(numerator, denominator)
    raise PatternError(f"Not a rational value: {value!r}")


def format_time(value: Fraction) -> str:
    """Serialize a time as ``num/den`` (denominator always written)."""
    return format_rational(value)


TimeOp = Literal["add", "sub", "cmp", "div_by_speedup"]


def time_op(a: TimeLike, b: TimeLike, op: TimeOp) -> Fraction | int:
    """Apply an exact arithmetic operation to two times.

    ``cmp`` returns -1, 0 or 1. ``div_by_speedup`` treats ``a`` as a cost and
    ``b`` as the speedup and returns the execution duration ``a / b``.
    """
    left = parse_time(a)
    right = parse_time(b)
    if op == "add":
        return left + right
    if op == "sub":
        return left - right
    if op == "cmp":
        return (left > right) - (left < right)
    if op == "div_by_speedup":
        if right <= 0:
            raise PreconditionError("speedup must be positive")
        return left / right
    raise ValueError(f"Unknown time operation: {op}")


@dataclass(frozen=True)
class TaskSpec:
    """A task: identifier, arrival time and integer cost."""

    id: int
    arrival: Fraction
    cost: int


@dataclass(frozen=True)
class SystemParams:
    """Global parameters of a run: processors, speedup, cost bounds and beta."""

    n: int
    speedup: Fraction
    lmin: int
    lmax: int
    beta: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "speedup", parse_time(self.speedup))
        if self.n < 1:
            raise PreconditionError("n must be at least 1")
        if self.speedup < 1:
            raise PreconditionError("speedup must be at least 1")
        if self.lmin < 1:
            raise PreconditionError("lmin must be a positive integer")
        if self.lmax < self.lmin:
            raise PreconditionError("lmax must not be smaller than lmin")
        if self.beta < 1:
            raise PreconditionError("beta must be a positive integer")

    @property
    def rho(self) -> Fraction:
        """Cost ratio lmax/lmin."""
        return Fraction(self.lmax, self.lmin)

    @property
    def min_beta(self) -> int:
        """Smallest beta accepted by the beta-parametrized schedulers."""
        return math.ceil(self.rho)


class EventKind(StrEnum):
    INJECT = "inject"
    CRASH = "crash"
    RESTART = "restart"


@dataclass(frozen=True)
class AdversaryEvent:
    """One timed adversary action."""

    time: Fraction
    kind: EventKind
    task: TaskSpec | None = None
    proc: int | None = None

    def __post_init__(self) -> None:
        if self.kind is EventKind.INJECT:
            if self.task is None or self.proc is not None:
                raise PatternError("inject events carry exactly a task")
            if self.task.arrival != self.time:
                raise PatternError("task arrival must equal its inject time")
        elif self.proc is None or self.task is not None:
            raise PatternError(f"{self.kind.value} events carry exactly a processor")

    @classmethod
    def inject(cls, time: TimeLike, task_id: int, cost: int) -> AdversaryEvent:
        at = parse_time(time)
        return cls(at, EventKind.INJECT, task=TaskSpec(task_id, at, cost))

    @classmethod
    def crash(cls, time: TimeLike, proc: int) -> AdversaryEvent:
        return cls(parse_time(time), EventKind.CRASH, proc=proc)

    @classmethod
    def restart(cls, time: TimeLike, proc: int) -> AdversaryEvent:
        return cls(parse_time(time), EventKind.RESTART, proc=proc)


@dataclass(frozen=True)
class AdversarialPattern:
    """System parameters plus the ordered adversary events."""

    params: SystemParams
    events: tuple[AdversaryEvent, ...] = ()

    @property
    def tasks(self) -> tuple[TaskSpec, ...]:
        return tuple(e.task for e in self.events if e.task is not None)

    @property
    def last_event_time(self) -> Fraction:
        return max((e.time for e in self.events), default=Fraction(0))

    @property
    def total_cost(self) -> int:
        return sum(task.cost for task in self.tasks)

    @property
    def distinct_costs(self) -> tuple[int, ...]:
        return tuple(sorted({task.cost for task in self.tasks}))

    def extended(self, events: Iterable[AdversaryEvent]) -> AdversarialPattern:
        """Return a copy with *events* appended in order."""
        return AdversarialPattern(self.params, self.events + tuple(events))


def validate_pattern(pattern: AdversarialPattern) -> list[str]:
    """Return every invariant violation of *pattern*; empty means valid."""
    params = pattern.params
    violations: list[str] = []
    alive = {proc: True for proc in range(1, params.n + 1)}
    seen_ids: set[int] = set()
    previous: Fraction | None = None
    for index, event in enumerate(pattern.events):
        at = format_time(event.time)
        if event.time < 0:
            violations.append(f"event {index} has negative time {at}")
        if previous is not None and event.time < previous:
            violations.append(f"event {index} at t={at} is out of order")
        previous = event.time if previous is None else max(previous, event.time)
        if event.task is not None:
            task = event.task
            if task.id <= 0:
                violations.append(f"task id {task.id} is not positive")
            if task.id in seen_ids:
                violations.append(f"duplicate task id {task.id}")
            seen_ids.add(task.id)
            if not params.lmin <= task.cost <= params.lmax:
                violations.append(
                    f"task {task.id} cost {task.cost} outside "
                    f"[{params.lmin}, {params.lmax}]"
                )
            continue
        proc = event.proc
        if proc is None or proc not in alive:
            violations.append(f"processor {proc} out of range at t={at}")
            continue
        if event.kind is EventKind.CRASH:
            if not alive[proc]:
                violations.append(f"crash of crashed processor {proc} at t={at}")
            alive[proc] = False
        else:
            if alive[proc]:
                violations.append(f"restart of alive processor {proc} at t={at}")
            alive[proc] = True
    return violations


@dataclass(frozen=True)
class ScheduleEntry:
    """One explicit offline execution: processor, task and start time."""

    proc: int
    task_id: int
    start: Fraction


@dataclass(frozen=True)
class PendingSnapshot:
    """Pending quantities right after the full event ordering of an instant."""

    time: Fraction
    tasks: int
    cost: int
    by_cost: tuple[tuple[int, int], ...] = ()

    def count_of(self, cost: int) -> int:
        for value, count in self.by_cost:
            if value == cost:
                return count
        return 0


@dataclass(frozen=True)
class TraceSample:
    time: Fraction
    event: str
    proc: int | None
    task: int | None
    pending_tasks: int
    pending_cost: int


@dataclass(frozen=True)
class Report:
    time: Fraction
    proc: int
    task_id: int


@dataclass(frozen=True)
class Execution:
    """A started execution; ``completed`` is false when a crash or horizon cut it."""

    proc: int
    task_id: int
    cost: int
    start: Fraction
    end: Fraction
    completed: bool


@dataclass
class RunTrace:
    """Time series of repository changes with per-instant pending measures.

    Pending quantities are piecewise constant: between two recorded instants
    nothing changes, so :meth:`pending_at` is a step-function lookup.
    """

    params: SystemParams
    fingerprint: str
    source: str
    horizon: Fraction
    samples: list[TraceSample] = field(default_factory=list)
    snapshots: list[PendingSnapshot] = field(default_factory=list)
    reports: list[Report] = field(default_factory=list)
    executions: list[Execution] = field(default_factory=list)
    flagged: list[ScheduleEntry] = field(default_factory=list)

    def instants(self) -> list[Fraction]:
        return [snapshot.time for snapshot in self.snapshots]

    def pending_at(self, t: Fraction) -> PendingSnapshot:
        index = bisect.bisect_right(self.snapshots, t, key=lambda s: s.time)
        if index == 0:
            return PendingSnapshot(t, 0, 0)
        return self.snapshots[index - 1]

    @property
    def final(self) -> PendingSnapshot:
        return self.pending_at(self.horizon)

    @property
    def max_pending_tasks(self) -> int:
        return max((s.tasks for s in self.snapshots), default=0)

    @property
    def max_pending_cost(self) -> int:
        return max((s.cost for s in self.snapshots), default=0)

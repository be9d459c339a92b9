"""Exact offline optimum for small instances and the scheduling decision problems.

The offline reference runs at speedup 1. Inside one life period a schedule is
an ordered subset of the available tasks packed from the period start in
arrival order; idling never helps a later checkpoint, so only subsets are
searched. Subsets assigned to different life periods are disjoint and the
search is a memoised DP over (period index, remaining tasks) where tasks with
equal arrival, cost and weight are interchangeable.
"""
from __future__ import annotations

import math
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal

from .. import utils
from ..core import (
    AdversarialPattern,
    BudgetExceededError,
    EventKind,
    PatternError,
    PreconditionError,
    ScheduleEntry,
    TaskSpec,
    TimeLike,
    format_time,
    parse_time,
    validate_pattern,
)
from ..engine import life_periods

DEFAULT_MAX_NODES = 2_000_000
LOGGER = utils.get_logger()

Measure = Literal["cost", "tasks"] | int


@dataclass(frozen=True)
class OptLimits:
    """Size limits of the exhaustive search; ``max_nodes`` falls back to the env."""

    max_processors: int = 2
    max_tasks: int = 12
    max_fault_events: int = 12
    max_nodes: int | None = None

    def resolved_nodes(self) -> int:
        return utils.resolve_limit(self.max_nodes, "OPT_MAX_NODES", DEFAULT_MAX_NODES)


@dataclass(frozen=True)
class OptResult:
    checkpoint: Fraction
    min_pending_cost: int
    min_pending_tasks: int
    cost_witness: tuple[ScheduleEntry, ...]
    tasks_witness: tuple[ScheduleEntry, ...]
    nodes: int = 0


@dataclass(frozen=True)
class _Period:
    proc: int
    start: Fraction
    end: Fraction


class _Search:
    """One DP run for a fixed checkpoint and weight function."""

    def __init__(
        self,
        tasks: Sequence[TaskSpec],
        periods: Sequence[_Period],
        weight: Callable[[TaskSpec], int],
        max_nodes: int,
    ) -> None:
        self._tasks = list(tasks)
        self._periods = list(periods)
        self._weights = [weight(task) for task in self._tasks]
        self._max_nodes = max_nodes
        self.nodes = 0
        self._memo: dict[tuple[int, int], int] = {}
        self._choice: dict[tuple[int, int], int] = {}
        self._feasible: list[dict[int, bool]] = [{} for _ in self._periods]
        self._maximal: dict[tuple[int, int], list[int]] = {}

        classes: dict[tuple[Fraction, int, int], list[int]] = {}
        for index, task in enumerate(self._tasks):
            key = (task.arrival, task.cost, self._weights[index])
            classes.setdefault(key, []).append(index)
        self._classes = list(classes.values())

        # tasks that can possibly run in period i or any later one
        self._usable = [self._usable_mask(period) for period in self._periods]
        self._later = [0] * (len(self._periods) + 1)
        for i in range(len(self._periods) - 1, -1, -1):
            self._later[i] = self._later[i + 1] | self._usable[i]

    @property
    def full_mask(self) -> int:
        return (1 << len(self._tasks)) - 1

    def total_weight(self) -> int:
        return sum(self._weights)

    def best(self) -> int:
        """Maximum weight completed by the checkpoint."""
        return self._solve(0, self.full_mask)

    def witness(self) -> list[ScheduleEntry]:
        entries: list[ScheduleEntry] = []
        remaining = self.full_mask
        for i, period in enumerate(self._periods):
            self._solve(i, remaining)
            canon = self._canonical(remaining & self._later[i])
            chosen = self._translate(self._choice.get((i, canon), 0), remaining)
            entries.extend(self._pack(period, chosen))
            remaining &= ~chosen
        return entries

    def _usable_mask(self, period: _Period) -> int:
        mask = 0
        for index, task in enumerate(self._tasks):
            if max(period.start, task.arrival) + task.cost <= period.end:
                mask |= 1 << index
        return mask

    def _weight_of(self, mask: int) -> int:
        return sum(w for index, w in enumerate(self._weights) if mask >> index & 1)

    def _canonical(self, mask: int) -> int:
        canon = 0
        for members in self._classes:
            count = sum(1 for index in members if mask >> index & 1)
            for index in members[:count]:
                canon |= 1 << index
        return canon

    def _translate(self, subset: int, remaining: int) -> int:
        """Map a subset of the canonical mask onto the actual remaining tasks."""
        actual = 0
        for members in self._classes:
            picked = sum(1 for index in members if subset >> index & 1)
            present = [index for index in members if remaining >> index & 1]
            for index in present[:picked]:
                actual |= 1 << index
        return actual

    def _ordered(self, mask: int) -> list[int]:
        indices = [index for index in range(len(self._tasks)) if mask >> index & 1]
        return sorted(indices, key=self._release_key)

    def _release_key(self, index: int) -> tuple[Fraction, int]:
        task = self._tasks[index]
        return task.arrival, task.id

    def _fits(self, i: int, mask: int) -> bool:
        cached = self._feasible[i].get(mask)
        if cached is not None:
            return cached
        period = self._periods[i]
        cursor = period.start
        ok = True
        for index in self._ordered(mask):
            task = self._tasks[index]
            cursor = max(cursor, task.arrival) + task.cost
            if cursor > period.end:
                ok = False
                break
        self._feasible[i][mask] = ok
        return ok

    def _pack(self, period: _Period, mask: int) -> list[ScheduleEntry]:
        entries: list[ScheduleEntry] = []
        cursor = period.start
        for index in self._ordered(mask):
            task = self._tasks[index]
            start = max(cursor, task.arrival)
            entries.append(ScheduleEntry(period.proc, task.id, start))
            cursor = start + task.cost
        return entries

    def _tick(self) -> None:
        self.nodes += 1
        if self.nodes > self._max_nodes:
            raise BudgetExceededError(
                f"OPT search exceeded the node budget of {self._max_nodes}"
            )

    def _solve(self, i: int, remaining: int) -> int:
        if i == len(self._periods):
            return 0
        remaining &= self._later[i]
        canon = self._canonical(remaining)
        key = (i, canon)
        if key in self._memo:
            return self._memo[key]

        available = canon & self._usable[i]
        best = -1
        best_subset = 0
        ceiling = self._weight_of(canon)
        for subset in self._maximal_subsets(i, available):
            self._tick()
            gained = self._weight_of(subset)
            if best >= ceiling:
                break
            if gained + self._weight_of(canon & ~subset) <= best:
                continue
            value = gained + self._solve(i + 1, canon & ~subset)
            if value > best:
                best, best_subset = value, subset
        self._memo[key] = best
        self._choice[key] = best_subset
        return best

    def _maximal_subsets(self, i: int, available: int) -> list[int]:
        cached = self._maximal.get((i, available))
        if cached is not None:
            return cached
        subsets: list[int] = []
        subset = available
        while True:
            self._tick()
            if self._fits(i, subset) and not any(
                self._fits(i, subset | bit) for bit in _bits(available & ~subset)
            ):
                subsets.append(subset)
            if subset == 0:
                break
            subset = (subset - 1) & available
        subsets.sort(key=self._weight_of, reverse=True)
        self._maximal[(i, available)] = subsets
        return subsets


def _bits(mask: int) -> Iterable[int]:
    while mask:
        low = mask & -mask
        yield low
        mask ^= low


def _weight_function(measure: Measure) -> Callable[[TaskSpec], int]:
    if measure == "cost":
        return lambda task: task.cost
    if measure == "tasks":
        return lambda task: 1
    if isinstance(measure, int) and not isinstance(measure, bool):
        cost_class = measure
        return lambda task: 1 if task.cost == cost_class else 0
    raise PreconditionError(f"Unknown OPT measure {measure!r}")


def _prepare(
    pattern: AdversarialPattern, checkpoint: Fraction, limits: OptLimits
) -> tuple[list[TaskSpec], list[_Period]]:
    violations = validate_pattern(pattern)
    if violations:
        raise PatternError("invalid pattern: " + "; ".join(violations))
    if checkpoint < 0:
        raise PreconditionError("checkpoint must not be negative")
    if pattern.params.n > limits.max_processors:
        raise BudgetExceededError(
            f"OPT search supports at most {limits.max_processors} processors, "
            f"got n={pattern.params.n}"
        )
    tasks = [task for task in pattern.tasks if task.arrival <= checkpoint]
    if len(tasks) > limits.max_tasks:
        raise BudgetExceededError(
            f"OPT search supports at most {limits.max_tasks} tasks before the "
            f"checkpoint, got {len(tasks)}"
        )
    faults = sum(
        1
        for event in pattern.events
        if event.kind is not EventKind.INJECT and event.time <= checkpoint
    )
    if faults > limits.max_fault_events:
        raise BudgetExceededError(
            f"OPT search supports at most {limits.max_fault_events} crash/restart "
            f"events before the checkpoint, got {faults}"
        )
    periods: list[_Period] = []
    for proc, spans in life_periods(pattern, until=checkpoint).items():
        for start, end in spans:
            stop = checkpoint if end is None else min(end, checkpoint)
            if stop > start:
                periods.append(_Period(proc, start, stop))
    periods.sort(key=lambda period: (period.start, period.proc))
    return tasks, periods


def min_pending(
    pattern: AdversarialPattern,
    checkpoint: TimeLike,
    measure: Measure = "cost",
    *,
    limits: OptLimits | None = None,
) -> tuple[int, list[ScheduleEntry], int]:
    """Minimum pending weight at *checkpoint*, a witness and the nodes visited.

    *measure* is ``"cost"``, ``"tasks"`` or a task cost, in which case only
    tasks of that cost are counted.
    """
    at = parse_time(checkpoint)
    limits = limits or OptLimits()
    tasks, periods = _prepare(pattern, at, limits)
    search = _Search(tasks, periods, _weight_function(measure), limits.resolved_nodes())
    value = search.total_weight() - search.best()
    return value, search.witness(), search.nodes


def opt_brute_force(
    pattern: AdversarialPattern,
    checkpoint: TimeLike,
    *,
    limits: OptLimits | None = None,
) -> OptResult:
    """Exact minimum pending cost and pending task count at *checkpoint*."""
    at = parse_time(checkpoint)
    cost, cost_witness, cost_nodes = min_pending(pattern, at, "cost", limits=limits)
    count, tasks_witness, task_nodes = min_pending(
        pattern, at, "tasks", limits=limits
    )
    LOGGER.debug(
        "OPT search finished",
        extra={
            "checkpoint": at,
            "min_pending_cost": cost,
            "min_pending_tasks": count,
            "nodes": cost_nodes + task_nodes,
        },
    )
    return OptResult(
        checkpoint=at,
        min_pending_cost=cost,
        min_pending_tasks=count,
        cost_witness=tuple(cost_witness),
        tasks_witness=tuple(tasks_witness),
        nodes=cost_nodes + task_nodes,
    )


def dec_c_sched(
    pattern: AdversarialPattern,
    checkpoint: TimeLike,
    omega: int,
    *,
    limits: OptLimits | None = None,
) -> bool:
    """TRUE iff some offline schedule leaves pending cost at most *omega*."""
    value, _, _ = min_pending(pattern, checkpoint, "cost", limits=limits)
    return value <= omega


def dec_t_sched(
    pattern: AdversarialPattern,
    checkpoint: TimeLike,
    omega: int,
    *,
    limits: OptLimits | None = None,
) -> bool:
    value, _, _ = min_pending(pattern, checkpoint, "tasks", limits=limits)
    return value <= omega


def grid_denominator(pattern: AdversarialPattern) -> int:
    """Least common multiple of the denominators of every event time."""
    return math.lcm(1, *(event.time.denominator for event in pattern.events))


@dataclass
class OptProfile:
    """Lazily evaluated offline minima, memoised per (instant, measure)."""

    pattern: AdversarialPattern
    limits: OptLimits = field(default_factory=OptLimits)
    _values: dict[tuple[Fraction, Measure], int] = field(
        default_factory=dict, init=False, repr=False
    )

    @property
    def label(self) -> str:
        return "opt-brute-force"

    def value(self, t: Fraction, measure: Measure) -> int:
        key = (t, measure)
        cached = self._values.get(key)
        if cached is None:
            cached, _, _ = min_pending(self.pattern, t, measure, limits=self.limits)
            self._values[key] = cached
            LOGGER.debug(
                "OPT profile point",
                extra={"instant": format_time(t), "measure": str(measure)},
            )
        return cached

    def pending_cost(self, t: Fraction) -> int:
        return self.value(t, "cost")

    def pending_tasks(self, t: Fraction) -> int:
        return self.value(t, "tasks")

    def pending_of_cost(self, t: Fraction, cost: int) -> int:
        return self.value(t, cost)


def opt_profile(
    pattern: AdversarialPattern, limits: OptLimits | None = None
) -> OptProfile:
    return OptProfile(pattern, limits or OptLimits())

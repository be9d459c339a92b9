"""gamma-n-Burst: two-cost policy bursting lmin-tasks between lmax-tasks."""
from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

from ..core import (
    AdversarialPattern,
    PreconditionError,
    ScheduleError,
    SystemParams,
    TaskSpec,
)
from ..utils import format_rational
from .base import arrival_order
from .thresholds import burst_speedup_ok, gamma


@dataclass(frozen=True)
class BurstMemory:
    """Consecutive lmin counter and the class of the last performed task."""

    c: int = 0
    prev_was_min: bool = False


def burst_select(
    lmin_tasks: Sequence[TaskSpec],
    lmax_tasks: Sequence[TaskSpec],
    p: int,
    params: SystemParams,
    memory: BurstMemory,
    *,
    gamma_value: int | None = None,
) -> tuple[TaskSpec, BurstMemory]:
    """Apply the four list-size cases; both lists must be sorted by arrival."""
    if not lmin_tasks and not lmax_tasks:
        raise PreconditionError("pending is empty; the processor must block in get")
    for task in lmin_tasks:
        if task.cost != params.lmin:
            raise ScheduleError(f"task {task.id} in the lmin list has cost {task.cost}")
    for task in lmax_tasks:
        if task.cost != params.lmax:
            raise ScheduleError(f"task {task.id} in the lmax list has cost {task.cost}")
    g = (
        gamma_value
        if gamma_value is not None
        else gamma(params.lmin, params.lmax, params.speedup)
    )
    n = params.n
    threshold = n * n
    few_min = len(lmin_tasks) < threshold
    few_max = len(lmax_tasks) < threshold

    if few_min and few_max:
        use_max = memory.prev_was_min
        # an empty designated class falls back to the other one
        if use_max and not lmax_tasks:
            use_max = False
        elif not use_max and not lmin_tasks:
            use_max = True
    elif few_max:
        use_max = False
    elif few_min:
        use_max = True
    else:
        use_max = memory.c == g

    if use_max:
        task = lmax_tasks[(p * n) % len(lmax_tasks)]
        return task, BurstMemory(0, prev_was_min=False)
    task = lmin_tasks[(p * n) % len(lmin_tasks)]
    return task, BurstMemory(min(memory.c + 1, g), prev_was_min=True)


class BurstScheduler:
    def __init__(self, params: SystemParams) -> None:
        self._params = params
        self._gamma: int | None = None

    @property
    def name(self) -> str:
        return "burst"

    def initial_memory(self) -> BurstMemory:
        return BurstMemory()

    def select(
        self, pending: Sequence[TaskSpec], proc: int, memory: BurstMemory
    ) -> tuple[TaskSpec, BurstMemory]:
        params = self._params
        if self._gamma is None:
            self._gamma = gamma(params.lmin, params.lmax, params.speedup)
        ordered = arrival_order(pending)
        lmin_tasks = [task for task in ordered if task.cost == params.lmin]
        lmax_tasks = [task for task in ordered if task.cost == params.lmax]
        if len(lmin_tasks) + len(lmax_tasks) != len(ordered):
            stray = next(t for t in ordered if t.cost not in (params.lmin, params.lmax))
            raise ScheduleError(
                f"burst handles two costs only; task {stray.id} has cost {stray.cost}"
            )
        return burst_select(
            lmin_tasks, lmax_tasks, proc, params, memory, gamma_value=self._gamma
        )

    def on_report(self, task: TaskSpec, memory: BurstMemory) -> BurstMemory:
        return memory

    def check(self, pattern: AdversarialPattern) -> None:
        params = pattern.params
        if not burst_speedup_ok(params.lmin, params.lmax, params.speedup):
            raise PreconditionError(
                "burst requires (gamma*lmin+lmax)/lmax <= s < lmax/lmin; got "
                f"lmin={params.lmin}, lmax={params.lmax}, "
                f"s={format_rational(params.speedup)}"
            )
        two_costs = (params.lmin, params.lmax)
        stray = [c for c in pattern.distinct_costs if c not in two_costs]
        if stray:
            raise PreconditionError(
                f"burst handles costs {{{params.lmin}, {params.lmax}}} only; "
                f"pattern contains {stray}"
            )

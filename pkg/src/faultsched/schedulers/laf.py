"""LAF: largest affordable cost with a long enough class list."""
from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass

from ..core import AdversarialPattern, PreconditionError, SystemParams, TaskSpec
from .base import lis_order


@dataclass(frozen=True)
class LafMemory:
    """Total cost reported by this processor since its last restart."""

    total: int = 0


def laf_select(
    lists_by_cost: Mapping[int, Sequence[TaskSpec]],
    memory: LafMemory,
    params: SystemParams,
    p: int,
    beta: int | None = None,
) -> TaskSpec:
    """Pick from the largest cost <= total whose list holds >= beta*n^2 tasks.

    Without such a cost the globally oldest task is returned.
    """
    effective_beta = beta if beta is not None else params.beta
    n = params.n
    threshold = effective_beta * n * n
    qualified = [
        cost
        for cost, tasks in lists_by_cost.items()
        if cost <= memory.total and len(tasks) >= threshold
    ]
    if qualified:
        tasks = lists_by_cost[max(qualified)]
        return tasks[(p * effective_beta * n) % len(tasks)]
    candidates = [task for tasks in lists_by_cost.values() for task in tasks]
    if not candidates:
        raise PreconditionError("pending is empty; the processor must block in get")
    return lis_order(candidates)[0]


class LafScheduler:
    def __init__(self, params: SystemParams, beta: int | None = None) -> None:
        self._params = params
        self._beta = beta if beta is not None else params.beta

    @property
    def name(self) -> str:
        return "laf"

    @property
    def beta(self) -> int:
        return self._beta

    def initial_memory(self) -> LafMemory:
        return LafMemory()

    def select(
        self, pending: Sequence[TaskSpec], proc: int, memory: LafMemory
    ) -> tuple[TaskSpec, LafMemory]:
        lists: dict[int, list[TaskSpec]] = {}
        for task in lis_order(pending):
            lists.setdefault(task.cost, []).append(task)
        return laf_select(lists, memory, self._params, proc, self._beta), memory

    def on_report(self, task: TaskSpec, memory: LafMemory) -> LafMemory:
        return LafMemory(memory.total + task.cost)

    def check(self, pattern: AdversarialPattern) -> None:
        required = pattern.params.min_beta
        if self._beta < required:
            raise PreconditionError(
                f"laf requires beta >= ceil(lmax/lmin) = {required}, got {self._beta}"
            )

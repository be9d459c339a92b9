"""Scheduler protocol and the deterministic list orders shared by policies."""
from __future__ import annotations

from collections.abc import Iterable, Sequence
from typing import Protocol, TypeVar, runtime_checkable

from ..core import AdversarialPattern, TaskSpec

MemoryT = TypeVar("MemoryT")


@runtime_checkable
class Scheduler(Protocol[MemoryT]):
    """Online policy run by every processor at each get.

    Memory is per processor, immutable, and replaced by
    :meth:`initial_memory` whenever the processor restarts.
    """

    @property
    def name(self) -> str:
        """Short identifier used in traces and reports."""
        ...

    def initial_memory(self) -> MemoryT:
        ...

    def select(
        self, pending: Sequence[TaskSpec], proc: int, memory: MemoryT
    ) -> tuple[TaskSpec, MemoryT]:
        """Pick a task from a non-empty pending snapshot."""
        ...

    def on_report(self, task: TaskSpec, memory: MemoryT) -> MemoryT:
        """Update memory after the processor informs *task*."""
        ...

    def check(self, pattern: AdversarialPattern) -> None:
        """Raise PreconditionError when the policy cannot run on *pattern*."""
        ...


def lis_order(tasks: Iterable[TaskSpec]) -> list[TaskSpec]:
    """Sort by arrival, then cost, then id."""
    return sorted(tasks, key=lambda task: (task.arrival, task.cost, task.id))


def arrival_order(tasks: Iterable[TaskSpec]) -> list[TaskSpec]:
    """Sort by arrival, then id."""
    return sorted(tasks, key=lambda task: (task.arrival, task.id))

"""Shared repository of pending tasks with inject/get/inform at one instant."""
from __future__ import annotations

from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction

from .core import PendingSnapshot, ScheduleError, TaskSpec


@dataclass(frozen=True)
class RepositoryState:
    """Immutable repository state; ``pending`` keeps injection order."""

    pending: tuple[TaskSpec, ...] = ()
    informed: frozenset[int] = frozenset()
    blocked: frozenset[int] = frozenset()
    injected: frozenset[int] = frozenset()

    @property
    def pending_cost(self) -> int:
        return sum(task.cost for task in self.pending)

    def snapshot(self, t: Fraction) -> PendingSnapshot:
        counts = Counter(task.cost for task in self.pending)
        return PendingSnapshot(
            time=t,
            tasks=len(self.pending),
            cost=self.pending_cost,
            by_cost=tuple(sorted(counts.items())),
        )

    def without_getter(self, proc: int) -> RepositoryState:
        """Drop *proc* from the blocked getters (it crashed while waiting)."""
        if proc not in self.blocked:
            return self
        return RepositoryState(
            self.pending, self.informed, self.blocked - {proc}, self.injected
        )


@dataclass(frozen=True)
class InstantOutcome:
    """Result of one instant: new state, get results and duplicate informs."""

    state: RepositoryState
    delivered: dict[int, tuple[TaskSpec, ...]] = field(default_factory=dict)
    duplicates: tuple[tuple[int, int], ...] = ()


def apply_instant(
    state: RepositoryState,
    t: Fraction,
    informs: Sequence[tuple[int, int]],
    injects: Sequence[TaskSpec],
    gets: Sequence[int],
) -> InstantOutcome:
    """Process informs, then injects, then gets, all at instant *t*.

    A get on an empty repository blocks its processor; blocked processors are
    released (and listed in ``delivered``) at the first instant with an inject.
    Informing an already removed task is a no-op recorded in ``duplicates``.
    """
    pending = list(state.pending)
    informed = set(state.informed)
    injected = set(state.injected)
    duplicates: list[tuple[int, int]] = []

    for proc, task_id in informs:
        if task_id not in injected:
            raise ScheduleError(
                f"processor {proc} informed task {task_id} which was never injected"
            )
        if task_id in informed:
            duplicates.append((proc, task_id))
            continue
        informed.add(task_id)
        pending = [task for task in pending if task.id != task_id]

    for task in injects:
        if task.id in injected:
            raise ScheduleError(f"task id {task.id} injected twice")
        if task.arrival != t:
            raise ScheduleError(f"task {task.id} injected at a different instant")
        injected.add(task.id)
        pending.append(task)

    view = tuple(pending)
    delivered: dict[int, tuple[TaskSpec, ...]] = {}
    blocked = set(state.blocked)
    if injects and view:
        for proc in sorted(blocked):
            delivered[proc] = view
        blocked.clear()
    for proc in gets:
        if view:
            delivered[proc] = view
        else:
            blocked.add(proc)

    new_state = RepositoryState(
        view, frozenset(informed), frozenset(blocked), frozenset(injected)
    )
    return InstantOutcome(new_state, delivered, tuple(duplicates))

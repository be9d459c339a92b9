"""Memoryless cost-ordered baselines."""
from __future__ import annotations

from collections.abc import Sequence

from ..core import AdversarialPattern, TaskSpec


class CostOrderScheduler:
    """Largest-cost-first (``lcf``) or smallest-cost-first (``scf``).

    Ties go to the oldest task, then the smallest id.
    """

    def __init__(self, largest_first: bool) -> None:
        self._largest_first = largest_first

    @property
    def name(self) -> str:
        return "lcf" if self._largest_first else "scf"

    def initial_memory(self) -> None:
        return None

    def select(
        self, pending: Sequence[TaskSpec], proc: int, memory: None
    ) -> tuple[TaskSpec, None]:
        sign = -1 if self._largest_first else 1
        return min(pending, key=lambda t: (sign * t.cost, t.arrival, t.id)), None

    def on_report(self, task: TaskSpec, memory: None) -> None:
        return None

    def check(self, pattern: AdversarialPattern) -> None:
        return None

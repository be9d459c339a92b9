"""(n, beta)-LIS: longest-in-system with a processor-dependent rank."""
from __future__ import annotations

from collections.abc import Sequence, Sized

from ..core import AdversarialPattern, PreconditionError, SystemParams, TaskSpec
from .base import lis_order


def lis_select(pending: Sized, p: int, n: int, beta: int) -> int:
    """Return the 0-based rank ``(p * beta * n) mod |pending|``."""
    if len(pending) == 0:
        raise PreconditionError("pending is empty; the processor must block in get")
    return (p * beta * n) % len(pending)


class LisScheduler:
    """Each processor runs the task at its own rank in the LIS-sorted list."""

    def __init__(self, params: SystemParams, beta: int | None = None) -> None:
        self._params = params
        self._beta = beta if beta is not None else params.beta

    @property
    def name(self) -> str:
        return "lis"

    @property
    def beta(self) -> int:
        return self._beta

    def initial_memory(self) -> None:
        return None

    def select(
        self, pending: Sequence[TaskSpec], proc: int, memory: None
    ) -> tuple[TaskSpec, None]:
        ordered = lis_order(pending)
        return ordered[lis_select(ordered, proc, self._params.n, self._beta)], None

    def on_report(self, task: TaskSpec, memory: None) -> None:
        return None

    def check(self, pattern: AdversarialPattern) -> None:
        required = pattern.params.min_beta
        if self._beta < required:
            raise PreconditionError(
                f"lis requires beta >= ceil(lmax/lmin) = {required}, got {self._beta}"
            )

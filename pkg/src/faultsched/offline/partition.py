"""Reduction from Partition to the offline pending-cost decision problem."""
from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction

from .. import utils
from ..core import (
    AdversarialPattern,
    AdversaryEvent,
    ConsistencyError,
    PreconditionError,
    SystemParams,
)
from .opt import OptLimits, dec_c_sched

LOGGER = utils.get_logger()


@dataclass(frozen=True)
class ReductionInstance:
    pattern: AdversarialPattern
    checkpoint: Fraction
    omega: int = 0

    def sidecar(self) -> dict[str, object]:
        return {
            "checkpoint": utils.format_rational(self.checkpoint),
            "omega": self.omega,
        }


def _check_values(values: Sequence[int]) -> None:
    if len(values) <= 1:
        raise PreconditionError("partition needs at least two values")
    if any(isinstance(v, bool) or v <= 0 for v in values):
        raise PreconditionError("partition values must be positive integers")


def reduce_partition(values: Sequence[int]) -> ReductionInstance:
    """Build the one-processor pattern whose optimum is 0 iff *values* split evenly.

    All tasks arrive at 0; the processor crashes at half the total, restarts
    immediately and crashes again at the total. The checkpoint is one unit
    later, with no restart in between.
    """
    _check_values(values)
    total = sum(values)
    half = Fraction(total, 2)
    params = SystemParams(
        n=1,
        speedup=Fraction(1),
        lmin=min(values),
        lmax=max(values),
        beta=math.ceil(Fraction(max(values), min(values))),
    )
    events = [
        AdversaryEvent.inject(0, index, cost)
        for index, cost in enumerate(values, start=1)
    ]
    events += [
        AdversaryEvent.crash(half, 1),
        AdversaryEvent.restart(half, 1),
        AdversaryEvent.crash(total, 1),
    ]
    return ReductionInstance(
        AdversarialPattern(params, tuple(events)), Fraction(total + 1), omega=0
    )


def subset_sum_partition(values: Sequence[int]) -> bool:
    """Direct subset-sum check: can *values* be split into two equal-sum halves?"""
    total = sum(values)
    if total % 2:
        return False
    target = total // 2
    reachable = 1
    for value in values:
        reachable |= reachable << value
    return bool(reachable >> target & 1)


def solve_partition_via_scheduling(
    values: Sequence[int], *, limits: OptLimits | None = None
) -> bool:
    """Decide Partition through the offline scheduler and cross-check it."""
    instance = reduce_partition(values)
    answer = dec_c_sched(
        instance.pattern, instance.checkpoint, instance.omega, limits=limits
    )
    expected = subset_sum_partition(values)
    if answer != expected:
        raise ConsistencyError(
            f"scheduling answer {answer} disagrees with subset sum {expected} "
            f"for {list(values)}"
        )
    LOGGER.debug("Partition decided", extra={"values": list(values), "answer": answer})
    return answer

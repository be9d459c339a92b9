"""Online scheduling policies and speedup thresholds."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from ..core import PreconditionError, SystemParams
from .base import Scheduler, arrival_order, lis_order
from .burst import BurstMemory, BurstScheduler, burst_select
from .laf import LafMemory, LafScheduler, laf_select
from .lis import LisScheduler, lis_select
from .reference import CostOrderScheduler
from .thresholds import (
    Recommendation,
    SufficientSpeedup,
    burst_speedup_ok,
    competitive_threshold,
    gamma,
    gamma_by_scan,
    non_competitive_check,
    property_one,
    recommend_scheduler,
    sufficient_speedup,
)

SCHEDULER_KINDS = ("lis", "burst", "laf", "lcf", "scf")
BETA_KINDS = frozenset({"lis", "laf"})


@dataclass(frozen=True)
class SchedulerSpec:
    """Scheduler identifier plus its parameters."""

    kind: str
    beta: int | None = None


def create_scheduler(spec: SchedulerSpec, params: SystemParams) -> Scheduler[Any]:
    """Instantiate the scheduler named by *spec*."""
    if spec.beta is not None and spec.beta < 1:
        raise PreconditionError("beta must be a positive integer")
    if spec.kind == "lis":
        return LisScheduler(params, spec.beta)
    if spec.kind == "laf":
        return LafScheduler(params, spec.beta)
    if spec.kind == "burst":
        return BurstScheduler(params)
    if spec.kind in ("lcf", "scf"):
        return CostOrderScheduler(largest_first=spec.kind == "lcf")
    raise PreconditionError(
        f"Unknown scheduler kind {spec.kind!r}; expected one of {SCHEDULER_KINDS}"
    )


__all__ = [
    "BETA_KINDS",
    "BurstMemory",
    "BurstScheduler",
    "CostOrderScheduler",
    "LafMemory",
    "LafScheduler",
    "LisScheduler",
    "Recommendation",
    "SCHEDULER_KINDS",
    "Scheduler",
    "SchedulerSpec",
    "SufficientSpeedup",
    "arrival_order",
    "burst_select",
    "burst_speedup_ok",
    "competitive_threshold",
    "create_scheduler",
    "gamma",
    "gamma_by_scan",
    "laf_select",
    "lis_order",
    "lis_select",
    "non_competitive_check",
    "property_one",
    "recommend_scheduler",
    "sufficient_speedup",
]

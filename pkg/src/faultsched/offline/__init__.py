"""Offline references: exact optimum, Partition reduction and the adversary."""
from __future__ import annotations

from .adversary import (
    PHASE_LOG_HEADER,
    AdversaryResult,
    PhaseRecord,
    lower_bound_adversary,
    phase_log_rows,
)
from .opt import (
    OptLimits,
    OptProfile,
    OptResult,
    dec_c_sched,
    dec_t_sched,
    grid_denominator,
    min_pending,
    opt_brute_force,
    opt_profile,
)
from .partition import (
    ReductionInstance,
    reduce_partition,
    solve_partition_via_scheduling,
    subset_sum_partition,
)

__all__ = [
    "PHASE_LOG_HEADER",
    "AdversaryResult",
    "OptLimits",
    "OptProfile",
    "OptResult",
    "PhaseRecord",
    "ReductionInstance",
    "dec_c_sched",
    "dec_t_sched",
    "grid_denominator",
    "lower_bound_adversary",
    "min_pending",
    "opt_brute_force",
    "opt_profile",
    "phase_log_rows",
    "reduce_partition",
    "solve_partition_via_scheduling",
    "subset_sum_partition",
]

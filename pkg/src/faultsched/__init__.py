"""Deterministic crash/restart scheduling simulator and bound verifier."""

from .core import (
    AdversarialPattern,
    AdversaryEvent,
    BudgetExceededError,
    ConsistencyError,
    FaultSchedError,
    PatternError,
    PreconditionError,
    RunTrace,
    ScheduleError,
    SystemParams,
    TaskSpec,
)
from .engine import SimulationConfig, Simulator, run_offline_reference, run_simulation
from .schedulers import SchedulerSpec

__all__ = [
    "AdversarialPattern",
    "AdversaryEvent",
    "BudgetExceededError",
    "ConsistencyError",
    "FaultSchedError",
    "PatternError",
    "PreconditionError",
    "RunTrace",
    "ScheduleError",
    "SchedulerSpec",
    "SimulationConfig",
    "Simulator",
    "SystemParams",
    "TaskSpec",
    "run_offline_reference",
    "run_simulation",
]

__version__ = "0.1.0"

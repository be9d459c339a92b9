"""Seeded fuzz runs: random patterns, scheduler, exact OPT and the matching verifier."""
from __future__ import annotations

import json
import math
import random
from collections.abc import Callable
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import codec, utils
from .analysis import (
    BoundReport,
    audit_threshold,
    redundancy_audit,
    verify_burst_bounds,
    verify_laf_bound,
    verify_lis_bounds,
)
from .core import (
    AdversarialPattern,
    AdversaryEvent,
    BudgetExceededError,
    PreconditionError,
    RunTrace,
    SystemParams,
)
from .engine import SimulationConfig, run_simulation
from .offline.opt import OptLimits, opt_profile
from .schedulers import SchedulerSpec, burst_speedup_ok
from .schedulers.thresholds import LAF_SPEEDUP

FUZZ_KINDS = ("lis", "burst", "laf")
MAX_FUZZ_PROCESSORS = 2
MAX_FUZZ_TASKS = 8
MAX_COST = 5
_SEED_STRIDE = 1_000_003
_EVENT_ORDER = {"crash": 0, "restart": 1, "inject": 2}


class FuzzCancelled(Exception):
    """Raised when a fuzz run is cancelled through its hooks."""


@dataclass(frozen=True)
class FuzzConfig:
    scheduler: str
    n: int = 1
    tasks: int = 6
    trials: int = 10
    seed: int = 0
    max_pairs: int = 4
    audit: bool = True
    out_dir: Path | None = None
    report_path: Path | None = None
    limits: OptLimits = field(default_factory=OptLimits)


@dataclass(frozen=True)
class FuzzHooks:
    """Lifecycle hooks for progress reporting and cancellation."""

    should_cancel: Callable[[], bool] = lambda: False
    on_progress: Callable[[int, int], None] = lambda *_: None
    on_log: Callable[[str], None] = lambda _msg: None


@dataclass(frozen=True)
class TrialReport:
    trial: int
    fingerprint: str
    reports: tuple[BoundReport, ...]
    incidents: int = 0

    @property
    def holds(self) -> bool:
        return self.incidents == 0 and all(report.holds for report in self.reports)

    def to_dict(self) -> dict[str, object]:
        return {
            "trial": self.trial,
            "fingerprint": self.fingerprint,
            "holds": self.holds,
            "reports": [report.to_dict() for report in self.reports],
            "incidents": self.incidents,
        }


@dataclass
class FuzzResult:
    trials: list[TrialReport] = field(default_factory=list)
    failure_path: Path | None = None

    @property
    def failed(self) -> TrialReport | None:
        return next((trial for trial in self.trials if not trial.holds), None)


def trial_rng(seed: int, trial: int) -> random.Random:
    """Independent MT19937 stream for one trial."""
    return random.Random(seed * _SEED_STRIDE + trial)


def _draw_params(
    rng: random.Random, kind: str, n: int
) -> tuple[SystemParams, list[int]]:
    if kind == "lis":
        lmin = rng.randint(1, MAX_COST)
        lmax = rng.randint(lmin, MAX_COST)
        rho = Fraction(lmax, lmin)
        params = SystemParams(n, rho, lmin, lmax, beta=math.ceil(rho))
        return params, sorted({lmin, lmax})
    if kind == "burst":
        while True:
            lmin = rng.randint(1, MAX_COST - 1)
            lmax = rng.randint(lmin + 1, MAX_COST)
            speeds = sorted(
                {
                    Fraction(num, den)
                    for den in range(1, 11)
                    for num in range(den + 1, lmax * den // lmin + 1)
                    if burst_speedup_ok(lmin, lmax, Fraction(num, den))
                }
            )
            if speeds:
                speed = rng.choice(speeds)
                beta = math.ceil(Fraction(lmax, lmin))
                return SystemParams(n, speed, lmin, lmax, beta=beta), [lmin, lmax]
    if kind == "laf":
        costs = sorted(rng.sample(range(1, MAX_COST + 2), rng.randint(1, 3)))
        lmin, lmax = costs[0], costs[-1]
        beta = math.ceil(Fraction(lmax, lmin))
        return SystemParams(1, LAF_SPEEDUP, lmin, lmax, beta=beta), costs
    raise PreconditionError(f"fuzzing supports {FUZZ_KINDS}, got {kind!r}")


def generate_pattern(
    rng: random.Random, kind: str, n: int, tasks: int, max_pairs: int = 4
) -> tuple[AdversarialPattern, Fraction]:
    """Random valid pattern for *kind* plus a horizon that drains every task."""
    params, costs = _draw_params(rng, kind, n)
    count = rng.randint(1, max(tasks, 1)) if tasks > 0 else 0
    span = max(2 * count, 2)
    events: list[AdversaryEvent] = [
        AdversaryEvent.inject(rng.randint(0, span), task_id, rng.choice(costs))
        for task_id in range(1, count + 1)
    ]
    pairs = rng.randint(0, max_pairs)
    per_proc = [0] * params.n
    for _ in range(pairs):
        per_proc[rng.randrange(params.n)] += 1
    for proc, proc_pairs in enumerate(per_proc, start=1):
        if not proc_pairs:
            continue
        times = sorted(rng.sample(range(1, span + 2 * proc_pairs + 1), 2 * proc_pairs))
        for crash_at, restart_at in zip(times[::2], times[1::2], strict=True):
            events.append(AdversaryEvent.crash(crash_at, proc))
            events.append(AdversaryEvent.restart(restart_at, proc))
    events.sort(key=lambda e: (e.time, _EVENT_ORDER[e.kind.value]))
    pattern = AdversarialPattern(params, tuple(events))
    horizon = pattern.last_event_time + pattern.total_cost + 1
    return pattern, horizon


def check_trial(
    kind: str, pattern: AdversarialPattern, trace: RunTrace, *, limits: OptLimits
) -> tuple[tuple[BoundReport, ...], int]:
    """Run the verifier matching *kind* against the exact OPT profile."""
    profile = opt_profile(pattern, limits)
    params = pattern.params
    reports: tuple[BoundReport, ...]
    if kind == "lis":
        reports = verify_lis_bounds(trace, profile, params)
    elif kind == "burst":
        reports = verify_burst_bounds(trace, profile, params)
    else:
        k = max(len(pattern.distinct_costs), 1)
        reports = verify_laf_bound(trace, profile, params, k)
    threshold, grouping = audit_threshold(kind, params)
    incidents = redundancy_audit(trace, threshold, grouping=grouping)
    return reports, len(incidents)


def _validate(config: FuzzConfig) -> None:
    if config.scheduler not in FUZZ_KINDS:
        raise PreconditionError(
            f"fuzzing supports {FUZZ_KINDS}, got {config.scheduler!r}"
        )
    if config.trials < 0 or config.tasks < 0 or config.max_pairs < 0:
        raise PreconditionError("trials, tasks and pairs must not be negative")
    if config.n < 1:
        raise PreconditionError("n must be at least 1")
    if config.scheduler == "laf" and config.n != 1:
        raise PreconditionError("laf fuzzing runs on a single processor")
    if config.n > MAX_FUZZ_PROCESSORS or config.tasks > MAX_FUZZ_TASKS:
        raise BudgetExceededError(
            f"the OPT oracle handles n <= {MAX_FUZZ_PROCESSORS} and at most "
            f"{MAX_FUZZ_TASKS} tasks per trial"
        )


def _dump_failure(
    directory: Path,
    trial: TrialReport,
    pattern: AdversarialPattern,
    horizon: Fraction,
    kind: str,
) -> Path:
    payload = codec.pattern_to_dict(pattern)
    payload["scheduler"] = {"kind": kind, "beta": pattern.params.beta}
    payload["horizon"] = utils.format_rational(horizon)
    payload["reports"] = [report.to_dict() for report in trial.reports]
    payload["incidents"] = trial.incidents
    path = directory / f"fuzz-failure-{trial.trial}.json"
    utils.atomic_write_text(path, utils.json_dump(payload))
    return path


def run_fuzz(config: FuzzConfig, hooks: FuzzHooks | None = None) -> FuzzResult:
    """Run seeded trials in order and stop at the first violated bound."""
    hooks = hooks or FuzzHooks()
    _validate(config)
    result = FuzzResult()
    kind = config.scheduler
    for trial in range(config.trials):
        if hooks.should_cancel():
            raise FuzzCancelled()
        rng = trial_rng(config.seed, trial)
        pattern, horizon = generate_pattern(
            rng, kind, config.n, config.tasks, config.max_pairs
        )
        trace = run_simulation(
            SimulationConfig(
                pattern, SchedulerSpec(kind, pattern.params.beta), horizon
            )
        )
        reports, incidents = check_trial(kind, pattern, trace, limits=config.limits)
        report = TrialReport(
            trial, trace.fingerprint, reports, incidents if config.audit else 0
        )
        result.trials.append(report)
        hooks.on_progress(trial + 1, config.trials)
        if not report.holds:
            hooks.on_log(f"trial {trial} violated a bound")
            if config.out_dir is not None:
                utils.ensure_directory(config.out_dir)
                result.failure_path = _dump_failure(
                    config.out_dir, report, pattern, horizon, kind
                )
            break

    if config.report_path is not None:
        lines = [json.dumps(trial.to_dict(), sort_keys=True) for trial in result.trials]
        utils.atomic_write_text(
            config.report_path, "".join(line + "\n" for line in lines)
        )
    utils.LOGGER.info(
        "Fuzz finished",
        extra={
            "scheduler": kind,
            "trials": len(result.trials),
            "failed": result.failed.trial if result.failed else None,
        },
    )
    return result

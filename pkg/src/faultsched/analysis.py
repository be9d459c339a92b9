"""Post-hoc checks of the additive competitiveness bounds and the redundancy audit.

Pending quantities of a trace are piecewise constant between recorded
instants, so the inequalities are checked right after each instant of the
online run. When the offline side is an :class:`OptProfile` its minimum can
only drop between injections, on a grid of step ``1/D``; the verifiers then
also check the last grid point before every online instant.
"""
from __future__ import annotations

import math
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Literal

from . import codec, utils
from .core import (
    Execution,
    PreconditionError,
    RunTrace,
    ScheduleError,
    SystemParams,
    format_time,
)
from .offline.opt import OptProfile, grid_denominator
from .schedulers import burst_speedup_ok
from .schedulers.thresholds import LAF_SPEEDUP

LOGGER = utils.get_logger()

OptSource = RunTrace | OptProfile
Grouping = Literal["pending", "cost"]


@dataclass(frozen=True)
class BoundReport:
    name: str
    holds: bool
    worst_slack: Fraction
    violating_time: Fraction | None = None
    opt_source: str = ""

    def to_dict(self) -> dict[str, object]:
        return {
            "bound": self.name,
            "holds": self.holds,
            "worst_slack": format_time(self.worst_slack),
            "violating_time": (
                format_time(self.violating_time)
                if self.violating_time is not None
                else None
            ),
            "opt_source": self.opt_source,
        }


class _OptView:
    """Uniform access to an offline trace or an exact profile."""

    def __init__(self, source: OptSource) -> None:
        self._source = source

    @property
    def label(self) -> str:
        if isinstance(self._source, OptProfile):
            return self._source.label
        return self._source.source

    @property
    def fingerprint(self) -> str:
        if isinstance(self._source, OptProfile):
            return codec.pattern_fingerprint(self._source.pattern)
        return self._source.fingerprint

    def costs(self) -> set[int]:
        if isinstance(self._source, OptProfile):
            return set(self._source.pattern.distinct_costs)
        return _trace_costs(self._source)

    def tasks(self, t: Fraction) -> int:
        if isinstance(self._source, OptProfile):
            return self._source.pending_tasks(t)
        return self._source.pending_at(t).tasks

    def cost(self, t: Fraction) -> int:
        if isinstance(self._source, OptProfile):
            return self._source.pending_cost(t)
        return self._source.pending_at(t).cost

    def count_of(self, t: Fraction, cost: int) -> int:
        if isinstance(self._source, OptProfile):
            return self._source.pending_of_cost(t, cost)
        return self._source.pending_at(t).count_of(cost)

    def instants(self, alg: RunTrace) -> list[Fraction]:
        points = {Fraction(0), alg.horizon, *alg.instants()}
        if isinstance(self._source, OptProfile):
            step = grid_denominator(self._source.pattern)
            for t in list(points):
                before = Fraction(math.ceil(t * step) - 1, step)
                if before >= 0:
                    points.add(before)
        else:
            points.update(self._source.instants())
        return sorted(t for t in points if t <= alg.horizon)


def _trace_costs(trace: RunTrace) -> set[int]:
    costs = {execution.cost for execution in trace.executions}
    for snapshot in trace.snapshots:
        costs.update(cost for cost, _ in snapshot.by_cost)
    return costs


def _prepare(alg: RunTrace, opt: OptSource) -> _OptView:
    view = _OptView(opt)
    if alg.fingerprint != view.fingerprint:
        raise PreconditionError(
            "online and offline traces come from different patterns "
            f"({alg.fingerprint[:12]} vs {view.fingerprint[:12]})"
        )
    return view


def _check(
    name: str,
    instants: Iterable[Fraction],
    slack: Callable[[Fraction], Fraction],
    label: str,
) -> BoundReport:
    worst: Fraction | None = None
    violating: Fraction | None = None
    for t in instants:
        value = slack(t)
        if worst is None or value < worst:
            worst = value
        if value < 0 and violating is None:
            violating = t
    worst = Fraction(0) if worst is None else worst
    report = BoundReport(name, worst >= 0, worst, violating, label)
    if not report.holds:
        LOGGER.warning(
            "Bound violated",
            extra={"bound": name, "at": violating, "slack": worst},
        )
    return report


def verify_lis_bounds(
    alg: RunTrace, opt: OptSource, params: SystemParams
) -> tuple[BoundReport, BoundReport]:
    """Task bound ``T <= T_opt + beta*n^2 + 3n`` and its cost counterpart."""
    view = _prepare(alg, opt)
    if params.speedup < params.rho:
        raise PreconditionError(
            f"lis bounds need s >= lmax/lmin = {format_time(params.rho)}"
        )
    if params.beta < params.min_beta:
        raise PreconditionError(f"lis bounds need beta >= {params.min_beta}")
    n = params.n
    additive = params.beta * n * n + 3 * n
    instants = view.instants(alg)
    tasks = _check(
        "lis-tasks",
        instants,
        lambda t: Fraction(view.tasks(t) + additive - alg.pending_at(t).tasks),
        view.label,
    )
    cost = _check(
        "lis-cost",
        instants,
        lambda t: params.rho * (view.cost(t) + additive) - alg.pending_at(t).cost,
        view.label,
    )
    return tasks, cost


def verify_burst_bounds(
    alg: RunTrace, opt: OptSource, params: SystemParams
) -> tuple[BoundReport, BoundReport, BoundReport]:
    """Task, cost and lmax-backlog bounds of the two-cost burst policy."""
    view = _prepare(alg, opt)
    lmin, lmax, s = params.lmin, params.lmax, params.speedup
    stray = (_trace_costs(alg) | view.costs()) - {lmin, lmax}
    if stray:
        raise PreconditionError(
            f"burst bounds need costs {{{lmin}, {lmax}}} only, found {sorted(stray)}"
        )
    if not burst_speedup_ok(lmin, lmax, s):
        raise PreconditionError(
            "burst bounds need (gamma*lmin+lmax)/lmax <= s < lmax/lmin"
        )
    n = params.n
    ratio = math.ceil(Fraction(lmax) / (s * lmin))
    task_extra = 2 * n * n + (3 + ratio) * n
    cost_extra = lmax * (n * n + 2 * n) + lmin * (n * n + (1 + ratio) * n)
    backlog_extra = n * n + 2 * n
    instants = view.instants(alg)
    return (
        _check(
            "burst-tasks",
            instants,
            lambda t: Fraction(view.tasks(t) + task_extra - alg.pending_at(t).tasks),
            view.label,
        ),
        _check(
            "burst-cost",
            instants,
            lambda t: Fraction(view.cost(t) + cost_extra - alg.pending_at(t).cost),
            view.label,
        ),
        _check(
            "burst-lmax-backlog",
            instants,
            lambda t: Fraction(
                view.count_of(t, lmax)
                + backlog_extra
                - alg.pending_at(t).count_of(lmax)
            ),
            view.label,
        ),
    )


def laf_additive(params: SystemParams, k: int) -> Fraction:
    n, lmax = params.n, params.lmax
    return (
        2 * lmax * k * params.beta * n * n
        + 2 * n * lmax
        + Fraction(3 * n * lmax) / params.speedup
    )


def verify_laf_bound(
    alg: RunTrace, opt: OptSource, params: SystemParams, k: int
) -> tuple[BoundReport, BoundReport]:
    """Cost bound of the largest-amount-first policy plus the derived task bound."""
    view = _prepare(alg, opt)
    if params.speedup < LAF_SPEEDUP:
        raise PreconditionError("laf bound needs s >= 7/2")
    if k < 1:
        raise PreconditionError("k must be a positive number of distinct costs")
    costs = _trace_costs(alg) | view.costs()
    if len(costs) > k:
        raise PreconditionError(
            f"trace has {len(costs)} distinct costs, more than k = {k}"
        )
    if params.beta < params.min_beta:
        raise PreconditionError(f"laf bound needs beta >= {params.min_beta}")
    delta = laf_additive(params, k)
    instants = view.instants(alg)
    cost = _check(
        "laf-cost",
        instants,
        lambda t: view.cost(t) + delta - alg.pending_at(t).cost,
        view.label,
    )
    tasks = _check(
        "laf-tasks",
        instants,
        lambda t: params.rho * view.tasks(t)
        + delta / params.lmin
        - alg.pending_at(t).tasks,
        view.label,
    )
    return cost, tasks


@dataclass(frozen=True)
class RedundancyIncident:
    """The same task executed twice inside an interval with a large class."""

    task_id: int
    first: Execution
    second: Execution
    start: Fraction
    end: Fraction

    def to_dict(self) -> dict[str, object]:
        return {
            "task": self.task_id,
            "procs": [self.first.proc, self.second.proc],
            "start": format_time(self.start),
            "end": format_time(self.end),
        }


def _class_size(trace: RunTrace, t: Fraction, grouping: Grouping, cost: int) -> int:
    snapshot = trace.pending_at(t)
    return snapshot.tasks if grouping == "pending" else snapshot.count_of(cost)


def _absolute_executions(trace: RunTrace) -> dict[int, list[Execution]]:
    grouped: dict[int, list[Execution]] = {}
    for execution in trace.executions:
        if execution.end < execution.start or execution.cost <= 0:
            raise ScheduleError(
                f"malformed execution of task {execution.task_id} on processor "
                f"{execution.proc}"
            )
        if execution.end > trace.horizon:
            raise ScheduleError(
                f"execution of task {execution.task_id} ends after the horizon"
            )
        if execution.completed:
            grouped.setdefault(execution.task_id, []).append(execution)
    return grouped


def redundancy_audit(
    trace: RunTrace, class_threshold: int, *, grouping: Grouping = "pending"
) -> list[RedundancyIncident]:
    """Duplicate absolute executions of one task inside a qualifying interval.

    An interval qualifies when the relevant class (all pending tasks, or the
    pending tasks of the duplicated task's cost) holds at least
    *class_threshold* tasks at every instant of it.
    """
    if class_threshold < 0:
        raise PreconditionError("class threshold must not be negative")
    instants = trace.instants()
    incidents: list[RedundancyIncident] = []
    for task_id, runs in sorted(_absolute_executions(trace).items()):
        for first, second in combinations(sorted(runs, key=_run_key), 2):
            lo = min(first.start, second.start)
            hi = max(first.end, second.end)
            inside: Sequence[Fraction] = [t for t in instants if lo < t < hi]
            if all(
                _class_size(trace, t, grouping, first.cost) >= class_threshold
                for t in [lo, *inside]
            ):
                incidents.append(RedundancyIncident(task_id, first, second, lo, hi))
    if incidents:
        LOGGER.warning("Redundant executions found", extra={"count": len(incidents)})
    return incidents


def _run_key(execution: Execution) -> tuple[Fraction, int]:
    return execution.start, execution.proc


def audit_threshold(kind: str, params: SystemParams) -> tuple[int, Grouping]:
    """Class threshold and grouping under which *kind* should never duplicate."""
    n = params.n
    if kind == "lis":
        return params.beta * n * n, "pending"
    if kind == "laf":
        return params.beta * n * n, "cost"
    if kind == "burst":
        return n * n, "cost"
    raise PreconditionError(f"no redundancy threshold for scheduler {kind!r}")

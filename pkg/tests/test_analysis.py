"""Tests for the bound verifiers and the redundancy audit."""
from __future__ import annotations

from fractions import Fraction

import pytest

from faultsched import codec
from faultsched.analysis import (
    BoundReport,
    audit_threshold,
    laf_additive,
    redundancy_audit,
    verify_burst_bounds,
    verify_laf_bound,
    verify_lis_bounds,
)
from faultsched.core import (
    AdversarialPattern,
    AdversaryEvent,
    Execution,
    PendingSnapshot,
    PreconditionError,
    RunTrace,
    ScheduleEntry,
    ScheduleError,
    SystemParams,
)
from faultsched.engine import SimulationConfig, run_offline_reference, run_simulation
from faultsched.offline import opt_profile
from faultsched.schedulers import SchedulerSpec


def _with_params(
    pattern: AdversarialPattern, params: SystemParams
) -> AdversarialPattern:
    return AdversarialPattern(params, pattern.events)


@pytest.fixture
def lis_pattern(crash_pattern: AdversarialPattern) -> AdversarialPattern:
    return _with_params(
        crash_pattern, SystemParams(n=1, speedup=2, lmin=1, lmax=2, beta=2)
    )


@pytest.fixture
def two_cost_pattern() -> AdversarialPattern:
    params = SystemParams(n=1, speedup=2, lmin=1, lmax=3, beta=3)
    return AdversarialPattern(
        params,
        (
            AdversaryEvent.inject(0, 1, 3),
            AdversaryEvent.inject(0, 2, 1),
            AdversaryEvent.inject(0, 3, 1),
            AdversaryEvent.crash(1, 1),
            AdversaryEvent.restart(2, 1),
            AdversaryEvent.inject(2, 4, 3),
        ),
    )


def _run(pattern: AdversarialPattern, kind: str, horizon: int) -> RunTrace:
    config = SimulationConfig(pattern, SchedulerSpec(kind), Fraction(horizon))
    return run_simulation(config)


def test_lis_bounds_hold_against_exact_opt(lis_pattern: AdversarialPattern) -> None:
    trace = _run(lis_pattern, "lis", 5)
    tasks, cost = verify_lis_bounds(trace, opt_profile(lis_pattern), lis_pattern.params)
    assert (tasks.name, cost.name) == ("lis-tasks", "lis-cost")
    assert tasks.holds and cost.holds
    assert tasks.worst_slack >= 3
    assert cost.worst_slack >= 7
    assert tasks.opt_source == "opt-brute-force"


def test_lis_bounds_accept_an_offline_trace(lis_pattern: AdversarialPattern) -> None:
    trace = _run(lis_pattern, "lis", 5)
    schedule = [ScheduleEntry(1, 2, Fraction(0))]
    offline = run_offline_reference(lis_pattern, schedule, horizon=Fraction(5))
    reports = verify_lis_bounds(trace, offline, lis_pattern.params)
    assert all(report.holds for report in reports)
    assert reports[0].opt_source == "offline"


def test_violation_reports_first_failing_instant(
    lis_pattern: AdversarialPattern,
) -> None:
    fake = RunTrace(
        lis_pattern.params,
        codec.pattern_fingerprint(lis_pattern),
        "fake",
        Fraction(5),
        snapshots=[PendingSnapshot(Fraction(0), 20, 20, ((1, 20),))],
    )
    tasks, _ = verify_lis_bounds(fake, opt_profile(lis_pattern), lis_pattern.params)
    assert not tasks.holds
    assert tasks.violating_time == 0
    assert tasks.worst_slack == -15
    assert tasks.to_dict() == {
        "bound": "lis-tasks",
        "holds": False,
        "worst_slack": "-15/1",
        "violating_time": "0/1",
        "opt_source": "opt-brute-force",
    }


def test_lis_preconditions(
    crash_pattern: AdversarialPattern, lis_pattern: AdversarialPattern
) -> None:
    trace = _run(lis_pattern, "lis", 5)
    slow = SystemParams(n=1, speedup=1, lmin=1, lmax=2, beta=2)
    with pytest.raises(PreconditionError):
        verify_lis_bounds(trace, opt_profile(lis_pattern), slow)
    low_beta = SystemParams(n=1, speedup=2, lmin=1, lmax=2, beta=1)
    with pytest.raises(PreconditionError):
        verify_lis_bounds(trace, opt_profile(lis_pattern), low_beta)
    with pytest.raises(PreconditionError):
        verify_lis_bounds(trace, opt_profile(crash_pattern), lis_pattern.params)


def test_burst_bounds_hold(two_cost_pattern: AdversarialPattern) -> None:
    trace = _run(two_cost_pattern, "burst", 12)
    reports = verify_burst_bounds(
        trace, opt_profile(two_cost_pattern), two_cost_pattern.params
    )
    assert [report.name for report in reports] == [
        "burst-tasks",
        "burst-cost",
        "burst-lmax-backlog",
    ]
    assert all(report.holds for report in reports)


def test_burst_preconditions(two_cost_pattern: AdversarialPattern) -> None:
    trace = _run(two_cost_pattern, "burst", 12)
    profile = opt_profile(two_cost_pattern)
    too_fast = SystemParams(n=1, speedup=3, lmin=1, lmax=3, beta=3)
    with pytest.raises(PreconditionError):
        verify_burst_bounds(trace, profile, too_fast)

    three_costs = AdversarialPattern(
        two_cost_pattern.params,
        (AdversaryEvent.inject(0, 1, 2), AdversaryEvent.inject(0, 2, 1)),
    )
    stray = _run(three_costs, "lis", 4)
    with pytest.raises(PreconditionError):
        verify_burst_bounds(stray, opt_profile(three_costs), three_costs.params)


def test_laf_additive_term() -> None:
    params = SystemParams(n=1, speedup="7/2", lmin=1, lmax=3, beta=3)
    assert laf_additive(params, 2) == Fraction(312, 7)


def test_laf_bound_holds(two_cost_pattern: AdversarialPattern) -> None:
    pattern = _with_params(
        two_cost_pattern, SystemParams(n=1, speedup="7/2", lmin=1, lmax=3, beta=3)
    )
    trace = _run(pattern, "laf", 12)
    cost, tasks = verify_laf_bound(trace, opt_profile(pattern), pattern.params, 2)
    assert (cost.name, tasks.name) == ("laf-cost", "laf-tasks")
    assert cost.holds and tasks.holds


def test_laf_preconditions(two_cost_pattern: AdversarialPattern) -> None:
    pattern = _with_params(
        two_cost_pattern, SystemParams(n=1, speedup="7/2", lmin=1, lmax=3, beta=3)
    )
    trace = _run(pattern, "laf", 12)
    profile = opt_profile(pattern)
    with pytest.raises(PreconditionError):
        verify_laf_bound(trace, profile, pattern.params, 1)
    with pytest.raises(PreconditionError):
        verify_laf_bound(trace, profile, pattern.params, 0)
    slow = SystemParams(n=1, speedup=3, lmin=1, lmax=3, beta=3)
    with pytest.raises(PreconditionError):
        verify_laf_bound(trace, profile, slow, 2)


def _duplicate_trace(pending: int) -> RunTrace:
    params = SystemParams(n=2, speedup=1, lmin=1, lmax=2)
    return RunTrace(
        params,
        "fp",
        "lis",
        Fraction(4),
        snapshots=[
            PendingSnapshot(Fraction(0), pending, pending, ((1, pending),)),
            PendingSnapshot(Fraction(1), 0, 0),
        ],
        executions=[
            Execution(1, 7, 1, Fraction(0), Fraction(1), True),
            Execution(2, 7, 1, Fraction(0), Fraction(1), True),
            Execution(2, 8, 1, Fraction(1), Fraction(2), False),
        ],
    )


def test_redundancy_audit_flags_duplicates_under_a_large_class() -> None:
    incidents = redundancy_audit(_duplicate_trace(5), 3)
    assert len(incidents) == 1
    assert incidents[0].to_dict() == {
        "task": 7,
        "procs": [1, 2],
        "start": "0/1",
        "end": "1/1",
    }
    assert redundancy_audit(_duplicate_trace(5), 3, grouping="cost")


def test_redundancy_audit_ignores_small_classes() -> None:
    assert redundancy_audit(_duplicate_trace(2), 3) == []


def test_redundancy_audit_rejects_malformed_executions() -> None:
    trace = _duplicate_trace(5)
    trace.executions.append(Execution(1, 9, 1, Fraction(3), Fraction(5), True))
    with pytest.raises(ScheduleError):
        redundancy_audit(trace, 1)
    with pytest.raises(PreconditionError):
        redundancy_audit(_duplicate_trace(5), -1)


def test_single_processor_runs_have_no_duplicates(
    lis_pattern: AdversarialPattern,
) -> None:
    trace = _run(lis_pattern, "lis", 5)
    assert redundancy_audit(trace, 0) == []


def test_audit_threshold() -> None:
    params = SystemParams(n=2, speedup=2, lmin=1, lmax=2, beta=2)
    assert audit_threshold("lis", params) == (8, "pending")
    assert audit_threshold("laf", params) == (8, "cost")
    assert audit_threshold("burst", params) == (4, "cost")
    with pytest.raises(PreconditionError):
        audit_threshold("lcf", params)


def test_bound_report_defaults() -> None:
    report = BoundReport("x", True, Fraction(1))
    assert report.to_dict()["violating_time"] is None

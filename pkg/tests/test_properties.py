"""Seeded property checks over randomly generated patterns."""
from __future__ import annotations

import dataclasses
import random
from collections import defaultdict
from fractions import Fraction
from pathlib import Path

import pytest

from faultsched import cli
from faultsched.analysis import (
    BoundReport,
    verify_burst_bounds,
    verify_laf_bound,
    verify_lis_bounds,
)
from faultsched.core import (
    AdversarialPattern,
    AdversaryEvent,
    EventKind,
    RunTrace,
    TaskSpec,
    validate_pattern,
)
from faultsched.engine import (
    SimulationConfig,
    life_periods,
    run_offline_reference,
    run_simulation,
)
from faultsched.harness import generate_pattern, trial_rng
from faultsched.repository import RepositoryState, apply_instant
from faultsched.schedulers import (
    BurstMemory,
    LafMemory,
    SchedulerSpec,
    burst_select,
    gamma,
    laf_select,
    lis_order,
)

RUNS = [
    ("lis", "lis"),
    ("lis", "lcf"),
    ("lis", "scf"),
    ("burst", "burst"),
    ("laf", "laf"),
]


def _random_run(
    pattern_kind: str, scheduler: str, seed: int, trial: int
) -> tuple[AdversarialPattern, RunTrace]:
    n = 1 if pattern_kind == "laf" else 1 + trial % 2
    pattern, horizon = generate_pattern(
        trial_rng(seed, trial), pattern_kind, n, 6, max_pairs=3
    )
    beta = pattern.params.beta if scheduler in ("lis", "laf") else None
    trace = run_simulation(
        SimulationConfig(pattern, SchedulerSpec(scheduler, beta), horizon)
    )
    return pattern, trace


@pytest.mark.parametrize(("pattern_kind", "scheduler"), RUNS)
def test_replaying_reports_reproduces_pending(
    pattern_kind: str, scheduler: str
) -> None:
    for trial in range(15):
        pattern, trace = _random_run(pattern_kind, scheduler, 101, trial)
        informs: dict[Fraction, list[tuple[int, int]]] = defaultdict(list)
        for report in trace.reports:
            informs[report.time].append((report.proc, report.task_id))
        injects: dict[Fraction, list[TaskSpec]] = defaultdict(list)
        for task in pattern.tasks:
            injects[task.arrival].append(task)

        state = RepositoryState()
        for t in sorted(set(informs) | set(injects)):
            state = apply_instant(state, t, informs[t], injects[t], []).state
            expected = trace.pending_at(t)
            replayed = state.snapshot(t)
            assert (replayed.tasks, replayed.cost) == (expected.tasks, expected.cost)
            assert replayed.by_cost == expected.by_cost


def test_blocked_getters_are_all_released_by_one_inject() -> None:
    rng = random.Random(5)
    for _ in range(50):
        getters = rng.sample(range(1, 7), rng.randint(1, 6))
        waiting = apply_instant(RepositoryState(), Fraction(0), [], [], getters)
        assert waiting.delivered == {}
        assert waiting.state.blocked == frozenset(getters)

        crashed = rng.choice(getters)
        state = waiting.state.without_getter(crashed)
        at = Fraction(rng.randint(1, 9), rng.randint(1, 4))
        size = rng.randint(1, 4)
        batch = [TaskSpec(i, at, rng.randint(1, 5)) for i in range(1, size + 1)]
        released = apply_instant(state, at, [], batch, [])
        assert set(released.delivered) == set(getters) - {crashed}
        assert set(released.delivered.values()) == {tuple(batch)}
        assert released.state.blocked == frozenset()


@pytest.mark.parametrize(("pattern_kind", "scheduler"), RUNS)
def test_alive_processors_never_idle_with_pending_work(
    pattern_kind: str, scheduler: str
) -> None:
    for trial in range(15):
        pattern, trace = _random_run(pattern_kind, scheduler, 202, trial)
        periods = life_periods(pattern)
        for t in trace.instants():
            if t >= trace.horizon or trace.pending_at(t).tasks == 0:
                continue
            for proc, spans in periods.items():
                alive = any(
                    start <= t and (end is None or t < end) for start, end in spans
                )
                if not alive:
                    continue
                busy = any(
                    e.proc == proc and e.start <= t < e.end for e in trace.executions
                )
                assert busy, (trial, proc, t)


@pytest.mark.parametrize(("pattern_kind", "scheduler"), RUNS)
def test_executions_follow_speedup_and_are_atomic(
    pattern_kind: str, scheduler: str
) -> None:
    for trial in range(15):
        pattern, trace = _random_run(pattern_kind, scheduler, 303, trial)
        speed = pattern.params.speedup
        crashes = [
            (event.proc, event.time)
            for event in pattern.events
            if event.kind is EventKind.CRASH
        ]
        for execution in trace.executions:
            length = execution.end - execution.start
            if execution.completed:
                assert length == Fraction(execution.cost) / speed
                assert not [
                    at
                    for proc, at in crashes
                    if proc == execution.proc and execution.start <= at < execution.end
                ]
            else:
                assert length < Fraction(execution.cost) / speed
        completed = [e for e in trace.executions if e.completed]
        assert len(completed) == len(trace.reports)


def _mutations(pattern: AdversarialPattern) -> list[AdversaryEvent]:
    params = pattern.params
    after = pattern.last_event_time + 1
    first = pattern.tasks[0]
    fresh = max(task.id for task in pattern.tasks) + 1
    return [
        AdversaryEvent.inject(after, first.id, first.cost),
        AdversaryEvent.inject(after, fresh, params.lmax + 1),
        AdversaryEvent.restart(after, 1),
        AdversaryEvent.crash(after, params.n + 1),
    ]


@pytest.mark.parametrize("kind", ["lis", "burst", "laf"])
def test_validation_rejects_mutated_patterns(kind: str) -> None:
    for trial in range(20):
        n = 1 if kind == "laf" else 1 + trial % 2
        pattern, _ = generate_pattern(trial_rng(404, trial), kind, n, 6)
        assert validate_pattern(pattern) == []
        for event in _mutations(pattern):
            assert validate_pattern(pattern.extended([event])), (trial, event)

        after = pattern.last_event_time + 1
        twice = [AdversaryEvent.crash(after, 1), AdversaryEvent.crash(after, 1)]
        assert validate_pattern(pattern.extended(twice))
        if pattern.last_event_time >= 1:
            late = pattern.last_event_time - 1
            fresh = max(task.id for task in pattern.tasks) + 1
            early = AdversaryEvent.inject(late, fresh, pattern.params.lmin)
            assert validate_pattern(pattern.extended([early]))


def test_burst_caps_consecutive_short_tasks_under_long_backlog() -> None:
    for trial in range(20):
        rng = trial_rng(505, trial)
        n = 1 + trial % 2
        pattern, _ = generate_pattern(rng, "burst", n, 1)
        params = pattern.params
        g = gamma(params.lmin, params.lmax, params.speedup)
        short: list[TaskSpec] = []
        long: list[TaskSpec] = []
        memory = BurstMemory()
        run = 0
        next_id = 1
        for step in range(300):
            for _ in range(rng.randint(0, 3)):
                cost = rng.choice([params.lmin, params.lmax, params.lmax])
                task = TaskSpec(next_id, Fraction(step), cost)
                (short if cost == params.lmin else long).append(task)
                next_id += 1
            if not short and not long:
                continue
            backlog = len(long) >= n * n
            task, memory = burst_select(
                short, long, rng.randint(1, n), params, memory, gamma_value=g
            )
            if task.cost == params.lmin:
                run += 1
                short.remove(task)
                if backlog:
                    assert run <= g, (trial, step)
            else:
                run = 0
                long.remove(task)


def test_laf_spends_only_what_it_has_earned() -> None:
    for trial in range(200):
        rng = trial_rng(606, trial)
        params = generate_pattern(rng, "laf", 1, 1)[0].params
        extra = rng.randint(params.lmin, params.lmax)
        costs = sorted({params.lmin, params.lmax, extra})
        lists: dict[int, list[TaskSpec]] = {}
        next_id = 1
        for cost in costs:
            size = rng.randint(0, 2 * params.beta)
            lists[cost] = [
                TaskSpec(next_id + i, Fraction(rng.randint(0, 9)), cost)
                for i in range(size)
            ]
            lists[cost] = lis_order(lists[cost])
            next_id += size
        if not any(lists.values()):
            continue
        total = rng.randint(0, 3 * params.lmax)
        chosen = laf_select(lists, LafMemory(total), params, 1)
        qualified = [
            cost
            for cost, tasks in lists.items()
            if cost <= total and len(tasks) >= params.beta
        ]
        if qualified:
            assert chosen.cost == max(qualified) <= total
        else:
            everything = [task for tasks in lists.values() for task in tasks]
            assert chosen == lis_order(everything)[0]


def _verify(kind: str, alg: RunTrace, opt: RunTrace) -> tuple[BoundReport, ...]:
    params = alg.params
    if kind == "lis":
        return verify_lis_bounds(alg, opt, params)
    if kind == "burst":
        return verify_burst_bounds(alg, opt, params)
    return verify_laf_bound(alg, opt, params, 3)


@pytest.mark.parametrize("kind", ["lis", "burst", "laf"])
def test_verifiers_catch_inflated_backlogs(kind: str) -> None:
    for trial in range(10):
        pattern, trace = _random_run(kind, kind, 707, trial)
        everything_pending = run_offline_reference(
            pattern, [], horizon=trace.horizon
        )
        assert all(r.holds for r in _verify(kind, trace, everything_pending))

        rng = trial_rng(708, trial)
        index = rng.randrange(len(trace.snapshots))
        original = trace.snapshots[index]
        inflated = dataclasses.replace(
            original,
            tasks=original.tasks + 10**6,
            cost=original.cost + 10**6 * pattern.params.lmax,
        )
        snapshots = list(trace.snapshots)
        snapshots[index] = inflated
        broken = dataclasses.replace(trace, snapshots=snapshots)
        reports = {r.name: r for r in _verify(kind, broken, everything_pending)}
        for name in (f"{kind}-tasks", f"{kind}-cost"):
            assert not reports[name].holds, (trial, name)
            assert reports[name].violating_time == original.time


def test_same_seed_gives_identical_cli_output(
    tmp_path: Path, pattern_file: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    outputs: list[tuple[str, bytes, bytes]] = []
    for _ in range(2):
        report = tmp_path / "fuzz.jsonl"
        trace = tmp_path / "trace.csv"
        argv = ["fuzz", "--scheduler", "lis", "--n", "2", "--tasks", "5"]
        argv += ["--trials", "4", "--seed", "77", "--out", str(report)]
        argv += ["--out-dir", str(tmp_path)]
        cli.main(argv)
        simulate = ["simulate", "--pattern", str(pattern_file), "--scheduler"]
        simulate += ["lcf", "--horizon", "6", "--out", str(trace)]
        assert cli.main(simulate) == 0
        printed = capsys.readouterr().out
        outputs.append((printed, report.read_bytes(), trace.read_bytes()))
    assert outputs[0] == outputs[1]
    assert outputs[0][1]

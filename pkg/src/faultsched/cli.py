"""Command line interface for faultsched."""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from collections.abc import Sequence
from fractions import Fraction
from pathlib import Path
from typing import Any

from . import codec, utils
from .analysis import (
    BoundReport,
    OptSource,
    audit_threshold,
    redundancy_audit,
    verify_burst_bounds,
    verify_laf_bound,
    verify_lis_bounds,
)
from .cache import OptCache, result_to_dict
from .core import (
    AdversarialPattern,
    BudgetExceededError,
    FaultSchedError,
    PreconditionError,
    parse_time,
)
from .engine import SimulationConfig, run_offline_reference, run_simulation
from .harness import FUZZ_KINDS, FuzzConfig, FuzzHooks, run_fuzz
from .offline import (
    PHASE_LOG_HEADER,
    OptLimits,
    dec_c_sched,
    dec_t_sched,
    lower_bound_adversary,
    opt_brute_force,
    opt_profile,
    phase_log_rows,
    reduce_partition,
    solve_partition_via_scheduling,
)
from .schedulers import (
    SCHEDULER_KINDS,
    SchedulerSpec,
    competitive_threshold,
    gamma,
    non_competitive_check,
    recommend_scheduler,
    sufficient_speedup,
)

EXIT_OK = 0
EXIT_FALSE = 1
EXIT_USAGE = 2
EXIT_BUDGET = 3
VERIFY_KINDS = ("lis", "burst", "laf")
LOGGER = utils.get_logger()


def rational(value: str) -> Fraction:
    """argparse type accepting ``num/den`` or integer literals."""
    return parse_time(value)


def positive_int(value: str) -> int:
    number = int(value)
    if number < 1:
        raise ValueError(value)
    return number


def non_negative_int(value: str) -> int:
    number = int(value)
    if number < 0:
        raise ValueError(value)
    return number


def build_parser() -> argparse.ArgumentParser:
    """Return the CLI argument parser."""
    parser = argparse.ArgumentParser(
        prog="faultsched",
        description="Crash/restart scheduling simulator and bound verifier",
    )
    parser.add_argument(
        "--log-level",
        default="WARNING",
        help="Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser("simulate", help="Run an online scheduler")
    simulate.add_argument("--pattern", type=Path, help="Pattern JSON file")
    simulate.add_argument(
        "--config", type=Path, help="Simulation config JSON (flags override it)"
    )
    simulate.add_argument("--scheduler", choices=SCHEDULER_KINDS)
    simulate.add_argument("--beta", type=positive_int)
    simulate.add_argument("--horizon", type=rational)
    simulate.add_argument("--record-every", type=rational)
    simulate.add_argument("--out", type=Path, required=True, help="Trace CSV path")

    adversary = commands.add_parser(
        "adversary", help="Drive the lower-bound adversary against a scheduler"
    )
    adversary.add_argument("--scheduler", choices=SCHEDULER_KINDS, required=True)
    adversary.add_argument("--beta", type=positive_int)
    adversary.add_argument("--lmin", type=positive_int, required=True)
    adversary.add_argument("--lmax", type=positive_int, required=True)
    adversary.add_argument("--speedup", type=rational, required=True)
    adversary.add_argument("--phases", type=non_negative_int, required=True)
    adversary.add_argument("--out-dir", type=Path, required=True)

    opt = commands.add_parser("opt", help="Exact offline optimum at a checkpoint")
    opt.add_argument("--pattern", type=Path, required=True)
    opt.add_argument("--checkpoint", type=rational, required=True)
    opt.add_argument("--omega", type=non_negative_int)
    opt.add_argument("--measure", choices=("cost", "tasks"), default="cost")
    opt.add_argument("--witness", type=Path, help="Write the witness schedules")
    opt.add_argument("--cache", action="store_true", help="Reuse cached results")
    opt.add_argument(
        "--cache-dir", type=Path, help="Cache directory (falls back to env)"
    )

    partition = commands.add_parser(
        "reduce-partition", help="Build the scheduling instance of a Partition input"
    )
    partition.add_argument(
        "--values", required=True, help="Comma-separated positive integers"
    )
    partition.add_argument("--out", type=Path, required=True, help="Pattern JSON")
    partition.add_argument(
        "--solve", action="store_true", help="Decide the instance and exit 0/1"
    )

    verify = commands.add_parser("verify", help="Check a scheduler's bounds")
    verify.add_argument("--pattern", type=Path, required=True)
    verify.add_argument("--scheduler", choices=VERIFY_KINDS, required=True)
    verify.add_argument("--beta", type=positive_int)
    verify.add_argument("--horizon", type=rational, required=True)
    verify.add_argument(
        "--schedule", type=Path, help="Explicit offline schedule used as OPT"
    )
    verify.add_argument("--k", type=positive_int, help="Distinct cost count (laf)")
    verify.add_argument("--audit", action="store_true", help="Run redundancy audit")
    verify.add_argument("--out", type=Path, help="Write the reports as JSON")

    fuzz = commands.add_parser("fuzz", help="Seeded random bound checks")
    fuzz.add_argument("--scheduler", choices=FUZZ_KINDS, required=True)
    fuzz.add_argument("--n", type=positive_int, default=1)
    fuzz.add_argument("--tasks", type=non_negative_int, default=6)
    fuzz.add_argument("--trials", type=non_negative_int, default=100)
    fuzz.add_argument("--seed", type=int, default=0)
    fuzz.add_argument("--max-pairs", type=non_negative_int, default=4)
    fuzz.add_argument("--no-audit", action="store_true")
    fuzz.add_argument("--out", type=Path, help="Per-trial JSON lines report")
    fuzz.add_argument(
        "--out-dir", type=Path, default=Path("."), help="Where failures are dumped"
    )

    thresholds = commands.add_parser(
        "thresholds", help="Speedup thresholds for a pair of costs"
    )
    thresholds.add_argument("--lmin", type=positive_int, required=True)
    thresholds.add_argument("--lmax", type=positive_int, required=True)
    thresholds.add_argument("--speedup", type=rational)
    thresholds.add_argument("--k", type=positive_int, default=2)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """CLI entry point returning an exit code."""
    try:
        return _run_cli(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except BudgetExceededError as exc:
        sys.stderr.write(f"Error: {exc}\n")
        return EXIT_BUDGET
    except (FaultSchedError, ValueError, OSError) as exc:
        sys.stderr.write(f"Error: {exc}\n")
        return EXIT_USAGE


def _run_cli(argv: Sequence[str] | None) -> int:
    parser = build_parser()
    args = parser.parse_args(list(argv) if argv is not None else None)

    log_level = _resolve_log_level(args.log_level)
    utils.configure_logging(level=log_level)
    LOGGER.setLevel(log_level)

    handlers = {
        "simulate": _cmd_simulate,
        "adversary": _cmd_adversary,
        "opt": _cmd_opt,
        "reduce-partition": _cmd_reduce_partition,
        "verify": _cmd_verify,
        "fuzz": _cmd_fuzz,
        "thresholds": _cmd_thresholds,
    }
    code = handlers[args.command](args)
    LOGGER.info("Command finished", extra={"command": args.command, "exit": code})
    return code


def _emit(data: Any) -> None:
    sys.stdout.write(utils.json_dump(data))


def _cmd_simulate(args: argparse.Namespace) -> int:
    kind: str | None = args.scheduler
    beta: int | None = args.beta
    horizon: Fraction | None = args.horizon
    record_every: Fraction | None = args.record_every
    if args.config is not None:
        config = codec.load_config(args.config)
        pattern = config.pattern
        kind = kind or config.scheduler_kind
        beta = beta if beta is not None else config.beta
        horizon = horizon if horizon is not None else config.horizon
        record_every = record_every if record_every is not None else config.record_every
    elif args.pattern is not None:
        pattern = codec.load_pattern(args.pattern)
    else:
        raise PreconditionError("simulate needs --pattern or --config")
    if kind is None or horizon is None:
        raise PreconditionError("simulate needs a scheduler and a horizon")

    trace = run_simulation(
        SimulationConfig(pattern, SchedulerSpec(kind, beta), horizon, record_every)
    )
    codec.write_trace_csv(args.out, trace)
    final = trace.final
    _emit(
        {
            "scheduler": trace.source,
            "horizon": utils.format_rational(horizon),
            "pending_tasks": final.tasks,
            "pending_cost": final.cost,
            "max_pending_tasks": trace.max_pending_tasks,
            "max_pending_cost": trace.max_pending_cost,
        }
    )
    return EXIT_OK


def _cmd_adversary(args: argparse.Namespace) -> int:
    if not non_competitive_check(args.lmin, args.lmax, args.speedup):
        threshold = competitive_threshold(args.lmin, args.lmax)
        raise PreconditionError(
            "parameters are in the competitive regime: every s >= "
            f"{utils.format_rational(threshold)} admits a competitive scheduler "
            f"(lmax/lmin = {utils.format_rational(Fraction(args.lmax, args.lmin))})"
        )
    result = lower_bound_adversary(
        SchedulerSpec(args.scheduler, args.beta),
        args.lmin,
        args.lmax,
        args.speedup,
        args.phases,
    )
    out_dir: Path = utils.ensure_directory(args.out_dir)
    codec.write_trace_csv(out_dir / "alg_trace.csv", result.alg_trace)
    codec.write_trace_csv(out_dir / "off_trace.csv", result.off_trace)
    codec.write_csv(out_dir / "phase_log.csv", PHASE_LOG_HEADER, phase_log_rows(result))
    codec.dump_pattern(out_dir / "pattern.json", result.pattern)
    _emit(
        {
            "scheduler": args.scheduler,
            "gamma": result.gamma,
            "phases": len(result.phases),
            "divergence": result.divergence(),
        }
    )
    return EXIT_OK


def _cmd_opt(args: argparse.Namespace) -> int:
    pattern = codec.load_pattern(args.pattern)
    checkpoint: Fraction = args.checkpoint
    if args.omega is not None and args.witness is None and not args.cache:
        decide = dec_t_sched if args.measure == "tasks" else dec_c_sched
        answer = decide(pattern, checkpoint, args.omega)
        sys.stdout.write("TRUE\n" if answer else "FALSE\n")
        return EXIT_OK if answer else EXIT_FALSE

    if args.cache:
        result = OptCache(args.cache_dir).opt(pattern, checkpoint)
    else:
        result = opt_brute_force(pattern, checkpoint)
    if args.witness is not None:
        utils.atomic_write_text(args.witness, utils.json_dump(result_to_dict(result)))
    if args.omega is not None:
        value = (
            result.min_pending_tasks
            if args.measure == "tasks"
            else result.min_pending_cost
        )
        answer = value <= args.omega
        sys.stdout.write("TRUE\n" if answer else "FALSE\n")
        return EXIT_OK if answer else EXIT_FALSE
    _emit(
        {
            "checkpoint": utils.format_rational(checkpoint),
            "min_pending_cost": result.min_pending_cost,
            "min_pending_tasks": result.min_pending_tasks,
            "witness": str(args.witness) if args.witness is not None else None,
        }
    )
    return EXIT_OK


def _parse_values(raw: str) -> list[int]:
    try:
        return [int(part) for part in raw.split(",") if part.strip()]
    except ValueError as exc:
        raise PreconditionError(f"--values must be integers, got {raw!r}") from exc


def _cmd_reduce_partition(args: argparse.Namespace) -> int:
    values = _parse_values(args.values)
    instance = reduce_partition(values)
    out: Path = args.out
    codec.dump_pattern(out, instance.pattern)
    utils.atomic_write_text(
        out.with_suffix(".meta.json"), utils.json_dump(instance.sidecar())
    )
    if args.solve:
        answer = solve_partition_via_scheduling(values)
        sys.stdout.write("TRUE\n" if answer else "FALSE\n")
        return EXIT_OK if answer else EXIT_FALSE
    return EXIT_OK


def _verify_reports(
    kind: str,
    pattern: AdversarialPattern,
    beta: int,
    horizon: Fraction,
    schedule: Path | None,
    k: int | None,
) -> tuple[list[BoundReport], Any]:
    params = dataclasses.replace(pattern.params, beta=beta)
    trace = run_simulation(
        SimulationConfig(pattern, SchedulerSpec(kind, beta), horizon)
    )
    opt: OptSource
    if schedule is not None:
        opt = run_offline_reference(
            pattern, codec.load_schedule(schedule), horizon=horizon, source="schedule"
        )
    else:
        opt = opt_profile(pattern, OptLimits())
    if kind == "lis":
        reports = list(verify_lis_bounds(trace, opt, params))
    elif kind == "burst":
        reports = list(verify_burst_bounds(trace, opt, params))
    else:
        distinct = k if k is not None else max(len(pattern.distinct_costs), 1)
        reports = list(verify_laf_bound(trace, opt, params, distinct))
    return reports, trace


def _cmd_verify(args: argparse.Namespace) -> int:
    pattern = codec.load_pattern(args.pattern)
    kind: str = args.scheduler
    beta: int = args.beta if args.beta is not None else pattern.params.beta
    reports, trace = _verify_reports(
        kind, pattern, beta, args.horizon, args.schedule, args.k
    )
    payload: dict[str, Any] = {"reports": [report.to_dict() for report in reports]}
    failed = not all(report.holds for report in reports)
    if args.audit:
        params = dataclasses.replace(pattern.params, beta=beta)
        threshold, grouping = audit_threshold(kind, params)
        incidents = redundancy_audit(trace, threshold, grouping=grouping)
        payload["incidents"] = [incident.to_dict() for incident in incidents]
        failed = failed or bool(incidents)
    if args.out is not None:
        utils.atomic_write_text(args.out, utils.json_dump(payload))
    _emit(payload)
    return EXIT_FALSE if failed else EXIT_OK


def _cmd_fuzz(args: argparse.Namespace) -> int:
    config = FuzzConfig(
        scheduler=args.scheduler,
        n=args.n,
        tasks=args.tasks,
        trials=args.trials,
        seed=args.seed,
        max_pairs=args.max_pairs,
        audit=not args.no_audit,
        out_dir=args.out_dir,
        report_path=args.out,
    )
    hooks = FuzzHooks(
        on_progress=lambda done, total: LOGGER.debug(
            "Fuzz progress", extra={"done": done, "total": total}
        ),
        on_log=lambda message: LOGGER.info(message),
    )
    result = run_fuzz(config, hooks)
    failed = result.failed
    _emit(
        {
            "scheduler": args.scheduler,
            "seed": args.seed,
            "trials": len(result.trials),
            "failed_trial": failed.trial if failed is not None else None,
            "failure": str(result.failure_path) if result.failure_path else None,
        }
    )
    return EXIT_FALSE if failed is not None else EXIT_OK


def _cmd_thresholds(args: argparse.Namespace) -> int:
    lmin: int = args.lmin
    lmax: int = args.lmax
    speed: Fraction | None = args.speedup
    if speed is not None and speed <= 1 and lmin < lmax:
        raise PreconditionError("--speedup must exceed 1 when lmin < lmax")
    sufficient = sufficient_speedup(lmin, lmax)
    recommendation = recommend_scheduler(lmin, lmax, args.k)
    payload: dict[str, Any] = {
        "lmin": lmin,
        "lmax": lmax,
        "rho": utils.format_rational(Fraction(lmax, lmin)),
        "competitive_threshold": utils.format_rational(
            competitive_threshold(lmin, lmax)
        ),
        "sufficient_speedup": {
            "value": sufficient.value,
            "upper": utils.format_rational(sufficient.upper),
            "branch": sufficient.branch,
        },
        "recommendation": {
            "scheduler": recommendation.kind,
            "speedup": utils.format_rational(recommendation.speedup),
        },
    }
    if speed is not None:
        g = gamma(lmin, lmax, speed)
        payload["speedup"] = utils.format_rational(speed)
        payload["gamma"] = g
        payload["below_rho"] = speed < Fraction(lmax, lmin)
        payload["below_gamma_bound"] = speed < Fraction(g * lmin + lmax, lmax)
        payload["non_competitive"] = non_competitive_check(lmin, lmax, speed)
    _emit(payload)
    return EXIT_OK


def _resolve_log_level(value: str) -> int:
    candidate = value.upper()
    level = getattr(logging, candidate, None)
    if isinstance(level, int):
        return level
    LOGGER.warning("Unknown log level '%s', defaulting to INFO", value)
    return logging.INFO

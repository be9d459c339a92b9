"""File formats: pattern/config/schedule JSON and trace CSV."""
from __future__ import annotations

import csv
import hashlib
import io
import json
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any

from . import utils
from .core import (
    AdversarialPattern,
    AdversaryEvent,
    EventKind,
    PatternError,
    RunTrace,
    ScheduleEntry,
    SystemParams,
    format_time,
    parse_time,
)

TRACE_HEADER = ("time", "event", "proc", "task", "pending_tasks", "pending_cost")
LOGGER = utils.get_logger()


def params_to_dict(params: SystemParams) -> dict[str, Any]:
    return {
        "n": params.n,
        "speedup": format_time(params.speedup),
        "lmin": params.lmin,
        "lmax": params.lmax,
        "beta": params.beta,
    }


def params_from_dict(data: Any) -> SystemParams:
    if not isinstance(data, dict):
        raise PatternError("'params' must be an object")
    try:
        return SystemParams(
            n=_require_int(data, "n"),
            speedup=parse_time(data.get("speedup", 1)),
            lmin=_require_int(data, "lmin"),
            lmax=_require_int(data, "lmax"),
            beta=_require_int(data, "beta", default=1),
        )
    except ValueError as exc:
        raise PatternError(str(exc)) from exc


def event_to_dict(event: AdversaryEvent) -> dict[str, Any]:
    record: dict[str, Any] = {"t": format_time(event.time), "kind": event.kind.value}
    if event.task is not None:
        record["task"] = {"id": event.task.id, "cost": event.task.cost}
    else:
        record["proc"] = event.proc
    return record


def event_from_dict(data: Any) -> AdversaryEvent:
    if not isinstance(data, dict):
        raise PatternError("events must be objects")
    time = parse_time(data.get("t", ""))
    kind = data.get("kind")
    if kind == EventKind.INJECT.value:
        task = data.get("task")
        if not isinstance(task, dict):
            raise PatternError("inject event requires a 'task' object")
        return AdversaryEvent.inject(
            time, _require_int(task, "id"), _require_int(task, "cost")
        )
    if kind == EventKind.CRASH.value:
        return AdversaryEvent.crash(time, _require_int(data, "proc"))
    if kind == EventKind.RESTART.value:
        return AdversaryEvent.restart(time, _require_int(data, "proc"))
    raise PatternError(f"Unknown event kind: {kind!r}")


def pattern_to_dict(pattern: AdversarialPattern) -> dict[str, Any]:
    return {
        "params": params_to_dict(pattern.params),
        "events": [event_to_dict(event) for event in pattern.events],
    }


def pattern_from_dict(data: Any) -> AdversarialPattern:
    if not isinstance(data, dict):
        raise PatternError("pattern must be a JSON object")
    events = data.get("events", [])
    if not isinstance(events, list):
        raise PatternError("'events' must be a list")
    return AdversarialPattern(
        params_from_dict(data.get("params")),
        tuple(event_from_dict(item) for item in events),
    )


def pattern_fingerprint(pattern: AdversarialPattern) -> str:
    """Return the sha256 of the canonical pattern JSON."""
    canonical = utils.canonical_json(pattern_to_dict(pattern))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def load_pattern(path: Path) -> AdversarialPattern:
    pattern = pattern_from_dict(_read_json(path))
    LOGGER.debug(
        "Loaded pattern", extra={"path": str(path), "events": len(pattern.events)}
    )
    return pattern


def dump_pattern(path: Path, pattern: AdversarialPattern) -> None:
    utils.atomic_write_text(path, utils.json_dump(pattern_to_dict(pattern)))


@dataclass(frozen=True)
class ConfigFile:
    """A simulation config file: pattern fields plus scheduler and horizon."""

    pattern: AdversarialPattern
    scheduler_kind: str | None
    beta: int | None
    horizon: Fraction | None
    record_every: Fraction | None


def load_config(path: Path) -> ConfigFile:
    data = _read_json(path)
    if not isinstance(data, dict):
        raise PatternError("config must be a JSON object")
    scheduler = data.get("scheduler", {})
    if not isinstance(scheduler, dict):
        raise PatternError("'scheduler' must be an object")
    kind = scheduler.get("kind")
    beta = scheduler.get("beta")
    if beta is not None and (not isinstance(beta, int) or isinstance(beta, bool)):
        raise PatternError("'scheduler.beta' must be an integer")
    horizon = data.get("horizon")
    record_every = data.get("record_every")
    return ConfigFile(
        pattern=pattern_from_dict(data),
        scheduler_kind=str(kind) if kind is not None else None,
        beta=beta,
        horizon=parse_time(horizon) if horizon is not None else None,
        record_every=parse_time(record_every) if record_every is not None else None,
    )


def schedule_to_list(schedule: Sequence[ScheduleEntry]) -> list[dict[str, Any]]:
    return [
        {"proc": entry.proc, "task": entry.task_id, "start": format_time(entry.start)}
        for entry in schedule
    ]


def load_schedule(path: Path) -> list[ScheduleEntry]:
    data = _read_json(path)
    if isinstance(data, dict):
        data = data.get("schedule")
    return schedule_from_list(data)


def schedule_from_list(data: Any) -> list[ScheduleEntry]:
    if not isinstance(data, list):
        raise PatternError("schedule must be a list of entries")
    entries: list[ScheduleEntry] = []
    for item in data:
        if not isinstance(item, dict):
            raise PatternError("schedule entries must be objects")
        entries.append(
            ScheduleEntry(
                _require_int(item, "proc"),
                _require_int(item, "task"),
                parse_time(item.get("start", "")),
            )
        )
    return entries


def trace_rows(trace: RunTrace) -> list[tuple[str, ...]]:
    return [
        (
            format_time(sample.time),
            sample.event,
            "" if sample.proc is None else str(sample.proc),
            "" if sample.task is None else str(sample.task),
            str(sample.pending_tasks),
            str(sample.pending_cost),
        )
        for sample in trace.samples
    ]


def write_trace_csv(path: Path, trace: RunTrace) -> None:
    write_csv(path, TRACE_HEADER, trace_rows(trace))


def write_csv(
    path: Path, header: Sequence[str], rows: Iterable[Sequence[object]]
) -> None:
    """Write rows as CSV with ``\\n`` line endings."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    utils.atomic_write_text(path, buffer.getvalue())
    LOGGER.debug("Wrote CSV", extra={"path": str(path)})


def read_csv(path: Path) -> list[dict[str, str]]:
    with path.open(encoding="utf-8", newline="") as handle:
        return list(csv.DictReader(handle))


def _read_json(path: Path) -> Any:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise PatternError(f"Invalid JSON in {path}: {exc}") from exc


def _require_int(data: dict[str, Any], key: str, default: int | None = None) -> int:
    value = data.get(key, default)
    if not isinstance(value, int) or isinstance(value, bool):
        raise PatternError(f"'{key}' must be an integer")
    return value

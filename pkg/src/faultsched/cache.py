"""Integrity-hashed on-disk cache of exact offline optima."""
from __future__ import annotations

import hashlib
import json
import time
from fractions import Fraction
from pathlib import Path
from typing import Any

from . import codec, utils
from .core import AdversarialPattern, PatternError, TimeLike, parse_time
from .offline.opt import OptLimits, OptResult, opt_brute_force

_METADATA_EXT = ".json"
_PAYLOAD_EXT = ".result.json"


def make_cache_key(fingerprint: str, checkpoint: TimeLike) -> str:
    """Return a deterministic cache key for an OPT query."""
    payload = {
        "checkpoint": utils.format_rational(parse_time(checkpoint)),
        "fingerprint": fingerprint,
        "measures": ["cost", "tasks"],
    }
    canonical = utils.canonical_json(payload)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def result_to_dict(result: OptResult) -> dict[str, Any]:
    return {
        "checkpoint": utils.format_rational(result.checkpoint),
        "min_pending_cost": result.min_pending_cost,
        "min_pending_tasks": result.min_pending_tasks,
        "cost_witness": codec.schedule_to_list(result.cost_witness),
        "tasks_witness": codec.schedule_to_list(result.tasks_witness),
        "nodes": result.nodes,
    }


def result_from_dict(data: Any) -> OptResult:
    if not isinstance(data, dict):
        raise PatternError("cached OPT result must be an object")
    return OptResult(
        checkpoint=parse_time(data["checkpoint"]),
        min_pending_cost=int(data["min_pending_cost"]),
        min_pending_tasks=int(data["min_pending_tasks"]),
        cost_witness=tuple(codec.schedule_from_list(data["cost_witness"])),
        tasks_witness=tuple(codec.schedule_from_list(data["tasks_witness"])),
        nodes=int(data.get("nodes", 0)),
    )


class OptCache:
    """Store OPT results on disk, verifying a payload hash on every read."""

    def __init__(self, cache_dir: str | Path | None = None) -> None:
        base = utils.resolve_cache_dir(cache_dir)
        self._base_dir = utils.ensure_directory(base)

    @property
    def base_dir(self) -> Path:
        return self._base_dir

    def get(self, key: str) -> OptResult | None:
        """Return the cached result when both payload and metadata are valid."""
        metadata = self._load_metadata(key)
        if not metadata:
            return None
        payload_path = self._payload_path(key)
        if not payload_path.exists():
            return None
        payload_hash = metadata.get("payload_hash")
        if not isinstance(payload_hash, str) or not self.verify_payload(
            payload_path, payload_hash
        ):
            utils.LOGGER.warning(
                "Cache verification failed; deleting corrupt entry",
                extra={"key": key, "path": str(payload_path)},
            )
            self._safe_unlink(payload_path)
            self._safe_unlink(self._metadata_path(key))
            return None
        try:
            result = result_from_dict(
                json.loads(payload_path.read_text(encoding="utf-8"))
            )
        except (json.JSONDecodeError, KeyError, ValueError):
            utils.LOGGER.warning("Failed to decode cached result", extra={"key": key})
            return None
        utils.LOGGER.debug("Cache hit", extra={"key": key})
        return result

    def store(self, key: str, result: OptResult) -> Path:
        """Persist *result* and its metadata atomically."""
        utils.ensure_directory(self._key_directory(key))
        payload = utils.json_dump(result_to_dict(result)).encode("utf-8")
        metadata = {
            "key": key,
            "created_at": time.time(),
            "payload_hash": hashlib.sha256(payload).hexdigest(),
        }
        payload_path = self._payload_path(key)
        utils.atomic_write_bytes(payload_path, payload)
        utils.atomic_write_bytes(
            self._metadata_path(key),
            json.dumps(metadata, sort_keys=True).encode("utf-8"),
        )
        utils.LOGGER.debug(
            "Stored cache entry", extra={"key": key, "payload": str(payload_path)}
        )
        return payload_path

    def verify_payload(self, path: Path, expected_hash: str) -> bool:
        if not path.exists():
            return False
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        if digest != expected_hash:
            utils.LOGGER.warning(
                "Cache payload hash mismatch", extra={"path": str(path)}
            )
            return False
        return True

    def opt(
        self,
        pattern: AdversarialPattern,
        checkpoint: TimeLike,
        *,
        limits: OptLimits | None = None,
    ) -> OptResult:
        """Return the cached optimum, computing and storing it on a miss."""
        at: Fraction = parse_time(checkpoint)
        key = make_cache_key(codec.pattern_fingerprint(pattern), at)
        cached = self.get(key)
        if cached is not None:
            return cached
        result = opt_brute_force(pattern, at, limits=limits)
        self.store(key, result)
        return result

    def _key_directory(self, key: str) -> Path:
        return self._base_dir / key[:2]

    def _payload_path(self, key: str) -> Path:
        return self._key_directory(key) / f"{key}{_PAYLOAD_EXT}"

    def _metadata_path(self, key: str) -> Path:
        return self._key_directory(key) / f"{key}{_METADATA_EXT}"

    def _load_metadata(self, key: str) -> dict[str, Any] | None:
        metadata_path = self._metadata_path(key)
        if not metadata_path.exists():
            return None
        try:
            data = json.loads(metadata_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError:
            utils.LOGGER.warning("Failed to decode cache metadata", extra={"key": key})
            return None
        return data if isinstance(data, dict) else None

    @staticmethod
    def _safe_unlink(path: Path) -> None:
        try:
            path.unlink()
        except FileNotFoundError:  # pragma: no cover
            return
        except OSError:  # pragma: no cover
            utils.LOGGER.warning(
                "Failed to remove cache artefact", extra={"path": str(path)}
            )

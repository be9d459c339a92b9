"""Tests for the on-disk OPT cache."""
from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

import pytest
from pytest_mock import MockerFixture

from faultsched import codec
from faultsched.cache import OptCache, make_cache_key, result_from_dict, result_to_dict
from faultsched.core import AdversarialPattern, ScheduleEntry
from faultsched.offline import OptResult


def _result() -> OptResult:
    return OptResult(
        checkpoint=Fraction(4),
        min_pending_cost=1,
        min_pending_tasks=1,
        cost_witness=(ScheduleEntry(1, 2, Fraction(0)),),
        tasks_witness=(ScheduleEntry(1, 3, Fraction(2)),),
        nodes=17,
    )


def test_store_and_retrieve(tmp_path: Path) -> None:
    cache = OptCache(cache_dir=tmp_path)
    key = make_cache_key("f" * 64, "4/1")
    stored_path = cache.store(key, _result())
    assert stored_path.exists()
    assert stored_path.parent == cache.base_dir / key[:2]
    assert cache.get(key) == _result()

    metadata = json.loads((stored_path.parent / f"{key}.json").read_text("utf-8"))
    assert cache.verify_payload(stored_path, metadata["payload_hash"])


def test_cache_key_depends_on_checkpoint() -> None:
    assert make_cache_key("abc", 4) == make_cache_key("abc", "8/2")
    assert make_cache_key("abc", 4) != make_cache_key("abc", "9/2")
    assert make_cache_key("abc", 4) != make_cache_key("abd", 4)


def test_result_dict_layout() -> None:
    data = result_to_dict(_result())
    assert data["checkpoint"] == "4/1"
    assert data["cost_witness"] == [{"proc": 1, "task": 2, "start": "0/1"}]
    assert result_from_dict(data) == _result()


def test_corrupt_payload_is_deleted(tmp_path: Path) -> None:
    cache = OptCache(cache_dir=tmp_path)
    key = make_cache_key("abc", 1)
    path = cache.store(key, _result())
    path.write_text("{}", encoding="utf-8")
    assert cache.get(key) is None
    assert not path.exists()


def test_missing_payload_or_metadata(tmp_path: Path) -> None:
    cache = OptCache(cache_dir=tmp_path)
    assert cache.get("missing") is None
    key = make_cache_key("abc", 2)
    path = cache.store(key, _result())
    path.unlink()
    assert cache.get(key) is None


def test_non_mapping_metadata_is_ignored(tmp_path: Path) -> None:
    cache = OptCache(cache_dir=tmp_path)
    key = "ab" + "0" * 62
    metadata_path = cache.base_dir / key[:2] / f"{key}.json"
    metadata_path.parent.mkdir(parents=True, exist_ok=True)
    metadata_path.write_text(json.dumps(["not", "a", "dict"]), encoding="utf-8")
    assert cache.get(key) is None


def test_verify_payload_missing_returns_false(tmp_path: Path) -> None:
    cache = OptCache(cache_dir=tmp_path)
    assert cache.verify_payload(tmp_path / "missing.json", "deadbeef") is False


def test_opt_computes_once(
    tmp_path: Path, crash_pattern: AdversarialPattern, mocker: MockerFixture
) -> None:
    compute = mocker.patch("faultsched.cache.opt_brute_force", return_value=_result())
    cache = OptCache(cache_dir=tmp_path)
    first = cache.opt(crash_pattern, 4)
    second = cache.opt(crash_pattern, "8/2")
    assert first == second == _result()
    assert compute.call_count == 1
    key = make_cache_key(codec.pattern_fingerprint(crash_pattern), 4)
    assert cache.get(key) == _result()


def test_opt_cache_dir_from_env(
    tmp_path: Path,
    crash_pattern: AdversarialPattern,
    monkeypatch: pytest.MonkeyPatch,
) -> None:
    monkeypatch.setenv("FAULTSCHED_CACHE_DIR", str(tmp_path / "env"))
    cache = OptCache()
    assert cache.base_dir == (tmp_path / "env").resolve()
    result = cache.opt(crash_pattern, 5)
    assert (result.min_pending_cost, result.min_pending_tasks) == (0, 0)

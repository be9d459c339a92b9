"""Pytest configuration ensuring the src layout is importable."""
from __future__ import annotations

import sys
from pathlib import Path

import pytest

_PROJECT_ROOT = Path(__file__).resolve().parents[1]
_SRC = _PROJECT_ROOT / "src"
if str(_SRC) not in sys.path:
    sys.path.insert(0, str(_SRC))

from faultsched import codec  # noqa: E402
from faultsched.core import (  # noqa: E402
    AdversarialPattern,
    AdversaryEvent,
    SystemParams,
)


@pytest.fixture
def single_proc_params() -> SystemParams:
    return SystemParams(n=1, speedup=1, lmin=1, lmax=2, beta=2)


@pytest.fixture
def crash_pattern(single_proc_params: SystemParams) -> AdversarialPattern:
    """One processor, three tasks and a crash/restart in the middle."""
    return AdversarialPattern(
        single_proc_params,
        (
            AdversaryEvent.inject(0, 1, 2),
            AdversaryEvent.inject(0, 2, 1),
            AdversaryEvent.crash(1, 1),
            AdversaryEvent.restart(2, 1),
            AdversaryEvent.inject(2, 3, 1),
        ),
    )


@pytest.fixture
def pattern_file(tmp_path: Path, crash_pattern: AdversarialPattern) -> Path:
    path = tmp_path / "pattern.json"
    codec.dump_pattern(path, crash_pattern)
    return path

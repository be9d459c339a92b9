"""Tests for gamma, the non-competitiveness test and speedup recommendations."""
from __future__ import annotations

from fractions import Fraction

import pytest

from faultsched.core import PreconditionError
from faultsched.schedulers import (
    burst_speedup_ok,
    competitive_threshold,
    gamma,
    gamma_by_scan,
    non_competitive_check,
    property_one,
    recommend_scheduler,
    sufficient_speedup,
)


def test_gamma_closed_form() -> None:
    assert gamma(1, 2, "6/5") == 4
    assert gamma(1, 3, 2) == 1
    assert gamma(1, 2, 2) == 0
    assert gamma(3, 3, 1) == 0


@pytest.mark.parametrize(
    ("lmin", "lmax", "speed"),
    [(1, 2, "6/5"), (1, 3, "3/2"), (2, 7, "5/4"), (3, 4, "11/10"), (2, 2, "3/2")],
)
def test_gamma_matches_scan(lmin: int, lmax: int, speed: str) -> None:
    g = gamma(lmin, lmax, speed)
    assert g == gamma_by_scan(lmin, lmax, speed)
    assert property_one(g, lmin, lmax, speed)
    if g > 0:
        assert not property_one(g - 1, lmin, lmax, speed)


def _speed_grid(lmin: int, lmax: int) -> list[Fraction]:
    top = max(Fraction(lmax, lmin), Fraction(2))
    return sorted(
        {
            Fraction(num, den)
            for den in range(1, 11)
            for num in range(den + 1, int(top * den) + 1)
        }
    )


def test_gamma_matches_scan_on_full_grid() -> None:
    checked = 0
    for lmax in range(1, 13):
        for lmin in range(1, lmax + 1):
            threshold = competitive_threshold(lmin, lmax)
            for speed in _speed_grid(lmin, lmax):
                g = gamma(lmin, lmax, speed)
                assert g == gamma_by_scan(lmin, lmax, speed), (lmin, lmax, speed)
                assert property_one(g, lmin, lmax, speed)
                if g > 0:
                    assert not property_one(g - 1, lmin, lmax, speed)
                noncompetitive = non_competitive_check(lmin, lmax, speed)
                assert noncompetitive is (speed < threshold), (lmin, lmax, speed)
                checked += 1
    assert checked > 3000


def test_gamma_undefined_at_unit_speed() -> None:
    with pytest.raises(PreconditionError):
        gamma(1, 2, 1)
    with pytest.raises(PreconditionError):
        gamma(0, 2, 2)


def test_non_competitive_check() -> None:
    assert non_competitive_check(1, 2, "6/5")
    assert non_competitive_check(1, 2, "7/5")
    assert not non_competitive_check(1, 2, "3/2")
    assert not non_competitive_check(1, 2, 2)


def test_burst_speedup_window() -> None:
    assert burst_speedup_ok(1, 3, 2)
    assert not burst_speedup_ok(1, 2, "6/5")
    assert not burst_speedup_ok(1, 3, 3)
    assert not burst_speedup_ok(2, 2, "3/2")


def test_competitive_threshold_is_the_boundary() -> None:
    threshold = competitive_threshold(1, 2)
    assert threshold == Fraction(3, 2)
    assert not non_competitive_check(1, 2, threshold)
    assert non_competitive_check(1, 2, threshold - Fraction(1, 100))
    assert competitive_threshold(2, 3) == Fraction(3, 2)


def test_sufficient_speedup_branches() -> None:
    small = sufficient_speedup(2, 3)
    assert small.branch == "rho"
    assert small.upper == Fraction(3, 2)

    large = sufficient_speedup(1, 2)
    assert large.branch == "sqrt"
    assert large.value == pytest.approx(1.7071067811865475)
    assert large.upper >= 1
    assert (large.upper - 1) ** 2 >= Fraction(1, 2)
    assert large.noncompetitive_below == Fraction(3, 2)


def test_recommend_scheduler() -> None:
    assert recommend_scheduler(1, 1).kind == "lis"
    assert recommend_scheduler(2, 3, 2).speedup == Fraction(3, 2)
    burst = recommend_scheduler(1, 2, 2)
    assert (burst.kind, burst.speedup) == ("burst", Fraction(3, 2))
    laf = recommend_scheduler(1, 5, 3)
    assert (laf.kind, laf.speedup) == ("laf", Fraction(7, 2))
    assert recommend_scheduler(1, 3, 4).kind == "lis"
    with pytest.raises(PreconditionError):
        recommend_scheduler(1, 2, 0)

"""Speedup thresholds: gamma, the non-competitiveness test and sufficient speedups."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal

from ..core import PreconditionError, TimeLike, parse_time

GOLDEN_RATIO = (1 + math.sqrt(5)) / 2
LAF_SPEEDUP = Fraction(7, 2)
_UPPER_STEP = Fraction(1, 10**6)


def _check_costs(lmin: int, lmax: int) -> None:
    if lmin < 1 or lmax < lmin:
        raise PreconditionError("costs must satisfy 1 <= lmin <= lmax")


def property_one(kappa: int, lmin: int, lmax: int, s: TimeLike) -> bool:
    """Whether kappa lmin-tasks and one lmax-task fit in (kappa+1)*lmin at speedup s."""
    speed = parse_time(s)
    return Fraction(kappa * lmin + lmax) / speed <= (kappa + 1) * lmin


def gamma(lmin: int, lmax: int, s: TimeLike) -> int:
    """Smallest non-negative kappa satisfying :func:`property_one`, in closed form."""
    _check_costs(lmin, lmax)
    speed = parse_time(s)
    if speed < 1:
        raise PreconditionError("speedup must be at least 1")
    if speed == 1:
        if lmax > lmin:
            raise PreconditionError("gamma is undefined at s = 1 when lmax > lmin")
        return 0
    return max(math.ceil((lmax - speed * lmin) / ((speed - 1) * lmin)), 0)


def gamma_by_scan(lmin: int, lmax: int, s: TimeLike) -> int:
    """Exhaustive-scan counterpart of :func:`gamma`."""
    _check_costs(lmin, lmax)
    speed = parse_time(s)
    if speed == 1 and lmax > lmin:
        raise PreconditionError("gamma is undefined at s = 1 when lmax > lmin")
    kappa = 0
    while not property_one(kappa, lmin, lmax, speed):
        kappa += 1
    return kappa


def non_competitive_check(lmin: int, lmax: int, s: TimeLike) -> bool:
    """True iff no deterministic algorithm is competitive at speedup s."""
    speed = parse_time(s)
    g = gamma(lmin, lmax, speed)
    return speed < Fraction(lmax, lmin) and speed < Fraction(g * lmin + lmax, lmax)


def burst_speedup_ok(lmin: int, lmax: int, s: TimeLike) -> bool:
    """True when (gamma*lmin + lmax)/lmax <= s < lmax/lmin."""
    speed = parse_time(s)
    if lmax <= lmin or speed <= 1:
        return False
    g = gamma(lmin, lmax, speed)
    return Fraction(g * lmin + lmax, lmax) <= speed < Fraction(lmax, lmin)


@dataclass(frozen=True)
class SufficientSpeedup:
    """A speedup that is always enough for competitiveness.

    ``value`` is the real number; ``upper`` is a rational not smaller than it,
    suitable for the exact checks.
    """

    value: float
    upper: Fraction
    rho: Fraction
    branch: Literal["rho", "sqrt"]
    noncompetitive_below: Fraction


def sufficient_speedup(lmin: int, lmax: int) -> SufficientSpeedup:
    _check_costs(lmin, lmax)
    rho = Fraction(lmax, lmin)
    guarantee = 2 - 1 / rho
    # rho <= golden ratio  <=>  (2*rho - 1)^2 <= 5, exact for rationals >= 1/2
    if (2 * rho - 1) ** 2 <= 5:
        return SufficientSpeedup(float(rho), rho, rho, "rho", guarantee)
    radicand = 1 - 1 / rho
    value = 1 + math.sqrt(radicand)
    upper = Fraction(value).limit_denominator(10**6)
    while upper < 1 or (upper - 1) ** 2 < radicand:
        upper += _UPPER_STEP
    return SufficientSpeedup(value, upper, rho, "sqrt", guarantee)


def competitive_threshold(lmin: int, lmax: int) -> Fraction:
    """Exact smallest speedup at which :func:`non_competitive_check` is false.

    For gamma = g the speedup ranges over [L(g), L(g-1)) with
    L(g) = (lmax + g*lmin) / ((g+1)*lmin), and the second condition fails once
    s >= 1 + g/rho. The candidates only move up as g grows past the point
    where 1 + g/rho exceeds the best value found.
    """
    _check_costs(lmin, lmax)
    rho = Fraction(lmax, lmin)
    best = rho
    g = 1
    while True:
        bound = 1 + g / rho
        if bound >= best:
            return best
        low = Fraction(lmax + g * lmin, (g + 1) * lmin)
        high = Fraction(lmax + (g - 1) * lmin, g * lmin)
        candidate = max(low, bound)
        if candidate < high:
            best = min(best, candidate)
        g += 1


@dataclass(frozen=True)
class Recommendation:
    kind: str
    speedup: Fraction


def recommend_scheduler(lmin: int, lmax: int, k: int = 2) -> Recommendation:
    """Cheapest-speedup policy with a proven bound for *k* distinct costs."""
    _check_costs(lmin, lmax)
    if k < 1:
        raise PreconditionError("k must be at least 1")
    rho = Fraction(lmax, lmin)
    if k == 1 or lmin == lmax:
        return Recommendation("lis", Fraction(1))
    if k == 2:
        threshold = competitive_threshold(lmin, lmax)
        if rho <= threshold:
            return Recommendation("lis", rho)
        return Recommendation("burst", threshold)
    if rho <= LAF_SPEEDUP:
        return Recommendation("lis", rho)
    return Recommendation("laf", LAF_SPEEDUP)

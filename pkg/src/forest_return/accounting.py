"""Accrual-basis profit rate, capitalization and expected return rate on capital.

Money is in $/acre, prices in $/MBF. Value is produced by growth; harvests
only convert standing value to cash, so they carry no profit impulse. The one
impulse is the establishment expense, booked at age 0. Capitalization is the
bare land value plus the stumpage value of the standing timber.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .errors import DomainError, NoBreakEvenError
from .growth import (
    DEFAULT_STEP,
    ManagementPlan,
    VolumeTrajectory,
    YieldParams,
    build_trajectory,
    volume,
)

BREAK_EVEN_TAU_MAX = 500.0
BREAK_EVEN_TOL = 1e-6


@dataclass(frozen=True)
class EconParams:
    stumpage_price: float
    establishment_cost: float
    bare_land_value: float
    annual_overhead: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.stumpage_price) and self.stumpage_price > 0):
            raise DomainError(f"stumpage_price must be > 0, got {self.stumpage_price!r}")
        for name in ("establishment_cost", "bare_land_value", "annual_overhead"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise DomainError(f"{name} must be >= 0, got {value!r}")

    def scaled(self, price: float = 1.0, expenses: float | None = None) -> "EconParams":
        """Multiply the stumpage price by ``price`` and every expense by ``expenses``.

        Bare land value moves with the expenses. With ``expenses`` omitted all
        monetary inputs share the single multiplier ``price``.
        """
        if expenses is None:
            expenses = price
        if not (price > 0 and expenses > 0):
            raise DomainError("multipliers must be > 0")
        return replace(
            self,
            stumpage_price=self.stumpage_price * price,
            establishment_cost=self.establishment_cost * expenses,
            bare_land_value=self.bare_land_value * expenses,
            annual_overhead=self.annual_overhead * expenses,
        )


class ProfitRate(NamedTuple):
    rate: float  # $/acre/year
    impulse: float  # lump $/acre booked at this age


@dataclass(frozen=True)
class AccrualLedger:
    """Sampled accrual accounts of one rotation.

    ``interval_profit[i]`` is the exact operating profit accrued between
    ``ages[i]`` and ``ages[i + 1]``; its sum plus the impulses is the
    rotation's total operating profit.
    """

    step: float
    ages: np.ndarray
    profit_rates: np.ndarray
    interval_profit: np.ndarray
    impulses: tuple[tuple[float, float], ...]
    capitalization: np.ndarray

    @property
    def profit_rate_samples(self) -> np.ndarray:
        return np.column_stack([self.ages, self.profit_rates])

    @property
    def capitalization_samples(self) -> np.ndarray:
        return np.column_stack([self.ages, self.capitalization])

    def total_profit(self) -> float:
        return float(math.fsum(self.interval_profit) + math.fsum(v for _, v in self.impulses))


@dataclass(frozen=True)
class RotationReport:
    rotation: float
    expected_profit_rate: float
    expected_capitalization: float
    expected_return_rate: float
    break_even: bool


def _check_age(trajectory: VolumeTrajectory, age: float) -> None:
    if not 0 <= age <= trajectory.rotation:
        raise DomainError(f"age {age!r} outside rotation [0, {trajectory.rotation}]")


def capitalization(trajectory: VolumeTrajectory, econ: EconParams, age: float) -> float:
    """Balance-sheet value at ``age``; right after a thinning it excludes the removal."""
    _check_age(trajectory, age)
    return econ.bare_land_value + econ.stumpage_price * float(trajectory.volume_at(age))


def operating_profit_rate(trajectory: VolumeTrajectory, econ: EconParams, age: float) -> ProfitRate:
    _check_age(trajectory, age)
    rate = econ.stumpage_price * float(trajectory.growth_rate_at(age)) - econ.annual_overhead
    impulse = -econ.establishment_cost if age == 0 else 0.0
    return ProfitRate(rate, impulse)


def accrual_ledger(trajectory: VolumeTrajectory, econ: EconParams) -> AccrualLedger:
    ages = trajectory.ages
    p = econ.stumpage_price
    grown = np.array(
        [trajectory.accrued_volume(lo, hi) for lo, hi in zip(ages[:-1], ages[1:])]
    )
    rates = p * np.asarray(trajectory.growth_rate_at(ages)) - econ.annual_overhead
    return AccrualLedger(
        step=trajectory.step,
        ages=ages,
        profit_rates=rates,
        interval_profit=p * grown - econ.annual_overhead * np.diff(ages),
        impulses=((0.0, -econ.establishment_cost),),
        capitalization=econ.bare_land_value + p * trajectory.volumes,
    )


def _report(rotation, total_profit, land_years, timber_volume_years, econ) -> RotationReport:
    profit_rate = total_profit / rotation
    cap = (land_years + econ.stumpage_price * timber_volume_years) / rotation
    if not cap > 0:
        raise DomainError("expected capitalization is zero; return rate undefined")
    return RotationReport(rotation, profit_rate, cap, profit_rate / cap, profit_rate >= 0)


def expected_rates(trajectory: VolumeTrajectory, econ: EconParams, start: float = 0.0) -> RotationReport:
    """Expected profit rate, capitalization and return rate over one rotation.

    Time is uniformly distributed over the rotation. ``start`` is the phase
    where integration begins; the window wraps around periodically, so under
    stationary prices the result does not depend on it.
    """
    tau = trajectory.rotation
    if not tau > 0:
        raise DomainError("rotation must be > 0")
    s0 = math.fmod(start, tau)
    if s0 < 0:
        s0 += tau
    # a thinning exactly at s0 is picked up by the left/right limits at s0
    grown = trajectory.accrued_volume(s0, tau) + trajectory.accrued_volume(0.0, s0)
    stock = trajectory.integral(s0, tau) + trajectory.integral(0.0, s0)
    total = (
        econ.stumpage_price * grown - econ.establishment_cost - econ.annual_overhead * tau
    )
    return _report(tau, total, econ.bare_land_value * tau, stock, econ)


def rotation_curves(trajectory: VolumeTrajectory, econ: EconParams, rotations, scale=None):
    """Expected rates for every truncation of ``trajectory`` at ``rotations``.

    Each rotation must exceed the last thinning age. ``scale`` optionally
    multiplies all monetary inputs per rotation. Returns three arrays:
    expected profit rate, expected capitalization and expected return rate.
    """
    taus = np.asarray(rotations, dtype=float)
    last = trajectory.events[-1].age if trajectory.events else 0.0
    if np.any(taus <= last) or np.any(taus > trajectory.rotation * (1 + 1e-12)):
        raise DomainError(f"rotations must lie in ({last}, {trajectory.rotation}]")
    k = np.ones_like(taus) if scale is None else np.asarray(scale, dtype=float)
    removed = sum(ev.removed for ev in trajectory.events)
    grown = np.asarray(trajectory.volume_at(taus, side="left")) + removed
    stock = np.asarray(trajectory.cumulative_integral(taus))
    price = econ.stumpage_price * k
    profit = (
        price * grown - econ.establishment_cost * k - econ.annual_overhead * k * taus
    ) / taus
    cap = econ.bare_land_value * k + price * stock / taus
    with np.errstate(divide="ignore", invalid="ignore"):
        ret = profit / cap
    return profit, cap, ret


def evaluate_plan(
    params: YieldParams, econ: EconParams, plan: ManagementPlan, step: float = DEFAULT_STEP
) -> RotationReport:
    return expected_rates(build_trajectory(params, plan, step), econ)


def break_even_rotation(
    params: YieldParams,
    econ: EconParams,
    step: float = DEFAULT_STEP,
    tau_max: float = BREAK_EVEN_TAU_MAX,
) -> float:
    """Shortest thinning-free rotation whose expected profit rate reaches zero.

    The first sign change on a one-year scan of ``(step, tau_max]`` is
    bisected to within ``1e-6`` years.
    """
    p, cost, overhead = econ.stumpage_price, econ.establishment_cost, econ.annual_overhead
    if cost == 0 and overhead == 0:
        return 0.0
    if p * params.a <= cost:
        raise NoBreakEvenError(
            f"revenue ceiling {p * params.a:.6g} $/acre does not exceed establishment cost {cost:.6g}"
        )

    def surplus(tau: float) -> float:
        return p * volume(params, tau) - cost - overhead * tau

    scan = np.concatenate([[step], np.arange(math.ceil(step), math.floor(tau_max) + 1.0)])
    scan = scan[(scan >= step) & (scan <= tau_max)]
    values = p * np.asarray(volume(params, scan)) - cost - overhead * scan
    hits = np.nonzero(values >= 0)[0]
    if hits.size == 0:
        raise NoBreakEvenError(f"no break-even rotation in ({step}, {tau_max}] years")
    i = int(hits[0])
    if i == 0:
        return float(scan[0])
    lo, hi = float(scan[i - 1]), float(scan[i])
    while hi - lo > BREAK_EVEN_TOL:
        mid = 0.5 * (lo + hi)
        if surplus(mid) >= 0:
            hi = mid
        else:
            lo = mid
    return hi

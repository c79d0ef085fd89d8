"""Autoregressive price evolution and its effect on expected monetary quantities.

The continuous price path is ``u(t) = u0 * (1 + (rho**(z (t - t0)) - 1) / ln rho)``.
Averaged over a window ``[b, b + tau]`` it gives the expected price level of
any monetary event whose timing is uniform in that window. Shifting the window
rescales expected profit rate and capitalization by the same factor, which
cancels in their ratio.

All closed forms are written with ``expm1``-based helpers so they stay
accurate as ``rho`` approaches 1, where the path becomes linear in time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate

from .accounting import EconParams, expected_rates
from .errors import DomainError, SingularParameterError
from .growth import VolumeTrajectory

INVARIANCE_RTOL = 1e-9
# below this |x| the divided differences use their Taylor series
_SERIES_CUTOFF = 1e-2


@dataclass(frozen=True)
class PriceProcess:
    """AR(1) price process.

    ``rho`` is the autoregression coefficient and ``z`` the time-scale factor
    in 1/year. The recursion accepts ``u0 = 0`` or ``rho = 0``; the closed
    forms need ``u0 > 0`` and ``rho > 0``, ``rho != 1``.
    """

    u0: float
    rho: float
    z: float = 1.0
    t0: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.u0) and self.u0 >= 0):
            raise DomainError(f"u0 must be >= 0, got {self.u0!r}")
        if not (math.isfinite(self.rho) and self.rho >= 0):
            raise DomainError(f"rho must be >= 0, got {self.rho!r}")
        if not (math.isfinite(self.z) and self.z > 0):
            raise DomainError(f"z must be > 0, got {self.z!r}")
        if not math.isfinite(self.t0):
            raise DomainError("t0 must be finite")

    @property
    def log_rho(self) -> float:
        if self.rho <= 0:
            raise SingularParameterError("rho must be > 0 for the continuous price path")
        if self.rho == 1.0:
            raise SingularParameterError("rho = 1 makes the closed forms divide by ln(rho) = 0")
        return math.log(self.rho)


def _phi1(x):
    """(exp(x) - 1) / x, equal to 1 at 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < _SERIES_CUTOFF
    safe = np.where(small, 1.0, x)
    series = 1.0 + x / 2.0 + x * x / 6.0 + x**3 / 24.0 + x**4 / 120.0 + x**5 / 720.0
    return np.where(small, series, np.expm1(safe) / safe)


def _phi2(x):
    """(exp(x) - 1 - x) / x**2, equal to 1/2 at 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < _SERIES_CUTOFF
    safe = np.where(small, 1.0, x)
    series = 0.5 + x / 6.0 + x * x / 24.0 + x**3 / 120.0 + x**4 / 720.0 + x**5 / 5040.0
    return np.where(small, series, (np.expm1(safe) - safe) / (safe * safe))


def _out(v):
    v = np.asarray(v, dtype=float)
    return float(v) if v.ndim == 0 else v


def ar1_step(process: PriceProcess, previous: float) -> float:
    if previous < 0:
        raise DomainError(f"previous price must be >= 0, got {previous!r}")
    return process.u0 + process.rho * previous


def ar1_path(process: PriceProcess, steps: int, start: float | None = None) -> list[float]:
    """Iterate the recursion ``steps`` times from ``start`` (default ``u0``)."""
    value = process.u0 if start is None else start
    path = [value]
    for _ in range(steps):
        value = ar1_step(process, value)
        path.append(value)
    return path


def price_level(process: PriceProcess, t):
    """Continuous price level at time ``t >= t0``."""
    lr = process.log_rho
    elapsed = np.asarray(t, dtype=float) - process.t0
    if np.any(elapsed < 0):
        raise DomainError(f"t must be >= t0 = {process.t0}")
    x = process.z * elapsed
    return _out(process.u0 * (1.0 + x * _phi1(x * lr)))


def _window_bracket(process: PriceProcess, b, tau):
    lr = process.log_rho
    tau = np.asarray(tau, dtype=float)
    offset = np.asarray(b, dtype=float) - process.t0
    if np.any(tau <= 0):
        raise DomainError("window length tau must be > 0")
    if np.any(offset < 0):
        raise DomainError(f"window start must be >= t0 = {process.t0}")
    zb, zt = process.z * offset, process.z * tau
    return 1.0 + zb * _phi1(zb * lr) * _phi1(zt * lr) + zt * _phi2(zt * lr)


def expected_price(process: PriceProcess, b, tau):
    """Mean price level over ``[b, b + tau]`` under uniform timing.

    Algebraically equal to
    ``u0 * (1 - 1/ln rho + rho**(z (b - t0)) * (rho**(z tau) - 1) / (z tau ln(rho)**2))``.
    """
    return _out(process.u0 * _window_bracket(process, b, tau))


def expected_price_direct(process: PriceProcess, b: float, tau: float) -> float:
    """The same window mean evaluated term by term, without cancellation guards."""
    lr = process.log_rho
    zb, zt = process.z * (b - process.t0), process.z * tau
    return process.u0 * (1.0 - 1.0 / lr + math.exp(zb * lr) * math.expm1(zt * lr) / (zt * lr * lr))


def expected_price_quadrature(process: PriceProcess, b: float, tau: float) -> float:
    """Window mean of :func:`price_level` by adaptive quadrature (oracle route)."""
    value, _ = integrate.quad(
        lambda t: price_level(process, t), b, b + tau, epsabs=0.0, epsrel=1e-13, limit=200
    )
    return value / tau


def window_prefactor(process: PriceProcess, b, b_star, tau):
    """Factor by which expected monetary quantities change when the window moves from ``b`` to ``b_star``."""
    return _out(_window_bracket(process, b_star, tau) / _window_bracket(process, b, tau))


@dataclass(frozen=True)
class InvarianceRow:
    offset: float
    prefactor: float
    price_multiplier: float
    expected_profit_rate: float
    expected_capitalization: float
    expected_return_rate: float
    profit_scale_error: float
    capitalization_scale_error: float
    return_rate_error: float

    @property
    def holds(self) -> bool:
        return max(
            self.profit_scale_error, self.capitalization_scale_error, self.return_rate_error
        ) <= INVARIANCE_RTOL


def _rel(x: float, ref: float) -> float:
    return abs(x - ref) / abs(ref) if ref != 0 else abs(x)


def verify_return_rate_invariance(
    trajectory: VolumeTrajectory,
    econ: EconParams,
    process: PriceProcess,
    offsets: Sequence[float],
    reference: float | None = None,
) -> list[InvarianceRow]:
    """Re-evaluate a rotation with every monetary input at each window's price level.

    For each offset ``b*`` all monetary inputs are multiplied by the window's
    mean price level relative to ``u0`` and the rotation is re-evaluated from
    scratch. The rows report how far the resulting profit rate and
    capitalization are from ``prefactor`` times their values in the
    reference window, and how far the return rate is from its
    stationary-price value. Errors are relative.
    """
    if not process.u0 > 0:
        raise DomainError("invariance check needs u0 > 0")
    tau = trajectory.rotation
    b = process.t0 if reference is None else reference
    stationary = expected_rates(trajectory, econ)
    base = expected_rates(trajectory, econ.scaled(expected_price(process, b, tau) / process.u0))
    rows = []
    for b_star in offsets:
        multiplier = expected_price(process, b_star, tau) / process.u0
        report = expected_rates(trajectory, econ.scaled(multiplier))
        prefactor = window_prefactor(process, b, b_star, tau)
        rows.append(
            InvarianceRow(
                offset=float(b_star),
                prefactor=prefactor,
                price_multiplier=multiplier,
                expected_profit_rate=report.expected_profit_rate,
                expected_capitalization=report.expected_capitalization,
                expected_return_rate=report.expected_return_rate,
                profit_scale_error=_rel(report.expected_profit_rate, prefactor * base.expected_profit_rate),
                capitalization_scale_error=_rel(
                    report.expected_capitalization, prefactor * base.expected_capitalization
                ),
                return_rate_error=_rel(report.expected_return_rate, stationary.expected_return_rate),
            )
        )
    return rows

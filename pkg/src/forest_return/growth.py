"""Saturating yield model, thinning responses and piecewise volume trajectories.

Volumes are in thousand board feet per acre (MBF/acre), ages in years.
A trajectory is the unthinned yield curve multiplied by one correction factor
per thinning; every factor is computed from the standing volume immediately
before its own event, so successive thinnings compose multiplicatively.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import DomainError, InfeasibleThinningError

DEFAULT_STEP = 0.1
FEASIBILITY_RTOL = 1e-12
# grid points closer than this to an event or kink are dropped in favour of it
_MERGE_TOL = 1e-9
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(5)


def gauss_nodes(lo, hi):
    """Five-point Gauss-Legendre nodes and weights on each interval ``[lo, hi]``."""
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    half = 0.5 * (hi - lo)[..., None]
    return 0.5 * (hi + lo)[..., None] + half * _GL_NODES, half * _GL_WEIGHTS


@dataclass(frozen=True)
class YieldParams:
    """Parameters of ``V(t) = a * (1 - exp(-m t))**c`` for one productivity class."""

    a: float
    m: float
    c: float
    label: str = ""

    def __post_init__(self):
        for name in ("a", "m", "c"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"yield parameter {name} must be finite and > 0, got {value!r}")


def _check_ages(age) -> np.ndarray:
    t = np.asarray(age, dtype=float)
    if np.any(np.isnan(t)) or np.any(t < 0):
        raise DomainError(f"stand age must be >= 0, got {age!r}")
    return t


def _out(values: np.ndarray):
    return float(values) if values.ndim == 0 else values


def volume(params: YieldParams, age):
    """Standing volume of an unthinned stand; accepts scalars or arrays."""
    t = _check_ages(age)
    return _out(params.a * (-np.expm1(-params.m * t)) ** params.c)


def volume_derivative(params: YieldParams, age):
    """Analytic growth rate dV/dt.

    For ``c < 1`` the slope at age 0 is infinite and ``math.inf`` is returned
    there; callers that integrate profit use volume differences instead.
    """
    t = _check_ages(age)
    a, m, c = params.a, params.m, params.c
    decay = np.exp(-m * t)
    with np.errstate(divide="ignore"):
        rate = a * c * m * decay * (-np.expm1(-m * t)) ** (c - 1.0)
    if c == 1.0:
        rate = a * m * decay
    return _out(np.asarray(rate, dtype=float))


@dataclass(frozen=True)
class ConstantResponse:
    """Persistent thinning correction ``(1 - q) * (1 + q * delta)``.

    ``q`` is the removed fraction of standing volume. The growth boost is
    phased in linearly over the first year after the event, so the volume
    drops by exactly the removed amount at the thinning instant and matches
    the annual-step formula at every whole year afterwards.
    """

    delta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.delta) and self.delta >= 0):
            raise DomainError(f"delta must be >= 0, got {self.delta!r}")

    def factor(self, intensity, elapsed):
        ramp = np.clip(elapsed, 0.0, 1.0)
        return (1.0 - intensity) * (1.0 + intensity * self.delta * ramp)

    def factor_rate(self, intensity, elapsed):
        inside = (np.asarray(elapsed) >= 0.0) & (np.asarray(elapsed) < 1.0)
        return np.where(inside, (1.0 - intensity) * intensity * self.delta, 0.0)

    def kinks(self, age: float) -> tuple[float, ...]:
        return (age + 1.0,) if self.delta > 0 else ()


@dataclass(frozen=True)
class DecayingResponse:
    """Transient thinning correction ``1 - q * exp(-decay * elapsed)``."""

    decay: float

    def __post_init__(self):
        if not (math.isfinite(self.decay) and self.decay >= 0):
            raise DomainError(f"decay must be >= 0, got {self.decay!r}")

    def factor(self, intensity, elapsed):
        return 1.0 - intensity * np.exp(-self.decay * np.asarray(elapsed))

    def factor_rate(self, intensity, elapsed):
        return intensity * self.decay * np.exp(-self.decay * np.asarray(elapsed))

    def kinks(self, age: float) -> tuple[float, ...]:
        return ()


ThinningResponseModel = Union[ConstantResponse, DecayingResponse]


def _intensity(removed: float, standing: float, index: int | None = None) -> float:
    where = f"thinning {index}" if index is not None else "thinning"
    if not removed > 0:
        raise DomainError(f"{where}: removed volume must be > 0, got {removed!r}")
    if not standing > 0:
        raise InfeasibleThinningError(f"{where}: standing volume is zero", index)
    if removed > standing * (1.0 + FEASIBILITY_RTOL):
        raise InfeasibleThinningError(
            f"{where}: removes {removed:.6g} MBF/acre but only {standing:.6g} is standing", index
        )
    return min(removed / standing, 1.0)


def apply_thinning_constant(params, pre_volume_next, pre_volume_now, removed, delta):
    """Next-step volume after a thinning under the persistent response.

    ``params`` is accepted for signature symmetry with the other model
    functions; the correction depends only on the volumes involved.
    """
    if pre_volume_next < 0:
        raise DomainError("pre_volume_next must be >= 0")
    q = _intensity(removed, pre_volume_now)
    return ConstantResponse(delta).factor(q, 1.0) * pre_volume_next


def apply_thinning_decaying(params, pre_volume_next, pre_volume_at_thinning, removed, d, elapsed):
    """Volume ``elapsed`` years after a thinning under the decaying response."""
    if pre_volume_next < 0:
        raise DomainError("pre_volume_next must be >= 0")
    if elapsed < 0:
        raise DomainError(f"elapsed time must be >= 0, got {elapsed!r}")
    q = _intensity(removed, pre_volume_at_thinning)
    return float(DecayingResponse(d).factor(q, elapsed)) * pre_volume_next


@dataclass(frozen=True)
class ThinningEvent:
    time: float
    removed: float

    def __post_init__(self):
        if not (math.isfinite(self.time) and self.time > 0):
            raise DomainError(f"thinning time must be > 0, got {self.time!r}")
        if not (math.isfinite(self.removed) and self.removed > 0):
            raise DomainError(f"thinning removal must be > 0, got {self.removed!r}")


@dataclass(frozen=True)
class ManagementPlan:
    """A rotation age and the thinnings carried out before the clearcut."""

    rotation: float
    thinnings: tuple[ThinningEvent, ...] = ()
    response: ThinningResponseModel = field(default_factory=ConstantResponse)

    def __post_init__(self):
        object.__setattr__(self, "thinnings", tuple(self.thinnings))
        if not (math.isfinite(self.rotation) and self.rotation > 0):
            raise DomainError(f"rotation must be > 0, got {self.rotation!r}")
        previous = 0.0
        for i, event in enumerate(self.thinnings):
            if event.time <= previous:
                raise DomainError(f"thinning {i}: ages must be strictly increasing")
            if event.time >= self.rotation:
                raise DomainError(
                    f"thinning {i}: age {event.time} is not before rotation {self.rotation}"
                )
            previous = event.time


@dataclass(frozen=True)
class ThinningRecord:
    age: float
    removed: float
    pre_volume: float
    intensity: float


@dataclass(frozen=True, eq=False)
class VolumeTrajectory:
    """Volume of one stand over ``[0, rotation]``.

    ``ages`` always contains 0, the rotation age, every thinning age and
    every kink of a response factor, so the volume is smooth inside each
    grid interval. ``volumes`` are right-continuous: at a thinning age they
    hold the post-thinning value. Use :func:`build_trajectory` to create one.
    """

    params: YieldParams
    rotation: float
    step: float
    ages: np.ndarray
    volumes: np.ndarray
    events: tuple[ThinningRecord, ...]
    response: ThinningResponseModel
    _cumulative: np.ndarray = field(repr=False)

    @property
    def samples(self) -> np.ndarray:
        """``(n, 2)`` array of (age, volume) pairs."""
        return np.column_stack([self.ages, self.volumes])

    def _factors(self, t: np.ndarray, side: str) -> np.ndarray:
        total = np.ones_like(t)
        for ev in self.events:
            active = t >= ev.age if side == "right" else t > ev.age
            f = self.response.factor(ev.intensity, np.maximum(t - ev.age, 0.0))
            total = total * np.where(active, f, 1.0)
        return total

    def volume_at(self, age, side: str = "right"):
        """Standing volume; ``side="left"`` gives the pre-thinning limit."""
        t = _check_ages(age)
        base = self.params.a * (-np.expm1(-self.params.m * t)) ** self.params.c
        return _out(base * self._factors(t, side))

    def growth_rate_at(self, age):
        """Right derivative of the corrected volume (inf at age 0 when c < 1)."""
        t = _check_ages(age)
        base = np.asarray(volume(self.params, t))
        slope = np.asarray(volume_derivative(self.params, t))
        factors = []
        rates = []
        for ev in self.events:
            active = t >= ev.age
            elapsed = np.maximum(t - ev.age, 0.0)
            factors.append(np.where(active, self.response.factor(ev.intensity, elapsed), 1.0))
            rates.append(np.where(active, self.response.factor_rate(ev.intensity, elapsed), 0.0))
        total = np.prod(factors, axis=0) if factors else np.ones_like(t)
        with np.errstate(invalid="ignore"):
            rate = slope * total
        for k in range(len(factors)):
            others = np.prod([f for j, f in enumerate(factors) if j != k], axis=0) if len(factors) > 1 else 1.0
            rate = rate + base * rates[k] * others
        return _out(np.asarray(rate, dtype=float))

    def _gauss(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        nodes, weights = gauss_nodes(lo, hi)
        return np.sum(np.asarray(self.volume_at(nodes)) * weights, axis=-1)

    def cumulative_integral(self, age):
        """Integral of volume from 0 to ``age`` (MBF-years/acre)."""
        t = np.asarray(age, dtype=float)
        if np.any(t < 0) or np.any(t > self.rotation * (1 + 1e-12)):
            raise DomainError(f"age outside [0, {self.rotation}]")
        idx = np.clip(np.searchsorted(self.ages, t, side="right") - 1, 0, len(self.ages) - 1)
        start = self.ages[idx]
        partial = np.where(t > start, self._gauss(start, np.maximum(t, start)), 0.0)
        return _out(self._cumulative[idx] + partial)

    def integral(self, lo: float, hi: float) -> float:
        return float(self.cumulative_integral(hi) - self.cumulative_integral(lo))

    def removed_between(self, lo: float, hi: float) -> float:
        """Total removal of thinnings with ``lo < age < hi``."""
        return float(sum(ev.removed for ev in self.events if lo < ev.age < hi))

    def accrued_volume(self, lo: float, hi: float) -> float:
        """Volume grown over ``[lo, hi]``, counting harvested volume as grown.

        Thinnings strictly inside the interval only change the form of the
        accrued value, so their removals are added back.
        """
        if hi <= lo:
            return 0.0
        grown = self.volume_at(hi, side="left") - self.volume_at(lo, side="right")
        return float(grown + self.removed_between(lo, hi))

    @property
    def terminal_volume(self) -> float:
        return float(self.volume_at(self.rotation, side="left"))


def sample_grid(rotation: float, step: float, specials=()) -> np.ndarray:
    """Uniform ages on ``[0, rotation]`` merged with the breakpoints ``specials``."""
    n = int(math.floor(rotation / step + 1e-9))
    base = np.round(np.arange(n + 1) * step, 12)
    special = np.array(sorted({0.0, rotation, *(s for s in specials if 0 < s < rotation)}))
    gap = np.min(np.abs(base[:, None] - special[None, :]), axis=1)
    keep = base[(gap > _MERGE_TOL) & (base < rotation)]
    return np.union1d(keep, special)


def build_trajectory(params: YieldParams, plan: ManagementPlan, step: float = DEFAULT_STEP) -> VolumeTrajectory:
    """Sample the thinning-corrected volume over ``[0, plan.rotation]``.

    Raises
    ------
    InfeasibleThinningError
        If a thinning removes more than is standing at its age; ``index``
        identifies the event.
    """
    if not (math.isfinite(step) and step > 0):
        raise DomainError(f"step must be > 0, got {step!r}")
    response = plan.response
    records: list[ThinningRecord] = []
    for i, event in enumerate(plan.thinnings):
        standing = volume(params, event.time)
        for rec in records:
            standing *= float(response.factor(rec.intensity, event.time - rec.age))
        q = _intensity(event.removed, standing, i)
        records.append(ThinningRecord(event.time, event.removed, standing, q))

    specials = [r.age for r in records]
    for r in records:
        specials.extend(response.kinks(r.age))
    ages = sample_grid(plan.rotation, step, specials)

    partial = VolumeTrajectory(
        params, plan.rotation, step, ages, np.empty(0), tuple(records), response, np.empty(0)
    )
    volumes = np.asarray(partial.volume_at(ages))
    pieces = partial._gauss(ages[:-1], ages[1:])
    cumulative = np.concatenate([[0.0], np.cumsum(pieces)])
    return VolumeTrajectory(
        params, plan.rotation, step, ages, volumes, tuple(records), response, cumulative
    )


def schedule_from_intensities(
    params: YieldParams,
    ages,
    intensities,
    response: ThinningResponseModel,
) -> tuple[ThinningEvent, ...]:
    """Convert removed fractions of standing volume into absolute removals."""
    events: list[ThinningEvent] = []
    done: list[tuple[float, float]] = []
    for i, (age, q) in enumerate(zip(ages, intensities)):
        if not 0 < q <= 1:
            raise DomainError(f"thinning {i}: intensity must lie in (0, 1], got {q!r}")
        standing = volume(params, age)
        for prev_age, prev_q in done:
            standing *= float(response.factor(prev_q, age - prev_age))
        if not standing > 0:
            raise InfeasibleThinningError(f"thinning {i}: standing volume is zero", i)
        events.append(ThinningEvent(float(age), q * standing))
        done.append((float(age), q))
    return tuple(events)

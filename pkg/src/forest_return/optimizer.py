"""Rotation and thinning-schedule search, the stylized model and sensitivity sweeps.

Rotation search is a one-year coarse grid followed by golden-section
refinement around the best grid point. Thinning search is exhaustive over a
grid of thinning ages and removal intensities, with the rotation co-optimized
for every schedule.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .accounting import EconParams, RotationReport, evaluate_plan, rotation_curves
from .errors import DomainError, ForestReturnError
from .growth import (
    DEFAULT_STEP,
    ConstantResponse,
    ManagementPlan,
    ThinningEvent,
    ThinningResponseModel,
    YieldParams,
    build_trajectory,
    gauss_nodes,
    sample_grid,
    schedule_from_intensities,
    volume,
)
from .prices import PriceProcess, expected_price

OBJECTIVES = ("return_rate", "profit_rate")
TAU_MAX = 300.0
THINNING_TAU_MAX = 100.0
COARSE_STEP = 1.0
RESOLUTION = 0.01
TIE_TOL = 1e-9
INTENSITIES = (0.1, 0.2, 0.3, 0.4)
_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

__all__ = [
    "ManagementPlan",
    "OptimizationResult",
    "StylizedParams",
    "SweepRow",
    "optimize_rotation",
    "optimize_thinnings",
    "rotation_by_offset",
    "sensitivity_sweep",
    "stylized_optimal_rotation",
    "stylized_return",
    "thinning_threshold",
]


@dataclass(frozen=True)
class OptimizationResult:
    """Outcome of a rotation or thinning search.

    ``trace`` holds ``(candidate, objective)`` pairs in evaluation order; a
    candidate is a rotation age for rotation searches and a
    ``(thinning ages, intensities, rotation)`` triple for thinning searches.
    For thinning searches ``baseline`` is the thinning-free optimum and
    ``feasible`` says whether the best schedule beats it.
    """

    best_plan: ManagementPlan
    best_report: RotationReport
    objective: str
    trace: tuple = field(repr=False)
    profitable: bool = True
    baseline: "OptimizationResult | None" = field(default=None, repr=False)
    feasible: bool | None = None
    skipped: int = 0
    evaluated: int = 0

    @property
    def best_objective(self) -> float:
        return _objective_value(self.best_report, self.objective)


def _objective_value(report: RotationReport, objective: str) -> float:
    if objective == "return_rate":
        return report.expected_return_rate
    return report.expected_profit_rate


def _check_objective(objective: str) -> str:
    objective = objective.replace("-", "_")
    if objective not in OBJECTIVES:
        raise DomainError(f"unknown objective {objective!r}; expected one of {OBJECTIVES}")
    return objective


def _pick(candidates: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """Best (rotation, value); near-ties go to the shorter rotation."""
    top = max(v for _, v in candidates)
    return min((c for c in candidates if c[1] >= top - TIE_TOL), key=lambda c: c[0])


def golden_section_max(
    f: Callable[[float], float], lo: float, hi: float, tol: float = RESOLUTION
) -> list[tuple[float, float]]:
    """Golden-section search for a maximum of ``f`` on ``[lo, hi]``.

    Returns every ``(x, f(x))`` evaluated, ending with the midpoint of the
    final bracket, whose width is at most ``tol``.
    """
    evaluated = []

    def g(x):
        v = f(x)
        evaluated.append((x, v))
        return v

    x1 = hi - _INV_GOLDEN * (hi - lo)
    x2 = lo + _INV_GOLDEN * (hi - lo)
    f1, f2 = g(x1), g(x2)
    while hi - lo > tol:
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INV_GOLDEN * (hi - lo)
            f1 = g(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INV_GOLDEN * (hi - lo)
            f2 = g(x2)
    g(0.5 * (lo + hi))
    return evaluated


def _scale_for(process: PriceProcess | None, offset: float | None, taus):
    if process is None:
        return None
    b = process.t0 if offset is None else offset
    return np.asarray(expected_price(process, b, taus)) / process.u0


def _refine(
    params: YieldParams,
    econ: EconParams,
    objective: str,
    thinnings: tuple[ThinningEvent, ...],
    response: ThinningResponseModel,
    coarse: list[tuple[float, float]],
    lower: float,
    upper: float,
    step: float,
    process: PriceProcess | None = None,
    offset: float | None = None,
):
    tau0, _ = _pick(coarse)
    cache: dict[float, RotationReport] = {}

    def value(tau: float) -> float:
        scaled = econ
        if process is not None:
            scaled = econ.scaled(float(_scale_for(process, offset, tau)))
        plan = ManagementPlan(tau, thinnings, response)
        report = evaluate_plan(params, scaled, plan, step)
        cache[tau] = report
        return _objective_value(report, objective)

    lo = max(tau0 - COARSE_STEP, lower)
    hi = min(tau0 + COARSE_STEP, upper)
    fine = golden_section_max(value, lo, hi) if hi - lo > RESOLUTION else []
    best_tau, _ = _pick(coarse + fine)
    if best_tau not in cache:
        value(best_tau)
    return best_tau, cache[best_tau], fine


def optimize_rotation(
    params: YieldParams,
    econ: EconParams,
    objective: str = "return_rate",
    *,
    tau_max: float = TAU_MAX,
    step: float = DEFAULT_STEP,
    price_process: PriceProcess | None = None,
    offset: float | None = None,
) -> OptimizationResult:
    """Thinning-free rotation age maximizing ``objective`` on ``(0, tau_max]``.

    With ``price_process`` given, every monetary input of a candidate
    rotation ``tau`` is scaled by the mean price level of the window
    ``[offset, offset + tau]``.
    """
    objective = _check_objective(objective)
    if not tau_max >= COARSE_STEP:
        raise DomainError(f"tau_max must be >= {COARSE_STEP}")
    taus = np.arange(COARSE_STEP, math.floor(tau_max / COARSE_STEP) * COARSE_STEP + 0.5, COARSE_STEP)
    trajectory = build_trajectory(params, ManagementPlan(float(taus[-1])), step)
    profit, cap, ret = rotation_curves(
        trajectory, econ, taus, scale=_scale_for(price_process, offset, taus)
    )
    values = ret if objective == "return_rate" else profit
    coarse = [(float(t), float(v)) for t, v in zip(taus, values)]
    best_tau, report, fine = _refine(
        params, econ, objective, (), ConstantResponse(), coarse,
        RESOLUTION, tau_max, step, price_process, offset,
    )
    best_value = _objective_value(report, objective)
    return OptimizationResult(
        best_plan=ManagementPlan(best_tau),
        best_report=report,
        objective=objective,
        trace=tuple(coarse + fine),
        profitable=best_value > 0,
        evaluated=len(coarse) + len(fine),
    )


class _ScheduleScan:
    """Vectorized objective curves for many thinning schedules on one age grid.

    Mirrors :func:`build_trajectory` plus :func:`rotation_curves` for plans
    whose thinnings fall on whole years, evaluating every intensity
    combination of a set of thinning ages at once. Finalists are always
    re-evaluated through the trajectory path.
    """

    def __init__(self, params, econ, response, tau_max, step):
        self.params, self.econ, self.response = params, econ, response
        whole = range(0, int(math.floor(tau_max)) + 1)
        self.ages = sample_grid(tau_max, step, [float(t) for t in whole])
        self.nodes, self.weights = gauss_nodes(self.ages[:-1], self.ages[1:])
        self.node_volume = np.asarray(volume(params, self.nodes))
        self.grid_volume = np.asarray(volume(params, self.ages))
        self.tau_max = tau_max

    def curves(self, when, how):
        """Objective arrays of shape ``(len(how), n_rotations)`` and the rotations."""
        q = np.asarray(how, dtype=float)
        response = self.response
        factor = np.ones((len(q),) + self.nodes.shape)
        removed = np.zeros(len(q))
        for k, t_k in enumerate(when):
            standing = volume(self.params, t_k) * np.ones(len(q))
            for j in range(k):
                standing = standing * response.factor(q[:, j], t_k - when[j])
            removed += q[:, k] * standing
            elapsed = np.maximum(self.nodes - t_k, 0.0)
            f = response.factor(q[:, k, None, None], elapsed[None])
            factor *= np.where(self.nodes[None] >= t_k, f, 1.0)
        pieces = np.sum(self.node_volume * factor * self.weights, axis=-1)
        cumulative = np.concatenate([np.zeros((len(q), 1)), np.cumsum(pieces, axis=1)], axis=1)

        taus = np.arange(when[-1] + COARSE_STEP, self.tau_max + 0.5, COARSE_STEP)
        taus = taus[taus <= self.tau_max]
        idx = np.searchsorted(self.ages, taus)
        terminal = np.ones((len(q), len(taus))) * self.grid_volume[idx]
        for k, t_k in enumerate(when):
            terminal = terminal * response.factor(q[:, k, None], (taus - t_k)[None])
        econ = self.econ
        profit = (
            econ.stumpage_price * (terminal + removed[:, None])
            - econ.establishment_cost - econ.annual_overhead * taus
        ) / taus
        cap = econ.bare_land_value + econ.stumpage_price * cumulative[:, idx] / taus
        return taus, profit, profit / cap


def _age_sets(tau_max: float, max_events: int):
    ages = range(1, int(math.ceil(tau_max)))
    for n in range(1, max_events + 1):
        yield from itertools.combinations(ages, n)


def optimize_thinnings(
    params: YieldParams,
    econ: EconParams,
    response: ThinningResponseModel,
    max_events: int = 1,
    *,
    objective: str = "return_rate",
    tau_max: float = THINNING_TAU_MAX,
    intensities: Sequence[float] = INTENSITIES,
    step: float = DEFAULT_STEP,
    refine_top: int = 5,
    baseline: OptimizationResult | None = None,
) -> OptimizationResult:
    """Exhaustive search over thinning schedules with co-optimized rotation.

    Thinning ages run over whole years below ``tau_max`` and removals over
    ``intensities`` (fractions of standing volume). Each schedule's rotation
    is scanned on whole years after its last thinning; the ``refine_top``
    best schedules are then refined by golden-section search. ``feasible``
    is true when the best schedule strictly beats the thinning-free optimum.
    """
    objective = _check_objective(objective)
    if max_events not in (1, 2):
        raise DomainError("max_events must be 1 or 2")
    if any(not 0 < q < 1 for q in intensities):
        raise DomainError("intensities must lie in (0, 1)")
    if baseline is None:
        baseline = optimize_rotation(params, econ, objective, tau_max=tau_max, step=step)
    base_value = baseline.best_objective

    scan = _ScheduleScan(params, econ, response, tau_max, step)
    ranked = []
    trace = []
    skipped = 0
    for when in _age_sets(tau_max, max_events):
        combos = list(itertools.product(intensities, repeat=len(when)))
        taus, profit, ret = scan.curves(when, combos)
        values = ret if objective == "return_rate" else profit
        for how, row in zip(combos, values):
            if not np.all(np.isfinite(row)):
                skipped += 1
                continue
            tau_best, value = _pick(list(zip(taus.tolist(), row.tolist())))
            trace.append(((when, how, tau_best), value))
            ranked.append((value, -tau_best, when, how))

    if not ranked:
        return replace(baseline, trace=tuple(trace), baseline=baseline, feasible=False, skipped=skipped)

    ranked.sort(key=lambda r: (r[0], r[1]), reverse=True)
    best = None
    for value, neg_tau, when, how in ranked[:refine_top]:
        try:
            events = schedule_from_intensities(params, when, how, response)
            tau, report, fine = _refine(
                params, econ, objective, events, response, [(-neg_tau, value)],
                when[-1] + RESOLUTION, tau_max, step,
            )
        except ForestReturnError:
            skipped += 1
            continue
        trace.extend(((when, how, t), v) for t, v in fine)
        candidate = (_objective_value(report, objective), -tau, ManagementPlan(tau, events, response), report)
        if best is None or candidate[0] > best[0] + TIE_TOL or (
            abs(candidate[0] - best[0]) <= TIE_TOL and candidate[1] > best[1]
        ):
            best = candidate
    if best is None:
        return replace(baseline, trace=tuple(trace), baseline=baseline, feasible=False, skipped=skipped)

    value, _, plan, report = best
    return OptimizationResult(
        best_plan=plan,
        best_report=report,
        objective=objective,
        trace=tuple(trace),
        profitable=value > 0,
        baseline=baseline,
        feasible=value > base_value + TIE_TOL * max(1.0, abs(base_value)),
        skipped=skipped,
        evaluated=len(ranked),
    )


def thinning_threshold(
    params: YieldParams,
    econ: EconParams,
    *,
    lo: float = 0.0,
    hi: float = 1.0,
    tol: float = 1e-3,
    max_events: int = 1,
    **search,
) -> float | None:
    """Smallest persistent-response ``delta`` at which some thinning becomes feasible.

    Bisects the feasibility verdict on ``[lo, hi]``; returns ``None`` if
    thinning is infeasible even at ``hi``.
    """
    baseline = optimize_rotation(
        params, econ, search.get("objective", "return_rate"),
        tau_max=search.get("tau_max", THINNING_TAU_MAX), step=search.get("step", DEFAULT_STEP),
    )

    def feasible(delta: float) -> bool:
        result = optimize_thinnings(
            params, econ, ConstantResponse(delta), max_events, baseline=baseline, **search
        )
        return bool(result.feasible)

    if not feasible(hi):
        return None
    if feasible(lo):
        return lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


def rotation_by_offset(
    params: YieldParams,
    econ: EconParams,
    process: PriceProcess,
    offsets: Sequence[float],
    objective: str = "return_rate",
    **kwargs,
) -> list[tuple[float, OptimizationResult]]:
    """Optimal rotation when prices and expenses follow ``process`` from each window offset."""
    return [
        (float(b), optimize_rotation(params, econ, objective, price_process=process, offset=b, **kwargs))
        for b in offsets
    ]


@dataclass(frozen=True)
class StylizedParams:
    """Linearized stand: net log price ``f``, constant growth rate, accumulated expenses ``g``."""

    f: float
    growth_rate: float
    g: float

    def __post_init__(self):
        for name in ("f", "growth_rate", "g"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be > 0, got {value!r}")


def stylized_return(sp: StylizedParams, tau):
    """Return rate of the linearized stand: accumulated profit over half the terminal capital times tau."""
    tau = np.asarray(tau, dtype=float)
    if np.any(tau <= 0):
        raise DomainError("tau must be > 0")
    revenue = sp.f * sp.growth_rate * tau
    value = (revenue - sp.g) / (0.5 * tau * (revenue + sp.g))
    return float(value) if value.ndim == 0 else value


def stylized_optimal_rotation(sp: StylizedParams) -> float:
    return sp.g / (sp.f * sp.growth_rate * (math.sqrt(2.0) - 1.0))


@dataclass(frozen=True)
class SweepRow:
    price_multiplier: float
    expense_multiplier: float
    optimal_rotation: float
    optimal_return_rate: float


def sensitivity_sweep(
    params: YieldParams,
    econ: EconParams,
    price_multipliers: Sequence[float],
    expense_multipliers: Sequence[float],
    **kwargs,
) -> list[SweepRow]:
    """Re-optimize the rotation for every (price, expense) multiplier pair.

    Rows are ordered by price multiplier, then expense multiplier. Bare land
    value moves with the expense multiplier.
    """
    rows = []
    for pm in price_multipliers:
        for em in expense_multipliers:
            result = optimize_rotation(params, econ.scaled(pm, em), "return_rate", **kwargs)
            rows.append(
                SweepRow(float(pm), float(em), result.best_plan.rotation, result.best_objective)
            )
    return rows

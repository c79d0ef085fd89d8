import math

import numpy as np
import pytest
from scipy import integrate

from forest_return import (
    ConstantResponse,
    DomainError,
    EconParams,
    ManagementPlan,
    NoBreakEvenError,
    ThinningEvent,
    YieldParams,
    accrual_ledger,
    break_even_rotation,
    build_trajectory,
    capitalization,
    evaluate_plan,
    expected_rates,
    operating_profit_rate,
    rotation_curves,
    volume,
)

P = YieldParams(a=120.0, m=0.0157, c=1.73)
E = EconParams(stumpage_price=500.0, establishment_cost=1000.0, bare_land_value=1000.0)


def test_econ_validation():
    with pytest.raises(DomainError):
        EconParams(0.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        EconParams(1.0, -1.0, 1.0)
    with pytest.raises(DomainError):
        EconParams(1.0, 1.0, 1.0, annual_overhead=-2.0)


def test_scaled_moves_land_with_expenses():
    e = E.scaled(2.0, 3.0)
    assert (e.stumpage_price, e.establishment_cost, e.bare_land_value) == (1000.0, 3000.0, 3000.0)
    assert E.scaled(1.5) == EconParams(750.0, 1500.0, 1500.0)


def test_capitalization_examples():
    traj = build_trajectory(P, ManagementPlan(30.0))
    assert capitalization(traj, E, 0.0) == 1000.0
    econ = EconParams(600.0, 0.0, 500.0)
    a = 10.0 / (1 - math.exp(-1.0))
    t10 = build_trajectory(YieldParams(a, 1.0, 1.0), ManagementPlan(2.0))
    assert capitalization(t10, econ, 1.0) == pytest.approx(6500.0)
    with pytest.raises(DomainError):
        capitalization(traj, E, 31.0)


def test_capitalization_drops_by_harvest_value_at_thinning():
    plan = ManagementPlan(40.0, (ThinningEvent(20.0, 7.0),), ConstantResponse(0.3))
    traj = build_trajectory(P, plan)
    before = E.bare_land_value + E.stumpage_price * traj.volume_at(20.0, side="left")
    assert before - capitalization(traj, E, 20.0) == pytest.approx(500.0 * 7.0, rel=1e-12)


def test_profit_rate_and_impulse():
    traj = build_trajectory(P, ManagementPlan(30.0))
    rate = operating_profit_rate(traj, E, 12.0)
    h = 1e-6
    fd = (volume(P, 12 + h) - volume(P, 12 - h)) / (2 * h)
    assert rate.rate == pytest.approx(500.0 * fd, rel=1e-7)
    assert rate.impulse == 0.0
    assert operating_profit_rate(traj, E, 0.0).impulse == -1000.0


def test_ledger_capitalization_at_least_land():
    plan = ManagementPlan(60.0, (ThinningEvent(30.0, 20.0),))
    ledger = accrual_ledger(build_trajectory(P, plan), E)
    assert np.all(ledger.capitalization >= E.bare_land_value)
    assert ledger.profit_rate_samples.shape == ledger.capitalization_samples.shape == (len(ledger.ages), 2)


def test_ratio_identity():
    report = evaluate_plan(P, E, ManagementPlan(25.0))
    assert report.expected_return_rate * report.expected_capitalization == pytest.approx(
        report.expected_profit_rate, rel=1e-12
    )


def test_expected_rates_against_quadrature():
    plan = ManagementPlan(50.0, (ThinningEvent(22.0, 10.0),), ConstantResponse(0.5))
    traj = build_trajectory(P, plan)
    report = expected_rates(traj, E)
    gross = E.stumpage_price * (traj.terminal_volume + 10.0)
    assert report.expected_profit_rate == pytest.approx((gross - E.establishment_cost) / 50.0, rel=1e-12)
    vol = sum(
        integrate.quad(lambda t: traj.volume_at(t), lo, hi, epsrel=1e-13)[0]
        for lo, hi in [(0, 22), (22, 23), (23, 50)]
    )
    assert report.expected_capitalization == pytest.approx(E.bare_land_value + E.stumpage_price * vol / 50, rel=1e-11)


def test_zero_growth_stand_has_zero_return():
    report = evaluate_plan(YieldParams(1e-300, 0.01, 1.0), EconParams(1.0, 0.0, 100.0), ManagementPlan(40.0))
    assert report.expected_return_rate == pytest.approx(0.0, abs=1e-300)


def test_short_rotation_does_not_break_even():
    report = evaluate_plan(P, E, ManagementPlan(3.0))
    assert report.expected_profit_rate < 0
    assert not report.break_even


@pytest.mark.parametrize("start", [0.0, 3.7, 22.0, 29.99, -11.0, 95.0])
def test_start_point_independence(start):
    plan = ManagementPlan(30.0, (ThinningEvent(22.0, 5.0),), ConstantResponse(0.8))
    traj = build_trajectory(P, plan)
    assert expected_rates(traj, E, start).expected_return_rate == pytest.approx(
        expected_rates(traj, E).expected_return_rate, rel=1e-9
    )


def test_rotation_curves_match_individual_trajectories():
    long = build_trajectory(P, ManagementPlan(60.0))
    taus = np.array([5.0, 17.3, 33.0, 60.0])
    profit, cap, ret = rotation_curves(long, E, taus)
    for i, tau in enumerate(taus):
        r = evaluate_plan(P, E, ManagementPlan(float(tau)))
        assert profit[i] == pytest.approx(r.expected_profit_rate, rel=1e-10, abs=1e-9)
        assert cap[i] == pytest.approx(r.expected_capitalization, rel=1e-10)
        assert ret[i] == pytest.approx(r.expected_return_rate, rel=1e-10, abs=1e-12)


def test_rotation_curves_reject_rotation_before_thinning():
    traj = build_trajectory(P, ManagementPlan(60.0, (ThinningEvent(20.0, 5.0),)))
    with pytest.raises(DomainError):
        rotation_curves(traj, E, [10.0])


def test_break_even_matches_dense_scan():
    tau = break_even_rotation(P, E)
    grid = np.round(np.arange(0.01, 30.0, 0.01), 12)
    long = build_trajectory(P, ManagementPlan(30.0))
    profit, _, _ = rotation_curves(long, E, grid)
    first = grid[np.argmax(profit >= 0)]
    assert first - 0.01 <= tau <= first + 1e-9
    assert evaluate_plan(P, E, ManagementPlan(tau)).expected_profit_rate == pytest.approx(0.0, abs=1e-3)


def test_break_even_edge_cases():
    assert break_even_rotation(P, EconParams(500.0, 0.0, 1000.0)) == 0.0
    with pytest.raises(NoBreakEvenError):
        break_even_rotation(P, EconParams(1.0, 1000.0, 0.0))

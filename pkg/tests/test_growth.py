import math

import mpmath
import numpy as np
import pytest

from forest_return import (
    ConstantResponse,
    DecayingResponse,
    DomainError,
    InfeasibleThinningError,
    ManagementPlan,
    ThinningEvent,
    YieldParams,
    build_trajectory,
    volume,
    volume_derivative,
)
from forest_return.growth import (
    apply_thinning_constant,
    apply_thinning_decaying,
    sample_grid,
    schedule_from_intensities,
)

P = YieldParams(a=100.0, m=0.05, c=2.0)


def test_volume_zero_at_age_zero():
    assert volume(P, 0.0) == 0.0
    assert volume(YieldParams(3.0, 0.2, 0.4), 0.0) == 0.0


def test_volume_saturates():
    assert volume(P, 1e4) == pytest.approx(100.0, rel=1e-15)


def test_volume_example_against_high_precision():
    mpmath.mp.dps = 30
    expected = 100 * (1 - mpmath.exp(-1)) ** 2
    assert volume(P, 20.0) == pytest.approx(float(expected), rel=1e-14)
    assert float(expected) == pytest.approx(39.958, abs=1e-3)


def test_volume_vectorized_matches_scalar():
    ages = np.array([0.0, 1.5, 20.0, 80.0])
    assert np.array_equal(volume(P, ages), np.array([volume(P, t) for t in ages]))


def test_negative_age_rejected():
    with pytest.raises(DomainError):
        volume(P, -1.0)
    with pytest.raises(DomainError):
        volume_derivative(P, [1.0, -0.1])


@pytest.mark.parametrize("field", ["a", "m", "c"])
def test_yield_params_must_be_positive(field):
    kwargs = dict(a=1.0, m=1.0, c=1.0)
    kwargs[field] = 0.0
    with pytest.raises(DomainError):
        YieldParams(**kwargs)


def test_derivative_central_difference_example():
    h = 1e-5
    fd = (volume(P, 20 + h) - volume(P, 20 - h)) / (2 * h)
    assert volume_derivative(P, 20.0) == pytest.approx(fd, rel=1e-6)


def test_derivative_vanishes_at_saturation_and_is_inf_at_zero_for_small_c():
    assert volume_derivative(P, 1e4) == pytest.approx(0.0, abs=1e-12)
    assert volume_derivative(YieldParams(1.0, 1.0, 0.5), 0.0) == math.inf
    assert volume_derivative(YieldParams(1.0, 1.0, 2.0), 0.0) == 0.0


def test_constant_thinning_examples():
    assert apply_thinning_constant(P, 50.0, 10.0, 3.0, 0.0) == pytest.approx(35.0)
    assert apply_thinning_constant(P, 50.0, 10.0, 3.0, 0.9) == pytest.approx(44.45)
    assert apply_thinning_constant(P, 50.0, 10.0, 1e-12, 0.9) == pytest.approx(50.0)


def test_constant_thinning_rejects_overharvest_and_empty_stand():
    with pytest.raises(InfeasibleThinningError):
        apply_thinning_constant(P, 50.0, 10.0, 11.0, 0.0)
    with pytest.raises(InfeasibleThinningError):
        apply_thinning_constant(P, 50.0, 0.0, 1.0, 0.0)


def test_decaying_thinning_examples():
    assert apply_thinning_decaying(P, 50.0, 10.0, 3.0, 0.4, 0.0) == pytest.approx(35.0)
    assert apply_thinning_decaying(P, 50.0, 10.0, 3.0, 0.0, 40.0) == pytest.approx(35.0)
    factor = apply_thinning_decaying(P, 1.0, 10.0, 3.0, 0.1, 10.0)
    assert factor == pytest.approx(1 - 0.3 * math.exp(-1))
    assert factor == pytest.approx(0.8896, abs=1e-4)


def test_negative_response_parameters_rejected():
    with pytest.raises(DomainError):
        ConstantResponse(-0.1)
    with pytest.raises(DomainError):
        DecayingResponse(-0.1)


def test_thinning_event_requires_positive_values():
    with pytest.raises(DomainError):
        ThinningEvent(0.0, 1.0)
    with pytest.raises(DomainError):
        ThinningEvent(5.0, 0.0)


def test_plan_rejects_late_or_unordered_thinnings():
    with pytest.raises(DomainError):
        ManagementPlan(20.0, (ThinningEvent(20.0, 1.0),))
    with pytest.raises(DomainError):
        ManagementPlan(30.0, (ThinningEvent(10.0, 1.0), ThinningEvent(10.0, 1.0)))
    with pytest.raises(DomainError):
        ManagementPlan(0.0)


def test_unthinned_trajectory_matches_yield_curve():
    traj = build_trajectory(P, ManagementPlan(37.3), step=0.1)
    assert traj.ages[0] == 0.0 and traj.ages[-1] == 37.3
    assert np.all(np.diff(traj.ages) > 0)
    np.testing.assert_array_equal(traj.volumes, volume(P, traj.ages))


def test_volume_drops_by_removal_at_event():
    plan = ManagementPlan(40.0, (ThinningEvent(17.35, 6.0),), ConstantResponse(0.5))
    traj = build_trajectory(P, plan)
    drop = traj.volume_at(17.35, side="left") - traj.volume_at(17.35, side="right")
    assert drop == pytest.approx(6.0, rel=1e-12)
    assert 17.35 in traj.ages and 18.35 in traj.ages
    rec = traj.events[0]
    assert rec.pre_volume == pytest.approx(volume(P, 17.35))
    assert rec.intensity == pytest.approx(6.0 / volume(P, 17.35))


def test_constant_response_holds_at_whole_years():
    q, delta = 0.3, 0.9
    (event,) = schedule_from_intensities(P, [12.0], [q], ConstantResponse(delta))
    traj = build_trajectory(P, ManagementPlan(30.0, (event,), ConstantResponse(delta)))
    for k in range(1, 10):
        assert traj.volume_at(12.0 + k) == pytest.approx(volume(P, 12.0 + k) * (1 - q) * (1 + q * delta), rel=1e-13)


def test_terminal_volume_scales_by_retained_fraction_without_boost():
    q = 0.25
    (event,) = schedule_from_intensities(P, [10.0], [q], ConstantResponse())
    traj = build_trajectory(P, ManagementPlan(55.0, (event,)))
    # step-by-step recursion from the annual thinning rule
    v = None
    for t in range(11, 56):
        v = apply_thinning_constant(P, volume(P, t), volume(P, 10.0), event.removed, 0.0)
    assert traj.terminal_volume == pytest.approx(v, rel=1e-13)
    assert traj.terminal_volume == pytest.approx((1 - q) * volume(P, 55.0), rel=1e-13)


def test_two_thinnings_compound():
    resp = DecayingResponse(0.2)
    events = schedule_from_intensities(P, [10.0, 20.0], [0.2, 0.3], resp)
    traj = build_trajectory(P, ManagementPlan(50.0, events, resp))
    expected = volume(P, 50.0) * (1 - 0.2 * math.exp(-0.2 * 40)) * (1 - 0.3 * math.exp(-0.2 * 30))
    assert traj.terminal_volume == pytest.approx(expected, rel=1e-13)
    assert traj.events[1].intensity == pytest.approx(0.3)


def test_infeasible_second_thinning_is_identified():
    plan = ManagementPlan(50.0, (ThinningEvent(10.0, 1.0), ThinningEvent(20.0, 1e3)))
    with pytest.raises(InfeasibleThinningError) as info:
        build_trajectory(P, plan)
    assert info.value.index == 1


def test_integral_matches_quadrature():
    from scipy import integrate

    plan = ManagementPlan(45.0, (ThinningEvent(15.0, 5.0),), ConstantResponse(0.6))
    traj = build_trajectory(P, plan)
    pieces = [(0, 15), (15, 16), (16, 45)]
    expected = sum(integrate.quad(lambda t: traj.volume_at(t), lo, hi, epsrel=1e-13)[0] for lo, hi in pieces)
    assert traj.integral(0.0, 45.0) == pytest.approx(expected, rel=1e-11)
    assert traj.integral(3.33, 27.1) == pytest.approx(
        integrate.quad(lambda t: traj.volume_at(t), 3.33, 27.1, points=[15, 16], epsrel=1e-13)[0], rel=1e-11
    )


def test_sample_grid_keeps_breakpoints_without_near_duplicates():
    grid = sample_grid(2.0, 0.1, specials=[0.3000000000001, 1.05])
    assert 1.05 in grid and grid[-1] == 2.0
    assert np.all(np.diff(grid) > 1e-9)


def test_bad_step_rejected():
    with pytest.raises(DomainError):
        build_trajectory(P, ManagementPlan(10.0), step=0.0)

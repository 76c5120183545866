import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from curvepolish.qp_curve import (
    Box,
    InfeasiblePinError,
    Pin,
    PinSchedule,
    QpSettings,
    assign_pin_times,
    curve_arc_stats,
    curve_hessian,
    curve_objective,
    kkt_residual,
    read_curve_csv,
    solve_curve_qp,
    write_curve_csv,
)

LAM = 1e-3


def dense_equality_solve(schedule, lam=LAM):
    """Reference: eliminate the pinned variables and solve the reduced system densely."""
    n = schedule.horizon + 1
    H = curve_hessian(n, lam).toarray()
    pins = schedule.times
    free = np.setdiff1d(np.arange(n), pins)
    out = np.empty((n, schedule.dim))
    for d in range(schedule.dim):
        x = np.zeros(n)
        x[pins] = schedule.points[:, d]
        rhs = -H[np.ix_(free, pins)] @ x[pins]
        x[free] = np.linalg.solve(H[np.ix_(free, free)], rhs)
        out[:, d] = x
    return out


def random_schedule(rng, dim, horizon, n_pins, scale=1.0):
    times = np.sort(rng.choice(np.arange(1, horizon), size=n_pins - 2, replace=False))
    times = [0, *times.tolist(), horizon]
    pts = rng.uniform(-scale, scale, (n_pins, dim))
    return PinSchedule(tuple(Pin(p, t) for p, t in zip(pts, times)), horizon)


def test_hessian_matches_objective_formula():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(17, 2))
    H = curve_hessian(17, LAM)
    quad = sum(0.5 * x[:, d] @ (H @ x[:, d]) for d in range(2))
    assert quad == pytest.approx(curve_objective(x, LAM), rel=1e-12)


def test_objective_by_hand():
    # a_1 = x1 - x0 = 1, a_2 = x2 - 2x1 + x0 = -1; lengths 1 and 0
    x = np.array([[0.0], [1.0], [1.0]])
    assert curve_objective(x, 0.5) == pytest.approx(1 + 1 + 0.5 * 1)


def test_constants_are_in_the_null_space():
    H = curve_hessian(30, LAM)
    assert np.abs(H @ np.ones(30)).max() < 1e-12


@pytest.mark.parametrize("seed", range(10))
def test_matches_dense_solve_when_box_inactive(seed):
    rng = np.random.default_rng(seed)
    dim = int(rng.integers(1, 4))
    horizon = int(rng.integers(8, 60))
    sched = random_schedule(rng, dim, horizon, int(rng.integers(2, 6)))
    grid = solve_curve_qp(sched, Box.cube(-1e3, 1e3, dim))
    np.testing.assert_allclose(grid.points, dense_equality_solve(sched), atol=1e-6, rtol=0)


def test_pins_hit_bitwise_and_box_respected():
    rng = np.random.default_rng(0)
    sched = random_schedule(rng, 2, 60, 6, scale=1.0)
    box = Box.cube(-1.0, 1.0, 2)
    grid = solve_curve_qp(sched, box)
    for pin in sched.pins:
        assert np.array_equal(grid.points[pin.time], pin.point)
    assert box.contains(grid.points)
    assert grid.pin_indices == frozenset(sched.times.tolist())


def test_tight_box_kkt_residual():
    rng = np.random.default_rng(11)
    sched = random_schedule(rng, 3, 50, 5, scale=1.0)
    box = Box.cube(-1.0, 1.0, 3)
    grid = solve_curve_qp(sched, box)
    # unconstrained curve overshoots, so some bounds must be active
    free_curve = dense_equality_solve(sched)
    assert np.abs(free_curve).max() > 1.0
    assert kkt_residual(grid, box, LAM) <= 1e-8


def test_perturbations_do_not_lower_the_objective():
    rng = np.random.default_rng(5)
    sched = random_schedule(rng, 2, 40, 4)
    box = Box.cube(-1.0, 1.0, 2)
    grid = solve_curve_qp(sched, box)
    base = curve_objective(grid.points, LAM)
    free = np.setdiff1d(np.arange(41), sched.times)
    for _ in range(50):
        y = grid.points.copy()
        i, d = rng.choice(free), rng.integers(2)
        y[i, d] = np.clip(y[i, d] + rng.choice([-1e-3, 1e-3]), -1, 1)
        assert curve_objective(y, LAM) >= base - 1e-12


def test_coordinates_decouple():
    rng = np.random.default_rng(8)
    sched = random_schedule(rng, 3, 30, 4)
    box = Box(np.array([-5.0, -2.0, -1.0]), np.array([5.0, 2.0, 1.0]))
    joint = solve_curve_qp(sched, box)
    for d in range(3):
        one = PinSchedule(tuple(Pin(p.point[[d]], p.time) for p in sched.pins), sched.horizon)
        single = solve_curve_qp(one, Box(box.lower[[d]], box.upper[[d]]))
        np.testing.assert_allclose(single.points[:, 0], joint.points[:, d], atol=1e-10)


def test_curve_is_smooth_between_pins():
    # acceleration of the solved curve is far below that of linear interpolation's kinks
    sched = PinSchedule.equally_spaced([(0, 0), (3, 1), (0, 0), (3, 3), (0, 0)], 299)
    grid = solve_curve_qp(sched, Box.cube(-10, 10, 2))
    acc = np.linalg.norm(np.diff(grid.points, 2, axis=0), axis=1)
    lin = np.column_stack([np.interp(np.arange(300), sched.times, sched.points[:, d]) for d in range(2)])
    assert acc.max() < np.linalg.norm(np.diff(lin, 2, axis=0), axis=1).max() / 5


def test_pin_outside_box_is_infeasible():
    sched = PinSchedule.with_spacing([(0.0,), (2.0,)], 5)
    with pytest.raises(InfeasiblePinError) as err:
        solve_curve_qp(sched, Box.cube(-1, 1, 1))
    assert err.value.pin_index == 1


def test_schedule_validation():
    with pytest.raises(ValueError):
        PinSchedule((Pin(np.zeros(1), 0),), 0)
    with pytest.raises(ValueError):
        PinSchedule((Pin(np.zeros(1), 0), Pin(np.ones(1), 0)), 0)
    with pytest.raises(ValueError):
        PinSchedule((Pin(np.zeros(1), 0), Pin(np.ones(1), 3)), 4)


def test_equal_spacing_gives_leftover_to_early_segments():
    assert assign_pin_times(5, 79) == [0, 20, 40, 60, 79]
    assert assign_pin_times(3, 10) == [0, 5, 10]
    assert assign_pin_times(4, 3) == [0, 1, 2, 3]
    with pytest.raises(ValueError):
        assign_pin_times(5, 3)


def test_box_validation():
    with pytest.raises(ValueError):
        Box(np.array([1.0]), np.array([0.0]))
    assert Box.cube(-2, 3, 4).width.tolist() == [5.0] * 4


def test_csv_round_trip(tmp_path):
    sched = PinSchedule.equally_spaced([(0, 0), (1, 2)], 9)
    grid = solve_curve_qp(sched, Box.cube(-5, 5, 2))
    write_curve_csv(grid, tmp_path / "c.csv")
    np.testing.assert_array_equal(read_curve_csv(tmp_path / "c.csv"), grid.points)
    assert (tmp_path / "c.csv").read_text().splitlines()[0] == "index,x_1,x_2"


def test_arc_stats():
    sched = PinSchedule.equally_spaced([(0.0,), (1.0,)], 4)
    stats = curve_arc_stats(solve_curve_qp(sched, Box.cube(-1, 2, 1)))
    assert stats.total_length == pytest.approx(1.0)
    assert len(stats.spacings) == 4


def test_settings_validation():
    with pytest.raises(ValueError):
        QpSettings(length_penalty=-1)
    with pytest.raises(ValueError):
        QpSettings(kkt_tolerance=0)


@settings(max_examples=40, deadline=None)
@given(
    seed=st.integers(0, 2**31),
    dim=st.integers(1, 3),
    horizon=st.integers(4, 60),
    n_pins=st.integers(2, 5),
    half_width=st.floats(0.3, 3.0),
)
def test_solution_is_feasible_and_stationary(seed, dim, horizon, n_pins, half_width):
    n_pins = min(n_pins, horizon + 1)
    rng = np.random.default_rng(seed)
    sched = random_schedule(rng, dim, horizon, n_pins, scale=min(1.0, half_width))
    box = Box.cube(-half_width, half_width, dim)
    grid = solve_curve_qp(sched, box)
    assert box.contains(grid.points)
    for pin in sched.pins:
        assert np.array_equal(grid.points[pin.time], pin.point)
    assert kkt_residual(grid, box, LAM) <= 1e-8

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from curvepolish.line_walker import (
    GridExhausted,
    WalkerSettings,
    WalkState,
    fit_surrogate,
    largest_gap_midpoint,
    propose_next,
    walk,
    write_walk_log,
)
from curvepolish.qp_curve import CurveGrid


def line_grid(n, known=None, pins=()):
    return CurveGrid(np.arange(n, dtype=float)[:, None], known or {}, frozenset(pins))


def state_with(n, samples, budget=10):
    st_ = WalkState(grid_size=n, budget_remaining=budget)
    for i, v in samples.items():
        st_.record(i, v)
    return st_


@pytest.mark.parametrize("kind", ["spline", "pchip"])
def test_surrogate_of_equal_values_is_flat(kind):
    s = fit_surrogate(state_with(11, {0: 1.0, 10: 1.0}), kind)
    np.testing.assert_allclose(s.on_grid(11), 1.0)


@pytest.mark.parametrize("kind", ["spline", "pchip"])
def test_surrogate_follows_sample_ordering(kind):
    s = fit_surrogate(state_with(11, {0: 0.0, 5: 25.0, 10: 100.0}), kind).on_grid(11)
    assert np.all(np.diff(s) >= 0)
    v = fit_surrogate(state_with(11, {0: 25.0, 5: 0.0, 10: 25.0}), kind).on_grid(11)
    assert np.all(np.diff(v[:6]) <= 0) and np.all(np.diff(v[5:]) >= 0)


def test_surrogate_exact_at_samples_and_needs_two():
    samples = {0: 3.0, 4: -1.0, 9: 2.5, 20: 0.0}
    s = fit_surrogate(state_with(21, samples)).on_grid(21)
    for i, v in samples.items():
        assert s[i] == v
    with pytest.raises(ValueError):
        fit_surrogate(state_with(5, {2: 1.0}))


def test_surrogate_error_shrinks_with_more_samples():
    n = 200
    f = np.sin(np.arange(n) / 15.0)
    errs = []
    for m in (8, 16, 40):
        idx = np.unique(np.linspace(0, n - 1, m).round().astype(int))
        s = fit_surrogate(state_with(n, {int(i): f[i] for i in idx})).on_grid(n)
        errs.append(np.abs(s - f).max())
    assert errs[0] > errs[1] > errs[2]


def test_two_samples_fall_back_to_gap_midpoint():
    st_ = state_with(101, {0: 0.0, 100: 5.0})
    s = fit_surrogate(st_)
    assert propose_next(st_, s) == (50, "gap")


def test_v_shape_proposes_next_to_the_minimum():
    st_ = state_with(101, {0: 2.0, 50: 0.0, 100: 2.0})
    s = fit_surrogate(st_)
    assert int(np.argmin(s.on_grid(101))) == 50
    index, reason = propose_next(st_, s)
    assert reason == "extremum" and index in (49, 51)


def test_all_extrema_tabu_gives_gap_midpoint():
    st_ = state_with(101, {0: 2.0, 50: 0.0, 100: 2.0})
    st_.tabu = {50: 3}
    index, reason = propose_next(st_, fit_surrogate(st_), WalkerSettings(tabu_radius=5))
    assert reason == "gap"
    assert index == largest_gap_midpoint(st_) == 25


def test_exhausted_grid():
    st_ = state_with(3, {0: 0.0, 1: 1.0, 2: 0.0})
    with pytest.raises(GridExhausted):
        propose_next(st_, fit_surrogate(st_))


def test_unimodal_walk_finds_minimum():
    m = 137
    result = walk(line_grid(501), lambda x: (x[0] - m) ** 2, 30)
    assert result.best_index == m
    assert result.evaluations <= 30


def test_nothing_to_return_without_seeds_or_budget():
    with pytest.raises(RuntimeError):
        walk(line_grid(10), lambda x: 0.0, 0)


def test_zero_budget_returns_best_seed():
    calls = []
    grid = line_grid(50, known={3: 1.0, 40: -2.0})
    result = walk(grid, lambda x: calls.append(x) or 0.0, 0)
    assert calls == []
    assert (result.best_index, result.best_value) == (40, -2.0)


def test_seed_value_reaches_duplicate_pin_points():
    pts = np.array([[0.0], [1.0], [2.0], [1.0], [0.0]])
    grid = CurveGrid(pts, {0: 5.0}, frozenset({0, 2, 4}))
    result = walk(grid, lambda x: float(x[0]), 0)
    assert result.state.sampled == {0: 5.0, 4: 5.0}


def test_objective_failure_aborts_with_best_so_far():
    def f(x):
        if x[0] > 40:
            raise RuntimeError("simulator crashed")
        return float(x[0])

    result = walk(line_grid(101, known={10: 3.0}), f, 20)
    assert result.aborted
    assert result.best_value == 0.0  # index 0 was evaluated before the crash


def test_final_eval_spends_last_call_on_surrogate_minimum():
    result = walk(line_grid(301), lambda x: (x[0] - 211.4) ** 2, 6, WalkerSettings(final_eval=True))
    reasons = [r for *_, r in result.log]
    assert reasons.count("final") <= 1
    assert result.evaluations == 6


def test_log_csv(tmp_path):
    result = walk(line_grid(101, known={0: 1.0}), lambda x: abs(x[0] - 30), 5)
    write_walk_log(result, tmp_path / "w.csv")
    lines = (tmp_path / "w.csv").read_text().splitlines()
    assert lines[0] == "step,index,value,reason"
    assert len(lines) == 1 + len(result.log) == 7


def test_small_grid_gets_exhausted_without_revisits():
    result = walk(line_grid(7), lambda x: float(np.cos(x[0])), 100)
    assert result.evaluations == 7
    assert sorted(result.state.sampled) == list(range(7))


@settings(max_examples=50, deadline=None)
@given(
    n=st.integers(3, 400),
    budget=st.integers(0, 40),
    seed=st.integers(0, 2**31),
    n_known=st.integers(0, 3),
)
def test_walk_invariants(n, budget, seed, n_known):
    rng = np.random.default_rng(seed)
    values = rng.normal(size=n)
    known = {int(i): float(values[i]) for i in rng.choice(n, size=min(n_known, n), replace=False)}
    assume(budget > 0 or known)
    calls = []

    def f(x):
        calls.append(int(x[0]))
        return float(values[int(x[0])])

    result = walk(line_grid(n, known), f, budget)
    assert len(calls) == result.evaluations <= budget
    assert len(set(calls)) == len(calls)
    assert not set(calls) & set(known)
    # best-so-far over the log is monotone and ends at the reported best
    running = np.minimum.accumulate([v for _, _, v, _ in result.log]) if result.log else []
    if len(running):
        assert running[-1] == result.best_value
    if budget >= n - len(known):
        assert result.best_value == values.min()


@settings(max_examples=30, deadline=None)
@given(m=st.integers(0, 500))
def test_unimodal_property(m):
    assert walk(line_grid(501), lambda x: (x[0] - m) ** 2, 30).best_index == m

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sinai.env import Environment, EnvironmentLaw, sample_environment
from sinai.errors import InvalidRange, OutOfWindow, WindowExhausted
from oracles import harmonic_oracle, hitting_time_oracle
from sinai.rwre import (ReflectedSpec, apply_transition_operator, expected_hitting_time_reflected,
                        hitting_probabilities, hitting_probability, hitting_time_samples,
                        invariant_function, simulate_walk, write_checkpoints_csv)

SIMPLE = (0.5, 0.0, 0.5)


def simple_env(lo, hi):
    return Environment.from_sites(lo, [SIMPLE] * (hi - lo + 1))


def test_zero_steps():
    res = simulate_walk(simple_env(-5, 5), 2, 0, seed=1)
    assert res.final_position == 2 and res.steps == 0


def test_forced_right():
    env = Environment.from_sites(-2, [(0.0, 0.0, 1.0)] * 20)
    assert simulate_walk(env, 0, 10, seed=3).final_position == 10


def test_window_exhausted_reports_step():
    env = Environment.from_sites(-2, [(0.0, 0.0, 1.0)] * 6)
    with pytest.raises(WindowExhausted) as exc:
        simulate_walk(env, 0, 10, seed=3)
    assert exc.value.steps == 4


def test_walk_deterministic_and_checkpoints(tmp_path):
    env = sample_environment(EnvironmentLaw(lazy_weight=0.3), -300, 300, 1)
    cps = [0, 1, 7, 100, 999]
    a = simulate_walk(env, 0, 1000, checkpoints=cps, seed=42)
    b = simulate_walk(env, 0, 1000, checkpoints=cps, seed=42)
    assert a == b
    assert a.positions_at[0] == 0 and abs(a.positions_at[1]) <= 1
    steps = sorted(a.positions_at)
    for s, t in zip(steps, steps[1:]):
        assert abs(a.positions_at[t] - a.positions_at[s]) <= t - s
    assert abs(a.final_position - a.positions_at[999]) <= 1
    write_checkpoints_csv(a, tmp_path / "cp.csv")
    rows = (tmp_path / "cp.csv").read_text().splitlines()
    assert rows[0] == "step,position" and len(rows) == 6


@pytest.mark.slow
def test_simple_walk_variance():
    env = simple_env(-2000, 2000)
    x = np.array([simulate_walk(env, 0, 10**4, seed=s).final_position for s in range(10**5)])
    assert 0.97 <= x.var() / 1e4 <= 1.03


def test_hitting_probability_symmetric():
    assert hitting_probability(simple_env(-5, 5), 5, 5, 0) == pytest.approx(0.5, abs=1e-15)


def test_hitting_probability_boundaries():
    env = sample_environment(EnvironmentLaw(), -10, 10, 2)
    assert hitting_probability(env, 4, 6, 6) == 0.0
    assert hitting_probability(env, 4, 6, -4) == 1.0


def test_hitting_probability_window_six_matches_solve():
    env = sample_environment(EnvironmentLaw(), -6, 6, 8)
    ref = harmonic_oracle(env, 6, 6)
    got = [hitting_probability(env, 6, 6, z) for z in range(-6, 7)]
    assert np.allclose(got, ref, rtol=0, atol=1e-12)
    assert np.allclose(hitting_probabilities(env, 6, 6), ref, rtol=0, atol=1e-12)


@given(st.integers(0, 2**32), st.integers(1, 100), st.integers(1, 100),
       st.sampled_from(["uniform-symmetric", "three-point"]))
@settings(max_examples=40, deadline=None)
def test_hitting_probability_property(seed, mm, mp, kind):
    env = sample_environment(EnvironmentLaw(kind, epsilon=0.05, p=0.2), -mm, mp, seed)
    got = hitting_probabilities(env, mm, mp)
    ref = harmonic_oracle(env, mm, mp)
    nz = ref != 0
    assert np.all(np.abs(got[nz] - ref[nz]) <= 1e-10 * ref[nz])
    assert np.all(got[~nz] == 0)
    assert np.all(np.diff(got) <= 0)


def test_hitting_probability_out_of_window():
    env = sample_environment(EnvironmentLaw(), -3, 3, 1)
    with pytest.raises(OutOfWindow):
        hitting_probability(env, 5, 2, 0)


def test_reflected_simple_walk_b_squared():
    for b in (1, 5, 17):
        env = simple_env(0, b)
        assert expected_hitting_time_reflected(env, ReflectedSpec(0, b)) == pytest.approx(b * b, rel=1e-12)


def test_reflected_simple_walk_from_below():
    for m, b in ((1, 1), (3, 8), (10, 4)):
        env = simple_env(-m, b)
        got = expected_hitting_time_reflected(env, ReflectedSpec(-m, b))
        assert got == pytest.approx(b * (b + 2 * m), rel=1e-12)
        assert got == pytest.approx(hitting_time_oracle(env, -m, b)[m], rel=1e-12)


@given(st.integers(0, 2**32), st.integers(1, 30), st.integers(1, 30), st.floats(0.0, 0.5))
@settings(max_examples=40, deadline=None)
def test_reflected_hitting_time_matches_solve(seed, m, b, lazy):
    env = sample_environment(EnvironmentLaw(lazy_weight=lazy), -m, b, seed)
    ref = hitting_time_oracle(env, -m, b)
    for start in (-m, 0, b - 1):
        got = expected_hitting_time_reflected(env, ReflectedSpec(-m, b), start)
        assert got == pytest.approx(ref[start + m], rel=1e-9)


def test_reflected_hitting_time_simulation():
    env = sample_environment(EnvironmentLaw(), -6, 8, 21)
    t = hitting_time_samples(env, 0, 8, 10**5, seed=5, reflect_at=-6)
    assert np.all(t > 0)
    se = t.std() / math.sqrt(t.size)
    exact = expected_hitting_time_reflected(env, ReflectedSpec(-6, 8))
    assert abs(t.mean() - exact) < 3 * se


def test_reflected_spec_validation():
    with pytest.raises(InvalidRange):
        ReflectedSpec(3, 3)


def test_invariant_function_simple_and_normalized():
    env = simple_env(-10, 10)
    f = invariant_function(env, -10, 0)
    assert np.allclose(f[1:], 1.0)
    env = sample_environment(EnvironmentLaw(), -10, 10, 3)
    f = invariant_function(env, -10, 4)
    assert f[14] == 1.0


@given(st.integers(0, 2**32), st.integers(2, 100), st.floats(0.0, 0.6))
@settings(max_examples=60, deadline=None)
def test_invariant_function_fixed_point(seed, width, lazy):
    env = sample_environment(EnvironmentLaw(lazy_weight=lazy), -width, width, seed)
    f = invariant_function(env, -width, 0)
    Af = apply_transition_operator(env, -width, f)
    # the top site is not closed; compare on every other site, relative to f
    assert np.all(np.abs(Af[:-1] - f[:-1]) <= 1e-12 * np.maximum(1.0, f[:-1]))


def test_operator_constant_interior():
    env = simple_env(0, 20)
    out = apply_transition_operator(env, 0, np.full(21, 3.0))
    assert np.allclose(out[2:-1], 3.0)


def test_operator_matches_reflected_simulation():
    env = sample_environment(EnvironmentLaw(lazy_weight=0.2), 0, 40, 12)
    b, t, n = 6, 15, 20000
    g = np.zeros(41)
    g[b] = 1.0
    for _ in range(t):
        g = apply_transition_operator(env, 0, g)
    x = np.array([simulate_walk(env, b, t, seed=s, reflect_at=0).final_position for s in range(n)])
    emp = np.bincount(x, minlength=41) / n
    se = np.sqrt(np.maximum(g * (1 - g), 1 / n) / n)
    assert np.all(np.abs(emp - g) < 4 * se)
    assert abs(g.sum() - 1) < 1e-12

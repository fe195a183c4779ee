import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sinai.brownian import (BrownianPath, PathSide, bottom_via_kesten, extended_H, functionals_from_values,
                            kesten_functionals, sample_gamma, sample_path, valley_path)
from sinai.errors import DomainError, HorizonExceeded
from sinai.mc import derive_seed, ks_distance, wilson_interval
from sinai.valley import smallest_valley


def test_anchored_and_deterministic():
    a, b = sample_path(0.01, 5), sample_path(0.01, 5)
    a.pos.ensure(1000)
    b.pos.ensure(1000)
    assert a.pos.values[0] == 0.0 and a.neg.values[0] == 0.0
    assert np.array_equal(a.pos.values[:1000], b.pos.values[:1000])
    a.neg.ensure(10)
    assert not np.array_equal(a.neg.values[:10], a.pos.values[:10])


def test_growth_is_prefix_consistent():
    a, b = PathSide(1e-3, 8), PathSide(1e-3, 8)
    a.ensure(50_000)
    b.first_rise(0.5)
    b.ensure(50_000)
    n = min(len(a), len(b))
    assert np.array_equal(a.values[:n], b.values[:n])


@pytest.mark.slow
def test_variance_of_b1():
    ends = []
    for i in range(100_000):
        s = PathSide(0.01, derive_seed(1, i))
        s.ensure(101)
        ends.append(s.values[100])
    assert 0.99 <= np.var(ends) <= 1.01


def test_hand_constructed_trough():
    a = 0.7
    down = np.linspace(0, -1, 101)
    up = np.linspace(-1, -1 + a, 71)[1:]
    v = np.concatenate((down, up))
    f = functionals_from_values(v, a, 0.01)
    assert f.s == pytest.approx(1.0)
    assert f.W == -1 and f.M == 0 and f.H == max(a - 1, 0)


@given(st.integers(0, 2**40), st.sampled_from([0.25, 1.0, 2.0]))
@settings(max_examples=40, deadline=None)
def test_functional_invariants(seed, a):
    p = sample_path(1e-3, seed)
    f = kesten_functionals(p, "+", a)
    assert f.W == f.m_at_T
    assert f.M >= 0 >= f.W
    assert f.H == max(f.W + a, f.M)
    assert f.s <= f.T
    v = p.pos.values[:f.T_idx + 1]
    assert v[-1] - v.min() >= a
    assert np.all(v[:-1] - np.minimum.accumulate(v)[:-1] < a)


@given(st.integers(0, 2**40), st.sampled_from([1.5, 2.0, 3.0]))
@settings(max_examples=40, deadline=None)
def test_extended_h_nesting(seed, t):
    p = sample_path(1e-3, seed)
    f = kesten_functionals(p, "+", 1.0)
    assert f.H <= extended_H(f, t) <= f.H + t - 1 + 1e-12


def test_extended_h_rejects_lower_level():
    f = kesten_functionals(sample_path(1e-3, 1), "+", 1.0)
    with pytest.raises(DomainError):
        extended_H(f, 0.5)


def test_h1_uniform_95_band():
    n = 10_000
    h = [kesten_functionals(sample_path(1e-4, derive_seed(21, i)), "+", 1.0).H for i in range(n)]
    assert ks_distance(h, lambda x: np.clip(x, 0, 1)) < 1.36 / math.sqrt(n)


def test_deep_trough_on_positive_side():
    p = BrownianPath(0.01, 0)
    # overwrite both sides with hand-made paths: a trough at t = 1 on the positive side
    p.pos._buf = np.concatenate((np.linspace(0, -2, 101), np.linspace(-2, 0, 101)[1:]))
    p.pos._filled = p.pos._buf.size
    p.neg._buf = np.linspace(0, 3, 301)
    p.neg._filled = p.neg._buf.size
    b = bottom_via_kesten(p, 1.0)
    assert b.side == "+" and b.location == pytest.approx(1.0)


def test_brownian_scaling_is_grid_exact():
    a, dt = 2.0, 1e-4
    p = sample_path(dt, 77)
    kp = kesten_functionals(p, "+", a)
    km = kesten_functionals(p, "-", a)
    vp = p.pos.values[:kp.T_idx + 1] / a
    vm = p.neg.values[:km.T_idx + 1] / a
    sp = functionals_from_values(vp, 1.0, dt / a ** 2)
    sm = functionals_from_values(vm, 1.0, dt / a ** 2)
    assert sp.T_idx == kp.T_idx and sm.T_idx == km.T_idx
    assert sp.s_idx == kp.s_idx and sm.s_idx == km.s_idx
    assert sp.s * a ** 2 == pytest.approx(kp.s, rel=1e-12)
    assert (sp.H < sm.H) == (kp.H < km.H)


def test_kesten_matches_valley_bottom():
    dt = 1e-4
    checked = agree = 0
    for i in range(300):
        p = sample_path(dt, derive_seed(33, i))
        b = bottom_via_kesten(p, 1.0)
        if b.margin <= 5 * math.sqrt(dt):
            continue
        vp = valley_path(p, 1.0)
        checked += 1
        agree += abs(vp.grid[smallest_valley(vp, 1.0).b_idx] - b.location) <= dt * (1 + 1e-9)
    assert checked > 200 and agree >= 0.99 * checked


def test_horizon_exceeded():
    with pytest.raises(HorizonExceeded):
        kesten_functionals(sample_path(1e-6, 3, max_steps=1000), "+", 1.0)


def test_gamma_structure():
    for i in range(200):
        g = sample_gamma(2.0, 1e-3, derive_seed(4, i))
        assert g.Gamma == max(g.H_tilde, g.M_hat)
        if g.I_h:
            assert g.M_hat == 1 + g.M_bar
        else:
            assert g.M_hat == 2.0 and g.M_bar is None and g.at_atom
        assert 1.0 <= g.Gamma <= 2.0 + 1e-12
        assert g.tau0 <= g.tauh


@pytest.mark.slow
def test_gamma_atom_frequency_wilson():
    h, n = 2.0, 10_000
    atoms = sum(sample_gamma(h, 1e-4, derive_seed(9, i)).at_atom for i in range(n))
    lo, hi = wilson_interval(atoms, n, 0.99)
    assert lo <= 1 / h <= hi


def test_gamma_rejects_h_le_1():
    with pytest.raises(DomainError):
        sample_gamma(1.0)

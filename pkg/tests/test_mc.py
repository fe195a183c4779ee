import math
from statistics import NormalDist

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sinai.errors import AllDiscarded
from sinai.mc import (TrialPlan, derive_seed, empirical_cdf, ks_band, ks_distance, make_rng, proportion,
                      run_bernoulli, run_trials, wilson_interval)


def always(seed):
    return True


def fair_bit(seed):
    return bool(make_rng(seed).integers(2))


def maybe_discard(seed):
    return None if seed % 7 == 0 else bool(seed & 1)


def draw(seed):
    return float(make_rng(seed).random())


def test_seeds_distinct_and_stable():
    s = TrialPlan(123, 10_000).seeds()
    assert len(set(s)) == len(s)
    assert s[:3] == TrialPlan(123, 3).seeds()
    assert derive_seed(1, 2, 3) != derive_seed(1, 3, 2)


@given(st.integers(0, 2**64 - 1), st.integers(0, 2**64 - 1), st.integers(0, 2**64 - 1))
def test_derive_injective_in_key(seed, i, j):
    if i != j:
        assert derive_seed(seed, i) != derive_seed(seed, j)


def test_always_success():
    est = run_bernoulli(always, TrialPlan(0, 100))
    assert est.point == 1.0 and est.ci_hi == 1.0 and est.n_trials == 100


def test_fair_coin():
    n = 100_000
    est = run_bernoulli(fair_bit, TrialPlan(5, n))
    lo, hi = wilson_interval(n // 2, n, 0.999)
    assert lo <= est.point <= hi


def test_parallel_is_bitwise_identical():
    plan = TrialPlan(9, 400)
    one = run_bernoulli(maybe_discard, plan, workers=1)
    many = run_bernoulli(maybe_discard, plan, workers=8)
    assert one == many
    assert run_trials(draw, plan, workers=1) == run_trials(draw, plan, workers=3)
    assert one.to_json("x", {}, 9) == many.to_json("x", {}, 9)


def test_discards_are_counted():
    est = run_bernoulli(maybe_discard, TrialPlan(0, 700))
    assert est.n_discarded > 0 and est.n_effective + est.n_discarded == 700


def test_all_discarded():
    with pytest.raises(AllDiscarded):
        run_bernoulli(lambda s: None, TrialPlan(0, 5))


def test_wilson_boundaries():
    assert wilson_interval(0, 30)[0] == 0.0
    assert wilson_interval(30, 30)[1] == 1.0


def test_wilson_formula():
    k, n, level = 50, 100, 0.95
    z = NormalDist().inv_cdf(0.975)
    p = k / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lo, hi = wilson_interval(k, n, level)
    assert lo == pytest.approx(centre - half, abs=1e-10)
    assert hi == pytest.approx(centre + half, abs=1e-10)


@given(st.integers(1, 500).flatmap(lambda n: st.tuples(st.integers(0, n), st.just(n))))
def test_interval_contains_point(kn):
    k, n = kn
    est = proportion(k, n)
    assert 0 <= est.ci_lo <= est.point <= est.ci_hi <= 1


def test_record_schema():
    rec = proportion(3, 10, 2).to_record("localize", {"n": 100}, 7)
    assert set(rec) == {"experiment", "params", "point", "ci", "level", "n", "discarded", "master_seed", "version"}
    assert rec["n"] == 10 and rec["discarded"] == 2


def test_ks_examples():
    unif = lambda x: np.clip(x, 0, 1)
    assert ks_distance([0.5], unif) == 0.5
    assert ks_distance(np.linspace(1.1, 2, 50), unif) == 1.0


def test_ks_band_coverage():
    n = 10_000
    inside = sum(ks_distance(make_rng(derive_seed(3, r)).random(n), lambda x: x) < ks_band(n, 0.99)
                 for r in range(100))
    assert inside >= 98


def test_empirical_cdf():
    F = empirical_cdf([3, 1, 2, 2])
    assert F(0.5) == 0 and F(1) == 0.25 and F(2) == 0.75 and F(10) == 1
    assert np.allclose(F.jumps, [0.25, 0.5, 0.25])

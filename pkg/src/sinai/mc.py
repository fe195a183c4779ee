"""Reproducible Monte Carlo trials and the statistics used to judge them.

Per-trial seeds come from a counter construction: the trial index is pushed
through a SplitMix64-style bijection keyed by the master seed, so seeds are
pairwise distinct for every index below 2**64 and never depend on how the
trials are scheduled.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from statistics import NormalDist
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import AllDiscarded

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(seed: int, *keys: int) -> int:
    """Child seed for ``keys`` under ``seed``.

    For a fixed parent the map ``key -> child`` is injective on 64-bit keys.
    """
    s = seed & _MASK
    for k in keys:
        s = _mix64(_mix64(s) + ((k + 1) * _GAMMA))
    return s


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.SFC64(seed & _MASK))


@dataclass(frozen=True)
class TrialPlan:
    master_seed: int
    n_trials: int
    max_parallelism_hint: int = 1

    def seed(self, index: int) -> int:
        return derive_seed(self.master_seed, index)

    def seeds(self) -> list[int]:
        return [self.seed(i) for i in range(self.n_trials)]


@dataclass(frozen=True)
class Estimate:
    point: float
    ci_lo: float
    ci_hi: float
    level: float
    n_effective: int
    n_discarded: int

    @property
    def n_trials(self) -> int:
        return self.n_effective + self.n_discarded

    def to_record(self, experiment: str, params: dict, master_seed: int) -> dict:
        from . import __version__

        return {
            "experiment": experiment,
            "params": params,
            "point": self.point,
            "ci": [self.ci_lo, self.ci_hi],
            "level": self.level,
            "n": self.n_effective,
            "discarded": self.n_discarded,
            "master_seed": master_seed,
            "version": __version__,
        }

    def to_json(self, experiment: str, params: dict, master_seed: int) -> str:
        return json.dumps(self.to_record(experiment, params, master_seed), sort_keys=True)


def run_trials(trial: Callable[..., object], plan: TrialPlan, workers: Optional[int] = None,
               indexed: bool = False) -> list:
    """Evaluate ``trial(seed_i)`` (or ``trial(i, seed_i)`` when ``indexed``) for every trial.

    Results come back in index order.  ``trial`` must be picklable when
    ``workers > 1``.  The returned list does not depend on ``workers``.
    """
    seeds = plan.seeds()
    args = (range(len(seeds)), seeds) if indexed else (seeds,)
    workers = workers if workers is not None else plan.max_parallelism_hint
    if workers is None or workers <= 1 or len(seeds) < 2:
        return list(map(trial, *args))
    chunk = max(1, len(seeds) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(trial, *args, chunksize=chunk))


def wilson_interval(k: int, n: int, level: float = 0.95) -> tuple[float, float]:
    if n <= 0:
        raise ValueError("wilson_interval needs n >= 1")
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    z = NormalDist().inv_cdf(0.5 + level / 2)
    p = k / n
    z2n = z * z / n
    center = (p + z2n / 2) / (1 + z2n)
    half = z / (1 + z2n) * math.sqrt(p * (1 - p) / n + z2n / (4 * n))
    lo = 0.0 if k == 0 else max(0.0, center - half)
    hi = 1.0 if k == n else min(1.0, center + half)
    return lo, hi


def proportion(k: int, n: int, n_discarded: int = 0, level: float = 0.95) -> Estimate:
    if n == 0:
        raise AllDiscarded(f"all {n_discarded} trials were discarded")
    lo, hi = wilson_interval(k, n, level)
    p = k / n
    return Estimate(p, min(lo, p), max(hi, p), level, n, n_discarded)


def run_bernoulli(trial: Callable[[int], Optional[bool]], plan: TrialPlan, level: float = 0.95,
                  workers: Optional[int] = None) -> Estimate:
    """Wilson-interval estimate of a success probability.

    ``trial`` maps a per-trial seed to True (success), False (failure) or None
    (discard).  Discards are dropped from the proportion and counted.
    """
    outcomes = run_trials(trial, plan, workers)
    kept = [o for o in outcomes if o is not None]
    return proportion(sum(bool(o) for o in kept), len(kept), len(outcomes) - len(kept), level)


def ks_distance(samples: Sequence[float], cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """Kolmogorov distance between the empirical law of ``samples`` and ``cdf``.

    ``cdf`` must accept an array.  Both one-sided limits of the empirical CDF
    are compared at every sample point, so ties are handled exactly.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n == 0:
        raise ValueError("ks_distance of an empty sample")
    f = np.asarray(cdf(x), dtype=float)
    upper = np.searchsorted(x, x, side="right") / n
    lower = np.searchsorted(x, x, side="left") / n
    return float(max(np.max(np.abs(upper - f)), np.max(np.abs(lower - f))))


def ks_band(n: int, level: float = 0.99) -> float:
    """Asymptotic critical value of the one-sample KS statistic."""
    c = {0.95: 1.36, 0.99: 1.63}.get(level)
    if c is None:
        c = math.sqrt(-0.5 * math.log((1 - level) / 2))
    return c / math.sqrt(n)


class EmpiricalCDF:
    """Right-continuous step function of a finite sample.

    ``x`` holds the distinct jump locations and ``p`` the CDF value just at and
    after each of them.
    """

    def __init__(self, samples):
        s = np.sort(np.asarray(samples, dtype=float))
        if s.size == 0:
            raise ValueError("empirical CDF of an empty sample")
        self.n = s.size
        self.x, counts = np.unique(s, return_counts=True)
        self.p = np.cumsum(counts) / self.n
        self._sorted = s

    @property
    def jumps(self) -> np.ndarray:
        return np.diff(np.concatenate(([0.0], self.p)))

    def __call__(self, t):
        return np.searchsorted(self._sorted, t, side="right") / self.n


def empirical_cdf(samples) -> EmpiricalCDF:
    return EmpiricalCDF(samples)


def estimate_dict(est: Estimate) -> dict:
    return asdict(est)

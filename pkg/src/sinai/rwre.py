"""Quenched walk dynamics and exact one-dimensional harmonic quantities.

All products of ``rho`` are handled through the potential ``V`` and reduced
with log-sum-exp, since over a valley of depth ``log n`` they reach ``n^{±1}``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from . import _kernels
from .env import Environment, potential
from .errors import DomainError, InvalidRange, OutOfWindow, WindowExhausted
from .mc import make_rng


@dataclass
class WalkResult:
    final_position: int
    steps: int
    positions_at: dict = field(default_factory=dict)
    hit_records: Optional[list] = None


@dataclass(frozen=True)
class ReflectedSpec:
    reflect_at: int
    target: int

    def __post_init__(self):
        if not self.reflect_at < self.target:
            raise InvalidRange(f"reflect_at={self.reflect_at} must be below target={self.target}")


def _thresholds(env: Environment, reflect_at: Optional[int] = None):
    up = np.ascontiguousarray(env.w_plus, dtype=float)
    stay = np.ascontiguousarray(env.w_plus + env.w_zero, dtype=float)
    if reflect_at is not None:
        i = env.index(reflect_at)
        up = up.copy()
        stay = stay.copy()
        up[i] = 1.0
        stay[i] = 1.0
    return up, stay


def simulate_walk(env: Environment, start: int, steps: int, checkpoints: Sequence[int] = (),
                  seed: int = 0, reflect_at: Optional[int] = None) -> WalkResult:
    """Run the quenched chain from ``start`` for ``steps`` steps.

    Raises WindowExhausted if the walk leaves ``[env.lo, env.hi]``.
    """
    cps = sorted({int(c) for c in checkpoints if 0 <= c <= steps} | {int(steps)})
    if any(c < 0 or c > steps for c in checkpoints):
        raise ValueError("checkpoints must lie in [0, steps]")
    env.index(start)
    up, stay = _thresholds(env, reflect_at)
    pos, done, exited = _kernels.walk(up, stay, env.lo, int(start),
                                      np.asarray(cps, dtype=np.int64), make_rng(seed))
    if exited:
        raise WindowExhausted(f"walk left window [{env.lo}, {env.hi}] at step {done}", steps=done)
    at = {c: int(x) for c, x in zip(cps, pos)}
    return WalkResult(int(pos[-1]), int(done), {c: at[c] for c in checkpoints} if checkpoints else {})


def hitting_time_samples(env: Environment, start: int, target: int, n: int, seed: int,
                         max_steps: int = 10**9, reflect_at: Optional[int] = None) -> np.ndarray:
    """First hitting times of ``target`` from ``start`` for ``n`` independent walks.

    Entries are -1 when ``max_steps`` ran out and -2 when the walk left the
    window.
    """
    up, stay = _thresholds(env, reflect_at)
    env.index(start)
    env.index(target)
    return _kernels.hit_times(up, stay, env.lo, int(start), int(target), int(n), int(max_steps),
                              make_rng(seed))


def _window_potential(env: Environment, lo: int, hi: int) -> np.ndarray:
    if lo < env.lo or hi > env.hi:
        raise OutOfWindow(f"[{lo}, {hi}] not inside environment window [{env.lo}, {env.hi}]")
    v = potential(env).values
    return v[lo - env.lo:hi - env.lo + 1]


def hitting_probabilities(env: Environment, m_minus: int, m_plus: int) -> np.ndarray:
    """P(hit -m_minus before m_plus) from every z in [-m_minus, m_plus]."""
    if m_minus < 1 or m_plus < 1:
        raise DomainError("m_minus and m_plus must be >= 1")
    # weights e^{V(i)}, i in (-m_minus, m_plus]
    v = _window_potential(env, -m_minus + 1, m_plus)
    tail = np.logaddexp.accumulate(v[::-1])[::-1]  # log sum_{i >= j} e^{V(i)}
    total = tail[0]
    out = np.empty(m_minus + m_plus + 1)
    out[0] = 1.0
    out[1:-1] = np.exp(tail[1:] - total)
    out[-1] = 0.0
    return out


def hitting_probability(env: Environment, m_minus: int, m_plus: int, z: int) -> float:
    """Probability that the walk from ``z`` hits ``-m_minus`` before ``m_plus``.

    Closed form ``sum_{i=z+1}^{m+} e^{V(i)} / sum_{i=-m_-+1}^{m+} e^{V(i)}``,
    which is the product-of-ratios solution of the harmonic boundary problem
    written through the potential.
    """
    if not -m_minus <= z <= m_plus:
        raise DomainError(f"z={z} outside [{-m_minus}, {m_plus}]")
    if m_minus < 1 or m_plus < 1:
        raise DomainError("m_minus and m_plus must be >= 1")
    if z == -m_minus:
        return 1.0
    if z == m_plus:
        return 0.0
    v = _window_potential(env, -m_minus + 1, m_plus)
    k = z + m_minus  # v[k] is V(z + 1)
    return float(np.exp(logsumexp(v[k:]) - logsumexp(v)))


def log_expected_hitting_time_reflected(env: Environment, spec: ReflectedSpec, start: int = 0) -> float:
    a, b = spec.reflect_at, spec.target
    if not a <= start < b:
        raise InvalidRange(f"need reflect_at <= start < target, got {a}, {start}, {b}")
    env.index(a)
    env.index(b)
    v = _window_potential(env, a + 1, b)  # V(l), l = a+1..b
    w_up = env.w_plus[a - env.lo:b - env.lo].copy()  # w+ at l-1 = a..b-1
    w_up[0] = 1.0
    inner = np.logaddexp.accumulate(-v - np.log(w_up))  # log sum_{l=a+1}^{i} e^{-V(l)}/w+_{l-1}
    i0 = start + 1 - (a + 1)
    return float(logsumexp(v[i0:] + inner[i0:]))


def expected_hitting_time_reflected(env: Environment, spec: ReflectedSpec, start: int = 0) -> float:
    """Mean time for the walk reflected at ``spec.reflect_at`` to reach ``spec.target``.

    Evaluates the double sum over ``1 <= i <= b`` and ``0 <= j <= i - 1 - a`` of
    ``prod_{k=1}^{j} rho_{i-k} / w+_{i-j-1}`` with ``w+`` forced to 1 at the
    reflection site.
    """
    return float(np.exp(log_expected_hitting_time_reflected(env, spec, start)))


def invariant_function(env: Environment, reflect_at: int, b: int) -> np.ndarray:
    """Invariant measure of the walk reflected at ``reflect_at``, normalized to 1 at ``b``.

    Returned on the sites ``reflect_at .. env.hi``.  The ratio
    ``f(z+1)/f(z) = w+_z / w-_{z+1}`` uses the reflected ``w+ = 1`` at the
    boundary site, which makes it exactly invariant there too.
    """
    if not reflect_at < b:
        raise InvalidRange(f"reflect_at={reflect_at} must be below b={b}")
    i0 = env.index(reflect_at)
    env.index(b)
    up = env.w_plus[i0:-1].copy()
    up[0] = 1.0
    steps = np.log(up) - np.log(env.w_minus[i0 + 1:])
    logf = np.concatenate(([0.0], np.cumsum(steps)))
    return np.exp(logf - logf[b - reflect_at])


def apply_transition_operator(env: Environment, reflect_at: int, g) -> np.ndarray:
    """One step of the forward operator of the reflected walk on ``reflect_at .. env.hi``.

    ``(Ag)(z) = w+_{z-1} g(z-1) + w-_{z+1} g(z+1) + w0_z g(z)`` with the
    reflection site set to ``(0, 0, 1)``.  ``g`` is taken to vanish above
    ``env.hi``, so the top site loses mass.
    """
    i0 = env.index(reflect_at)
    g = np.asarray(g, dtype=float)
    n = env.hi - reflect_at + 1
    if g.shape != (n,):
        raise DomainError(f"g must have length {n} (sites {reflect_at}..{env.hi}), got {g.shape}")
    up = env.w_plus[i0:].copy()
    zero = env.w_zero[i0:].copy()
    down = env.w_minus[i0:]
    up[0] = 1.0
    zero[0] = 0.0
    out = zero * g
    out[1:] += up[:-1] * g[:-1]
    out[:-1] += down[1:] * g[1:]
    return out


def write_checkpoints_csv(result: WalkResult, path) -> None:
    """Dump ``result.positions_at`` as ``step,position`` rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "position"])
        for step in sorted(result.positions_at):
            w.writerow([step, result.positions_at[step]])

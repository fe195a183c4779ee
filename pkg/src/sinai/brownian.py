"""Two-sided Brownian paths on a grid, Kesten's functionals and the two-level construction.

Each side of a path is a growable buffer filled from its own substream;
functionals extend it on demand until the requested rise is observed.
Level crossings on the grid are detected late and extrema undershoot by
``O(sqrt(dt))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .errors import DomainError, HorizonExceeded, InsufficientHorizon
from .mc import derive_seed, make_rng
from .valley import PiecewisePath

DEFAULT_DT = 1e-4
DEFAULT_MAX_STEPS = 10**9
_INITIAL_CAPACITY = 1 << 14


class PathSide:
    """One half ``k -> B(±k dt)`` of a Brownian path, grown lazily."""

    def __init__(self, dt: float, seed: int, max_steps: int = DEFAULT_MAX_STEPS):
        self.dt = dt
        self.sqrt_dt = math.sqrt(dt)
        self.max_steps = max_steps
        self._rng = make_rng(seed)
        self._buf = np.zeros(_INITIAL_CAPACITY)
        self._filled = 1

    @property
    def values(self) -> np.ndarray:
        return self._buf[:self._filled]

    def __len__(self):
        return self._filled

    def _grow(self):
        cap = self._buf.size
        if cap > self.max_steps:
            raise HorizonExceeded(f"more than {self.max_steps} steps needed on one side")
        new = np.zeros(min(2 * cap, self.max_steps + 1))
        new[:self._filled] = self._buf[:self._filled]
        self._buf = new

    def ensure(self, n: int) -> None:
        while self._filled < n:
            if self._filled == self._buf.size:
                self._grow()
            _, self._filled = _kernels.exit_scan(self._buf, self._filled, self._filled,
                                                 -math.inf, math.inf, self.sqrt_dt, self._rng)

    def first_rise(self, level: float) -> int:
        """First index ``k`` with ``B_k - min_{j<=k} B_j >= level``."""
        k, start, runmin = -1, 0, math.inf
        while True:
            k, self._filled, runmin = _kernels.rise_scan(self._buf, self._filled, start, runmin,
                                                         level, self.sqrt_dt, self._rng)
            if k >= 0:
                return k
            start = self._buf.size
            self._grow()

    def first_exit(self, start: int, lower: float, upper: float) -> int:
        """First index ``k >= start`` with ``B_k <= lower`` or ``B_k >= upper``."""
        while True:
            k, self._filled = _kernels.exit_scan(self._buf, self._filled, start, lower, upper,
                                                 self.sqrt_dt, self._rng)
            if k >= 0:
                return k
            start = self._buf.size
            self._grow()


class BrownianPath:
    """Two-sided Brownian motion ``B`` with ``B(0) = 0`` sampled every ``dt``."""

    def __init__(self, dt: float, seed: int, max_steps: int = DEFAULT_MAX_STEPS):
        if not dt > 0:
            raise DomainError("dt must be positive")
        self.dt = dt
        self.seed = seed
        self.pos = PathSide(dt, derive_seed(seed, 0), max_steps)
        self.neg = PathSide(dt, derive_seed(seed, 1), max_steps)

    def side(self, sign: str) -> PathSide:
        if sign == "+":
            return self.pos
        if sign == "-":
            return self.neg
        raise DomainError(f"side must be '+' or '-', got {sign!r}")


def sample_path(dt: float = DEFAULT_DT, seed: int = 0, max_steps: int = DEFAULT_MAX_STEPS) -> BrownianPath:
    return BrownianPath(dt, seed, max_steps)


@dataclass(frozen=True)
class KestenFunctionals:
    side: str
    a: float
    m_at_T: float
    T: float
    s: float
    M: float
    W: float
    H: float
    T_idx: int
    s_idx: int


def functionals_from_values(v: np.ndarray, a: float, dt: float, side: str = "+") -> KestenFunctionals:
    """Kesten functionals of a prefix ``v[0..T]`` that ends at the first rise of ``a``."""
    t = v.size - 1
    m = float(v.min())
    s = int(np.flatnonzero(v == m)[0])
    big_m = float(v[:s + 1].max())
    return KestenFunctionals(side, a, m, t * dt, s * dt, big_m, m, max(m + a, big_m), t, s)


def kesten_functionals(path: BrownianPath, side: str, a: float) -> KestenFunctionals:
    """``(m, T, s, M, W, H)`` at depth level ``a`` on one side of ``path``."""
    if not a > 0:
        raise DomainError("level a must be positive")
    ps = path.side(side)
    t = ps.first_rise(a)
    return functionals_from_values(ps.values[:t + 1], a, path.dt, side)


def extended_H(kf: KestenFunctionals, t: float) -> float:
    """``(W(1) + t) v M(1)`` for level-1 functionals ``kf``: the height that the
    level-``t`` comparison uses once the level-1 valley is fixed.

    Unlike the Kesten ``H`` at level ``t`` (uniform on ``[0, t]``) it satisfies
    ``H(1) <= extended_H(t) <= H(1) + t - 1``; the joint law of
    ``(H(1), extended_H(t))`` is ``z exp(-(z + t - w - 1))``.
    """
    if not t >= kf.a:
        raise DomainError("t must be at least the functionals' level")
    return max(kf.W + t, kf.M)


@dataclass(frozen=True)
class Bottom:
    location: float
    margin: float
    side: str
    index: int


def bottom_via_kesten(path: BrownianPath, a: float) -> Bottom:
    """Bottom of the smallest depth-``a`` valley around 0: ``s+`` iff ``H+ < H-``."""
    kp = kesten_functionals(path, "+", a)
    km = kesten_functionals(path, "-", a)
    margin = abs(kp.H - km.H)
    if kp.H < km.H:
        return Bottom(kp.s, margin, "+", kp.s_idx)
    return Bottom(-km.s, margin, "-", km.s_idx)


def _coarse_tail(start_value: float, level: float, dt: float, seed: int, growth: float,
                 max_points: int):
    """Continue a side from ``start_value`` with geometrically growing steps until ``>= level``."""
    rng = make_rng(seed)
    times, vals = [], []
    t, v, step = 0.0, start_value, dt
    block = 256
    while len(vals) < max_points:
        steps = step * growth ** np.arange(1, block + 1)
        incs = np.sqrt(steps) * rng.standard_normal(block)
        incs[0] += v
        vs = np.cumsum(incs)
        ts = t + np.cumsum(steps)
        hit = np.flatnonzero(vs >= level)
        if hit.size:
            j = int(hit[0]) + 1
            times.extend(ts[:j])
            vals.extend(vs[:j])
            return np.asarray(times), np.asarray(vals)
        times.extend(ts)
        vals.extend(vs)
        t, v, step = float(ts[-1]), float(vs[-1]), float(steps[-1])
    raise InsufficientHorizon(f"coarse continuation did not reach {level}")


def valley_path(path: BrownianPath, level: float, growth: float = 1 + 1 / 128,
                max_tail_points: int = 50_000) -> PiecewisePath:
    """Piecewise path of ``path`` suitable for valley analysis at depths up to ``level``.

    Each side is taken on the fine grid up to its first rise of ``level`` and,
    if it has not yet reached the absolute height ``level`` there, continued
    from an independent substream with steps growing by ``growth`` until it
    does.  The Kesten functionals at every depth ``<= level`` only read the
    fine part.
    """
    grids, vals = [], []
    for n, sign in enumerate("+-"):
        ps = path.side(sign)
        t = ps.first_rise(level)
        v = ps.values[:t + 1].copy()
        g = np.arange(t + 1) * path.dt
        if v.max() < level:
            tt, tv = _coarse_tail(float(v[-1]), level, path.dt, derive_seed(path.seed, 2 + n),
                                  growth, max_tail_points)
            g = np.concatenate((g, g[-1] + tt))
            v = np.concatenate((v, tv))
        grids.append(g)
        vals.append(v)
    (gp, gn), (vp, vn) = grids, vals
    grid = np.concatenate((-gn[::-1], gp[1:]))
    values = np.concatenate((vn[::-1], vp[1:]))
    return PiecewisePath(grid, values, gn.size - 1)


@dataclass(frozen=True)
class GammaDecomposition:
    h: float
    I_h: bool
    tau0: float
    tauh: float
    M_bar: Optional[float]
    M_hat: float
    H_tilde: float
    Gamma: float

    @property
    def at_atom(self) -> bool:
        """Whether ``Gamma`` sits at its atom ``h`` (the event ``I_h = 0``)."""
        return not self.I_h


def sample_gamma(h: float, dt: float = DEFAULT_DT, seed: int = 0,
                 max_steps: int = DEFAULT_MAX_STEPS) -> GammaDecomposition:
    """One draw of the auxiliary rise ``Gamma(h)`` built on the negative side.

    From the level-1 functionals: ``tau0`` is the first return to ``W + 1``
    after ``s`` (which is the level-1 rise time itself on the grid) and
    ``tauh`` the first exit of ``(W, W + h)`` after ``tau0``.  ``I_h`` records
    an exit at the bottom.  ``H_tilde`` is a level-``h`` functional from an
    independent path.
    """
    if not h > 1:
        raise DomainError("h must exceed 1")
    path = BrownianPath(dt, seed, max_steps)
    neg = path.neg
    k1 = kesten_functionals(path, "-", 1.0)
    w = k1.W
    tau0 = k1.T_idx
    tauh = neg.first_exit(tau0 + 1, w, w + h)
    v = neg.values
    i_h = bool(v[tauh] <= w)
    if i_h:
        m_hat = float(v[tau0:tauh].max() - w)
        m_bar = m_hat - 1.0
    else:
        m_hat, m_bar = float(h), None
    fresh = BrownianPath(dt, derive_seed(seed, 7), max_steps)
    h_tilde = kesten_functionals(fresh, "-", h).H
    return GammaDecomposition(h, i_h, tau0 * dt, tauh * dt, m_bar, m_hat, h_tilde, max(h_tilde, m_hat))

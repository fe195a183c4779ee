"""I.i.d. random environments and their potentials.

Sites ``z >= 0`` are drawn in order from one substream and sites ``z < 0``
from another, so widening a window with the same seed keeps every site that
was already sampled.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate

from .errors import InvalidLaw, InvalidRange, OutOfWindow
from .mc import derive_seed, make_rng

KINDS = ("uniform-symmetric", "three-point")


@dataclass(frozen=True)
class EnvironmentLaw:
    """Law of one site ``(w_minus, w_zero, w_plus)``.

    uniform-symmetric
        ``U ~ Uniform[epsilon, 1 - epsilon]`` and ``w_plus = (1 - lazy) U``.
    three-point
        ``w_plus / (w_plus + w_minus)`` is ``p`` or ``1 - p`` with probability
        one half each.

    Both make ``log rho`` symmetric, so its mean is exactly zero.
    """

    kind: str = "uniform-symmetric"
    epsilon: float = 0.05
    p: float = 0.25
    lazy_weight: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidLaw(f"unknown environment kind {self.kind!r}")
        if not 0.0 < self.epsilon < 0.5:
            raise InvalidLaw(f"epsilon must lie in (0, 1/2), got {self.epsilon}")
        if not 0.0 <= self.lazy_weight < 1.0:
            raise InvalidLaw(f"lazy_weight must lie in [0, 1), got {self.lazy_weight}")
        if self.kind == "three-point" and not self.epsilon < self.p <= 0.5:
            raise InvalidLaw(f"three-point p must lie in (epsilon, 1/2], got {self.p}")

    @cached_property
    def sigma_p(self) -> float:
        return sigma_p(self)


def sigma_p(law: EnvironmentLaw) -> float:
    """Standard deviation of ``log rho_0`` (equal to its root second moment)."""
    if law.kind == "three-point":
        s = abs(math.log((1 - law.p) / law.p))
    else:
        e = law.epsilon
        second, _ = integrate.quad(lambda u: math.log((1 - u) / u) ** 2, e, 1 - e,
                                   epsabs=0.0, epsrel=1e-12, limit=200)
        s = math.sqrt(second / (1 - 2 * e))
    if not s > 0:
        raise InvalidLaw("degenerate law: log rho is identically 0 (simple random walk)")
    return s


@dataclass(frozen=True, eq=False)
class Environment:
    lo: int
    hi: int
    w_minus: np.ndarray
    w_zero: np.ndarray
    w_plus: np.ndarray
    seed: int = 0
    law: EnvironmentLaw | None = field(default=None, repr=False)

    def __post_init__(self):
        n = self.hi - self.lo + 1
        for a in (self.w_minus, self.w_zero, self.w_plus):
            if a.shape != (n,):
                raise InvalidRange(f"site arrays must have length {n}")

    @classmethod
    def from_sites(cls, lo: int, sites, seed: int = 0) -> "Environment":
        arr = np.asarray(sites, dtype=float).reshape(-1, 3)
        return cls(lo, lo + len(arr) - 1, arr[:, 0].copy(), arr[:, 1].copy(), arr[:, 2].copy(), seed)

    def __len__(self):
        return self.hi - self.lo + 1

    def index(self, z: int) -> int:
        if not self.lo <= z <= self.hi:
            raise OutOfWindow(f"site {z} outside window [{self.lo}, {self.hi}]")
        return z - self.lo

    def site(self, z: int) -> tuple[float, float, float]:
        i = self.index(z)
        return float(self.w_minus[i]), float(self.w_zero[i]), float(self.w_plus[i])

    def sites(self) -> np.ndarray:
        return np.column_stack((self.w_minus, self.w_zero, self.w_plus))

    @cached_property
    def log_rho(self) -> np.ndarray:
        return np.log(self.w_minus) - np.log(self.w_plus)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["z", "w_minus", "w_zero", "w_plus"])
        for z, (m, o, p) in zip(range(self.lo, self.hi + 1), self.sites()):
            w.writerow([z, f"{m:.17g}", f"{o:.17g}", f"{p:.17g}"])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, seed: int = 0) -> "Environment":
        rows = list(csv.DictReader(io.StringIO(text)))
        zs = [int(r["z"]) for r in rows]
        if zs != list(range(zs[0], zs[0] + len(zs))):
            raise InvalidRange("CSV sites must be consecutive")
        sites = [(float(r["w_minus"]), float(r["w_zero"]), float(r["w_plus"])) for r in rows]
        return cls.from_sites(zs[0], sites, seed)


def _site_draws(law: EnvironmentLaw, u: np.ndarray):
    lazy = law.lazy_weight
    if law.kind == "uniform-symmetric":
        q = law.epsilon + (1 - 2 * law.epsilon) * u
    else:
        q = np.where(u < 0.5, law.p, 1 - law.p)
    return (1 - lazy) * (1 - q), np.full_like(q, lazy), (1 - lazy) * q


def sample_environment(law: EnvironmentLaw, lo: int, hi: int, seed: int) -> Environment:
    if lo > 0 or hi < 0:
        raise InvalidRange(f"window [{lo}, {hi}] must contain 0")
    pos = make_rng(derive_seed(seed, 0)).random(hi + 1)
    neg = make_rng(derive_seed(seed, 1)).random(-lo)[::-1]
    m, o, p = _site_draws(law, np.concatenate((neg, pos)))
    return Environment(lo, hi, m, o, p, seed, law)


def log_rho(env: Environment, z: int) -> float:
    i = env.index(z)
    return math.log(env.w_minus[i]) - math.log(env.w_plus[i])


@dataclass(frozen=True, eq=False)
class PotentialPath:
    """``values[k - lo] = V(k)`` with ``V(0) = 0`` and ``V(k) - V(k-1) = log rho_{k-1}``."""

    lo: int
    hi: int
    values: np.ndarray

    def __call__(self, k: int) -> float:
        if not self.lo <= k <= self.hi:
            raise OutOfWindow(f"potential index {k} outside [{self.lo}, {self.hi}]")
        return float(self.values[k - self.lo])

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1)


def potential(env: Environment) -> PotentialPath:
    lr = env.log_rho
    o = -env.lo
    right = np.concatenate(([0.0], np.cumsum(lr[o:o + env.hi])))
    # V(-k) = -(log rho_{-1} + ... + log rho_{-k})
    left = -np.cumsum(lr[:o][::-1])[::-1]
    return PotentialPath(env.lo, env.hi, np.concatenate((left, right)))

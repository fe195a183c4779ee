"""Valleys of sampled paths: depth, refinements and the smallest valley around 0.

Everything works on grid indices of a :class:`PiecewisePath`.  Tie rules are
fixed so results are deterministic: an argmin over several equal values takes
the point closest to the origin (negative side first); a refinement pair takes
the smallest rise end and then the latest start on the left, mirrored on the
right.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, InsufficientHorizon, NoRefinement, NotAValley


@dataclass(frozen=True, eq=False)
class PiecewisePath:
    grid: np.ndarray
    values: np.ndarray
    origin_index: int

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        w = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", w)
        if g.ndim != 1 or g.shape != w.shape or g.size < 2:
            raise DomainError("grid and values must be equal-length 1-d arrays")
        if np.any(np.diff(g) <= 0):
            raise DomainError("grid must be strictly increasing")
        if not 0 <= self.origin_index < g.size or g[self.origin_index] != 0.0:
            raise DomainError("origin_index must point at t = 0")
        if not np.all(np.isfinite(w)):
            raise DomainError("path values must be finite")

    @classmethod
    def from_points(cls, points) -> "PiecewisePath":
        t, w = zip(*sorted(points))
        t = np.asarray(t, dtype=float)
        return cls(t, np.asarray(w, dtype=float), int(np.flatnonzero(t == 0.0)[0]))

    @classmethod
    def on_integers(cls, values, lo: int, scale: float = 1.0) -> "PiecewisePath":
        """Path sampled at ``(lo + k) * scale``."""
        n = len(values)
        return cls((np.arange(n) + lo) * scale, np.asarray(values, dtype=float), -lo)

    def __len__(self):
        return self.grid.size

    def reversed(self) -> "PiecewisePath":
        """The path ``t -> W(-t)``; index ``i`` maps to ``len - 1 - i``."""
        return PiecewisePath(-self.grid[::-1], self.values[::-1].copy(), len(self) - 1 - self.origin_index)


@dataclass(frozen=True)
class Valley:
    a_idx: int
    b_idx: int
    c_idx: int
    depth: float

    def contains_origin(self, path: PiecewisePath) -> bool:
        return self.a_idx < path.origin_index < self.c_idx

    def mirrored(self, n: int) -> "Valley":
        return Valley(n - 1 - self.c_idx, n - 1 - self.b_idx, n - 1 - self.a_idx, self.depth)

    def record(self, path: PiecewisePath, threshold: Optional[float] = None) -> dict:
        g = path.grid
        return {"a": float(g[self.a_idx]), "b": float(g[self.b_idx]), "c": float(g[self.c_idx]),
                "depth": float(self.depth), "threshold": threshold}


def check_valley(path: PiecewisePath, a: int, b: int, c: int) -> None:
    """Raise NotAValley naming the first defining condition that fails."""
    w = path.values
    if not 0 <= a < b < c < len(w):
        raise NotAValley(f"indices must satisfy 0 <= a < b < c < {len(w)}, got ({a}, {b}, {c})")
    if w[b] > w[a:c + 1].min():
        raise NotAValley("W(b) is not the minimum on [a, c]")
    if w[a] < w[a:b + 1].max():
        raise NotAValley("W(a) is not the maximum on [a, b]")
    if w[c] < w[b:c + 1].max():
        raise NotAValley("W(c) is not the maximum on [b, c]")


def depth(path: PiecewisePath, a: int, b: int, c: int) -> float:
    check_valley(path, a, b, c)
    w = path.values
    return float(min(w[a] - w[b], w[c] - w[b]))


def _valley(path, a, b, c) -> Valley:
    w = path.values
    return Valley(int(a), int(b), int(c), float(min(w[a] - w[b], w[c] - w[b])))


def refine_left(path: PiecewisePath, v: Valley) -> tuple[Valley, Valley]:
    """Split ``v`` at the largest rise ``W(e) - W(d)`` with ``a <= d < e <= b``.

    Returns ``(a, d, e)`` and ``(e, b, c)``; raises NoRefinement when
    ``W`` never rises on ``[a, b]``.
    """
    a, b, c = v.a_idx, v.b_idx, v.c_idx
    seg = path.values[a:b + 1]
    if seg.size < 2:
        raise NoRefinement("segment [a, b] has no interior")
    prefmin = np.minimum.accumulate(seg)
    rise = seg[1:] - prefmin[:-1]  # rise[j] ends at a + j + 1
    j = int(np.argmax(rise))
    if rise[j] <= 0:
        raise NoRefinement("W does not rise on [a, b]")
    e = a + j + 1
    lowest = prefmin[j]
    d = a + int(np.flatnonzero(seg[:j + 1] == lowest)[-1])
    return _valley(path, a, d, e), _valley(path, e, b, c)


def refine_right(path: PiecewisePath, v: Valley) -> tuple[Valley, Valley]:
    """Mirror of :func:`refine_left`: split at the largest fall on ``[b, c]``.

    Finds ``b <= x < y <= c`` maximizing ``W(x) - W(y)`` (largest ``x``, then
    smallest ``y``) and returns ``(a, b, x)`` and ``(x, y, c)``.
    """
    a, b, c = v.a_idx, v.b_idx, v.c_idx
    seg = path.values[b:c + 1]
    if seg.size < 2:
        raise NoRefinement("segment [b, c] has no interior")
    sufmin = np.minimum.accumulate(seg[::-1])[::-1]
    fall = seg[:-1] - sufmin[1:]  # fall[j] starts at b + j
    best = fall.max()
    if best <= 0:
        raise NoRefinement("W does not fall on [b, c]")
    j = int(np.flatnonzero(fall == best)[-1])
    x = b + j
    lowest = sufmin[j + 1]
    y = x + 1 + int(np.flatnonzero(seg[j + 1:] == lowest)[0])
    return _valley(path, a, b, x), _valley(path, x, y, c)


def _argmin_near_origin(path: PiecewisePath, lo: int, hi: int) -> int:
    seg = path.values[lo:hi + 1]
    cand = lo + np.flatnonzero(seg == seg.min())
    t = path.grid[cand]
    order = np.lexsort((t, np.abs(t)))
    return int(cand[order[0]])


def initial_valley(path: PiecewisePath, threshold: float) -> Valley:
    """Valley between the first crossings of ``threshold`` on either side of 0."""
    if not threshold > 0:
        raise DomainError("threshold must be positive")
    w = path.values
    o = path.origin_index
    right = np.flatnonzero(w[o:] >= threshold)
    left = np.flatnonzero(w[:o + 1] >= threshold)
    if right.size == 0 or left.size == 0:
        side = "right" if right.size == 0 else "left"
        raise InsufficientHorizon(f"path never reaches {threshold} on the {side} of 0")
    c = o + int(right[0])
    a = int(left[-1])
    if a == c:
        raise DomainError("path starts above the threshold at the origin")
    return _valley(path, a, _argmin_near_origin(path, a, c), c)


def _descend(path, v, threshold, first):
    sides = (refine_left, refine_right) if first == "left" else (refine_right, refine_left)
    for refine in sides:
        try:
            pair = refine(path, v)
        except NoRefinement:
            continue
        for sub in pair:
            if sub.contains_origin(path) and sub.depth >= threshold:
                return sub
    return None


def smallest_valley(path: PiecewisePath, threshold: float) -> Valley:
    """Smallest valley with depth >= ``threshold`` strictly surrounding the origin.

    Starts from :func:`initial_valley` and keeps descending into a refinement
    sub-valley that still surrounds 0 and is deep enough.  The side holding the
    origin is tried first; the other side is tried before stopping, so the
    result admits no further admissible refinement.
    """
    v = initial_valley(path, threshold)
    o = path.origin_index
    while True:
        nxt = _descend(path, v, threshold, "left" if o < v.b_idx else "right")
        if nxt is None:
            return v
        v = nxt


def refinements(path: PiecewisePath, v: Valley) -> list[Valley]:
    out = []
    for refine in (refine_left, refine_right):
        try:
            out.extend(refine(path, v))
        except NoRefinement:
            pass
    return out


def iterated_refinements(path: PiecewisePath, v: Valley, max_nodes: int = 100_000) -> list[Valley]:
    """Every valley reachable from ``v`` by one or more refinement steps."""
    seen = set()
    out = []
    queue = deque([v])
    while queue:
        cur = queue.popleft()
        for sub in refinements(path, cur):
            key = (sub.a_idx, sub.b_idx, sub.c_idx)
            if key in seen:
                continue
            seen.add(key)
            out.append(sub)
            queue.append(sub)
            if len(out) >= max_nodes:
                raise DomainError(f"more than {max_nodes} iterated refinements")
    return out


@dataclass(frozen=True)
class GoodEvent:
    same_bottom: bool
    alternatives_shallow: bool
    separated: bool
    narrow: bool

    @property
    def all(self) -> bool:
        return self.same_bottom and self.alternatives_shallow and self.separated and self.narrow

    def as_dict(self) -> dict:
        return {"same_bottom": self.same_bottom, "alternatives_shallow": self.alternatives_shallow,
                "separated": self.separated, "narrow": self.narrow, "all": self.all}


def check_good_event(path: PiecewisePath, threshold: float, J: float, delta: float,
                     iterated: bool = False) -> GoodEvent:
    """Component indicators of the regularity event for one path.

    Compares the smallest valleys at ``threshold`` and ``threshold + delta``:
    same bottom; every refinement of the deeper valley with another bottom has
    depth ``< threshold - delta``; outside ``[b - delta, b + delta]`` the
    threshold valley stays more than ``delta**3`` above its bottom; and
    ``|a_delta| + |c_delta| <= J``.  With ``iterated`` the second condition
    covers all iterated refinements instead of single steps.
    """
    v1 = smallest_valley(path, threshold)
    vd = smallest_valley(path, threshold + delta)
    g, w = path.grid, path.values
    same = v1.b_idx == vd.b_idx
    subs = iterated_refinements(path, vd) if iterated else refinements(path, vd)
    shallow = all(s.depth < threshold - delta for s in subs if s.b_idx != v1.b_idx)
    tb = g[v1.b_idx]
    span = slice(v1.a_idx, v1.c_idx + 1)
    outside = np.abs(g[span] - tb) > delta
    sep = bool(not outside.any() or (w[span][outside].min() - w[v1.b_idx] > delta ** 3))
    narrow = bool(abs(g[vd.a_idx]) + abs(g[vd.c_idx]) <= J)
    return GoodEvent(bool(same), bool(shallow), sep, narrow)

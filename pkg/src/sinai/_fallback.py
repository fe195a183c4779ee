"""Pure-Python versions of the kernels in ``_core.pyx``.

Signatures, return values and random-number consumption order match the
compiled module, so either backend yields the same trajectories.  Brownian
paths are grown in blocks here, which only means more of the stream is
materialized ahead of time.
"""

import numpy as np

_BLOCK = 4096


def walk(up, stay, lo, start, checkpoints, rng):
    nsites = len(up)
    out = np.zeros(len(checkpoints), dtype=np.int64)
    i = start - lo
    if i < 0 or i >= nsites:
        return out, 0, True
    up = up.tolist()
    stay = stay.tolist()
    t = 0
    draws = []
    pos = 0
    for c, stop in enumerate(np.asarray(checkpoints).tolist()):
        while t < stop:
            if pos == len(draws):
                draws = rng.random(min(_BLOCK, stop - t)).tolist()
                pos = 0
            u = draws[pos]
            pos += 1
            if u < up[i]:
                i += 1
            elif u >= stay[i]:
                i -= 1
            t += 1
            if i < 0 or i >= nsites:
                return out, t, True
        out[c] = i + lo
    return out, t, False


def hit_times(up, stay, lo, start, target, n_trials, max_steps, rng):
    nsites = len(up)
    up = up.tolist()
    stay = stay.tolist()
    goal = target - lo
    out = np.empty(n_trials, dtype=np.int64)
    draws = []
    pos = 0
    for k in range(n_trials):
        i = start - lo
        t = 0
        while i != goal and t < max_steps:
            if pos == len(draws):
                draws = rng.random(_BLOCK).tolist()
                pos = 0
            u = draws[pos]
            pos += 1
            if u < up[i]:
                i += 1
            elif u >= stay[i]:
                i -= 1
            t += 1
            if i < 0 or i >= nsites:
                break
        if i == goal:
            out[k] = t
        elif i < 0 or i >= nsites:
            out[k] = -2
        else:
            out[k] = -1
    return out


def _grow(buf, filled, sqrt_dt, rng):
    n = min(len(buf) - filled, _BLOCK)
    inc = sqrt_dt * rng.standard_normal(n)
    inc[0] += buf[filled - 1]
    buf[filled:filled + n] = np.cumsum(inc)
    return filled + n


def rise_scan(buf, filled, start, runmin, level, sqrt_dt, rng):
    cap = len(buf)
    k = start
    while k < cap:
        if k >= filled:
            filled = _grow(buf, filled, sqrt_dt, rng)
        seg = buf[k:filled]
        mins = np.minimum.accumulate(np.minimum(seg, runmin))
        hit = np.flatnonzero(seg - mins >= level)
        if hit.size:
            j = int(hit[0])
            return k + j, filled, float(mins[j])
        runmin = float(mins[-1])
        k = filled
    return -1, filled, runmin


def exit_scan(buf, filled, start, lower, upper, sqrt_dt, rng):
    cap = len(buf)
    k = start
    while k < cap:
        if k >= filled:
            filled = _grow(buf, filled, sqrt_dt, rng)
        seg = buf[k:filled]
        hit = np.flatnonzero((seg <= lower) | (seg >= upper))
        if hit.size:
            return k + int(hit[0]), filled
        k = filled
    return -1, filled

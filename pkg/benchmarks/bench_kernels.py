"""Compiled core against the pure-Python fallback on the hot kernels.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Prints nanoseconds per step (walk kernels) or per sample (path scans) and the
speedup.  Both backends consume the same random stream, so each pair of runs
also checks that the results agree.
"""

import argparse
import math
import time

import numpy as np

from sinai import _fallback
from sinai.env import EnvironmentLaw, sample_environment
from sinai.mc import make_rng
from sinai.rwre import _thresholds

try:
    from sinai import _core
except ImportError:
    _core = None


def _walk_case(mod, n_steps):
    env = sample_environment(EnvironmentLaw(), -20_000, 20_000, 1)
    up, stay = _thresholds(env)
    out = mod.walk(up, stay, env.lo, 0, np.array([n_steps], dtype=np.int64), make_rng(7))
    return (int(out[0][-1]), out[1], out[2]), n_steps


def _hit_case(mod, n_trials):
    env = sample_environment(EnvironmentLaw(), -8, 8, 2)
    up, stay = _thresholds(env, reflect_at=-8)
    t = mod.hit_times(up, stay, env.lo, 0, 8, n_trials, 10**9, make_rng(3))
    return t.tobytes(), int(t.sum())


def _rise_case(mod, _):
    buf = np.zeros(1 << 22)
    k, filled, _ = mod.rise_scan(buf, 1, 0, math.inf, 1.5, 0.01, make_rng(5))
    if k < 0:
        k = filled
    return (k, float(buf[k])), k


CASES = {
    "walk (ns/step)": (_walk_case, 2_000_000, 20_000_000),
    "hit_times (ns/step)": (_hit_case, 200, 20_000),
    "rise_scan (ns/sample)": (_rise_case, None, None),
}


def bench(fn, arg, repeat):
    best, result = math.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result, units = fn(arg)
        best = min(best, (time.perf_counter() - t0) / max(units, 1))
    return best * 1e9, result


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _core is None:
        raise SystemExit("compiled core is not built; run pip install -e . --no-build-isolation")
    print(f"{'kernel':24s} {'python':>12s} {'compiled':>12s} {'speedup':>9s}  agree")
    for name, (case, py_arg, c_arg) in CASES.items():
        py_ns, py_res = bench(lambda a: case(_fallback, a), py_arg, args.repeat)
        c_ns, c_res = bench(lambda a: case(_core, a), py_arg, args.repeat)
        if c_arg is not None:
            c_ns, _ = bench(lambda a: case(_core, a), c_arg, args.repeat)
        print(f"{name:24s} {py_ns:12.1f} {c_ns:12.1f} {py_ns / c_ns:8.1f}x  {py_res == c_res}", flush=True)


if __name__ == "__main__":
    main()

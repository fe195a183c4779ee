# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: quenched walk stepping and Brownian path growth.

Every kernel draws from the numpy bit generator of the ``Generator`` it is
handed, one variate at a time, in the same order as ``_fallback`` does in
blocks.  The two backends therefore produce identical paths.
"""

import numpy as np
cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.stdint cimport int64_t
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport random_standard_normal

cnp.import_array()


cdef bitgen_t* _bitgen(object rng) except NULL:
    capsule = rng.bit_generator.capsule
    return <bitgen_t*> PyCapsule_GetPointer(capsule, "BitGenerator")


def walk(const double[::1] up, const double[::1] stay, int64_t lo, int64_t start,
         const int64_t[::1] checkpoints, object rng):
    cdef bitgen_t* bg = _bitgen(rng)
    cdef Py_ssize_t nsites = up.shape[0]
    cdef Py_ssize_t ncp = checkpoints.shape[0]
    cdef int64_t[::1] out = np.zeros(ncp, dtype=np.int64)
    cdef Py_ssize_t i = start - lo
    cdef int64_t t = 0
    cdef int64_t stop
    cdef Py_ssize_t c
    cdef double u
    if i < 0 or i >= nsites:
        return np.asarray(out), 0, True
    with nogil:
        for c in range(ncp):
            stop = checkpoints[c]
            while t < stop:
                u = bg.next_double(bg.state)
                if u < up[i]:
                    i += 1
                elif u >= stay[i]:
                    i -= 1
                t += 1
                if i < 0 or i >= nsites:
                    break
            if i < 0 or i >= nsites:
                break
            out[c] = i + lo
    if i < 0 or i >= nsites:
        return np.asarray(out), t, True
    return np.asarray(out), t, False


def hit_times(const double[::1] up, const double[::1] stay, int64_t lo, int64_t start,
              int64_t target, Py_ssize_t n_trials, int64_t max_steps, object rng):
    cdef bitgen_t* bg = _bitgen(rng)
    cdef Py_ssize_t nsites = up.shape[0]
    cdef int64_t[::1] out = np.empty(n_trials, dtype=np.int64)
    cdef Py_ssize_t k, i
    cdef Py_ssize_t goal = target - lo
    cdef int64_t t
    cdef double u
    with nogil:
        for k in range(n_trials):
            i = start - lo
            t = 0
            while i != goal and t < max_steps:
                u = bg.next_double(bg.state)
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
    return np.asarray(out)


def rise_scan(double[::1] buf, Py_ssize_t filled, Py_ssize_t start, double runmin,
              double level, double sqrt_dt, object rng):
    cdef bitgen_t* bg = _bitgen(rng)
    cdef Py_ssize_t cap = buf.shape[0]
    cdef Py_ssize_t k = start
    cdef double v
    with nogil:
        while k < cap:
            if k >= filled:
                buf[k] = buf[k - 1] + sqrt_dt * random_standard_normal(bg)
                filled = k + 1
            v = buf[k]
            if v < runmin:
                runmin = v
            if v - runmin >= level:
                break
            k += 1
    if k == cap:
        return -1, filled, runmin
    return k, filled, runmin


def exit_scan(double[::1] buf, Py_ssize_t filled, Py_ssize_t start, double lower,
              double upper, double sqrt_dt, object rng):
    cdef bitgen_t* bg = _bitgen(rng)
    cdef Py_ssize_t cap = buf.shape[0]
    cdef Py_ssize_t k = start
    cdef double v
    with nogil:
        while k < cap:
            if k >= filled:
                buf[k] = buf[k - 1] + sqrt_dt * random_standard_normal(bg)
                filled = k + 1
            v = buf[k]
            if v <= lower or v >= upper:
                break
            k += 1
    if k == cap:
        return -1, filled
    return k, filled

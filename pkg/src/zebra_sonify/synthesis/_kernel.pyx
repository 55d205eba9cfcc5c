# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled partial-rendering kernel.

Same math as ``_kernel_numpy.render_partials`` but with per-sample
recurrences: the damped sinusoid is advanced by one complex rotation and one
envelope multiply per sample, keeping libm calls out of the inner loop.
Rounding drift of the recurrences stays far below the analysis tolerances
used anywhere in the package (relative error ~1e-12 over seconds of audio).
"""

import numpy as np

from libc.math cimport cos, exp, sin


def render_partials(double[::1] freqs, double[::1] amps, double[::1] decays,
                    double attack, Py_ssize_t n_samples, double sample_rate):
    out_arr = np.zeros(n_samples, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t n_partials = freqs.shape[0]
    cdef Py_ssize_t i, k, ramp_end
    cdef double w, cw, sw, d, a, s, c, e, tmp
    cdef double two_pi = 6.283185307179586476925287

    if n_samples == 0 or n_partials == 0:
        return out_arr

    for k in range(n_partials):
        w = two_pi * freqs[k] / sample_rate
        cw = cos(w)
        sw = sin(w)
        d = exp(-1.0 / (decays[k] * sample_rate))
        a = amps[k]
        s = 0.0   # sin(w * 0)
        c = 1.0   # cos(w * 0)
        e = 1.0   # envelope at t = 0
        for i in range(n_samples):
            out[i] += a * e * s
            tmp = s * cw + c * sw
            c = c * cw - s * sw
            s = tmp
            e *= d

    if attack > 0.0:
        ramp_end = <Py_ssize_t>(attack * sample_rate)
        if ramp_end > n_samples:
            ramp_end = n_samples
        for i in range(ramp_end):
            out[i] *= (i / sample_rate) / attack
    return out_arr

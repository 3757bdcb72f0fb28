# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loop of the Fourier-inversion quadrature.

Evaluates, for every requested point ``x[i]``,

    out[i] = sum_j ( wre[j]*cos(t[j]*x[i]) + wim[j]*sin(t[j]*x[i]) )

which is the real part of a weighted sum of complex exponentials.  The
weights carry the quadrature rule and the characteristic-function values,
so the caller controls node placement and truncation.
"""

import numpy as np

from libc.math cimport cos, sin


def inversion_sum(double[::1] x, double[::1] t, double[::1] wre, double[::1] wim):
    cdef Py_ssize_t i, j
    cdef Py_ssize_t nx = x.shape[0]
    cdef Py_ssize_t nt = t.shape[0]
    out_arr = np.empty(nx, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double acc, comp, term, y, tmp, xi, ph
    with nogil:
        for i in range(nx):
            xi = x[i]
            # Kahan-compensated: the oscillatory sums cancel to values far
            # below the running partial sums, so naive accumulation would
            # put a round-off floor on the quadrature.
            acc = 0.0
            comp = 0.0
            for j in range(nt):
                ph = t[j] * xi
                term = wre[j] * cos(ph) + wim[j] * sin(ph)
                y = term - comp
                tmp = acc + y
                comp = (tmp - acc) - y
                acc = tmp
            out[i] = acc
    return out_arr

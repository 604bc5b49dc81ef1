# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled elementwise kernels for the split-step hot loop.

Single fused pass per kernel: avoids the temporaries the numpy fallback
allocates for |u|^p and the complex exponential.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin, pow, sqrt

BACKEND = "cython"


def abs2(object u_in):
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] u = np.ascontiguousarray(u_in).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(u.shape[0], dtype=np.float64)
    cdef Py_ssize_t i, n = u.shape[0]
    cdef double re, im
    for i in range(n):
        re = u[i].real
        im = u[i].imag
        out[i] = re * re + im * im
    return out.reshape(u_in.shape)


def phase_rotate(object u_in, object pot_in, double a, double p):
    """u * exp(-i*(a*|u|^p + pot)), elementwise."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] u = np.ascontiguousarray(u_in).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] pot = np.ascontiguousarray(pot_in, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.empty(u.shape[0], dtype=np.complex128)
    cdef Py_ssize_t i, n = u.shape[0]
    cdef double re, im, m2, phase, c, s
    cdef bint quadratic = (p == 2.0), skip_power = (a == 0.0)
    for i in range(n):
        re = u[i].real
        im = u[i].imag
        m2 = re * re + im * im
        if skip_power:
            phase = pot[i]
        elif quadratic:
            phase = a * m2 + pot[i]
        else:
            phase = a * pow(sqrt(m2), p) + pot[i]
        c = cos(phase)
        s = sin(phase)
        # (re + i*im) * (c - i*s)
        out[i].real = re * c + im * s
        out[i].imag = im * c - re * s
    return out.reshape(u_in.shape)

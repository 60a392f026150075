# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled beamforming inner loops.

Each output direction is owned by exactly one OpenMP thread (static
schedule over the direction axis), so results are bit-identical for any
thread count.
"""

import numpy as np

from cython.parallel cimport prange
from libc.math cimport cos, sin

BACKEND = "compiled"


def azimuth_sum(double complex[:, ::1] sprime, double[:, ::1] phase,
                long long[::1] win_start, long long[::1] win_len, int threads=1):
    """Windowed weighted chirp sum after elevation combining."""
    cdef Py_ssize_t n_dir = phase.shape[0]
    cdef Py_ssize_t n_chirp = phase.shape[1]
    cdef Py_ssize_t n_fast = sprime.shape[1]
    out_arr = np.zeros((n_dir, n_fast), dtype=np.complex128)
    cdef double complex[:, ::1] out = out_arr
    cdef Py_ssize_t i, k, n, t
    cdef double ph
    cdef double complex w
    cdef int nthreads = threads if threads > 0 else 1
    with nogil:
        for i in prange(n_dir, schedule='static', num_threads=nthreads):
            for k in range(win_len[i]):
                t = win_start[i] + k
                if t >= n_chirp:
                    t = t - n_chirp
                ph = phase[i, t]
                w = cos(ph) + 1j * sin(ph)
                for n in range(n_fast):
                    out[i, n] = out[i, n] + w * sprime[t, n]
    return out_arr


def direct_sum(double complex[:, :, ::1] cube, double[:, ::1] phase,
               double[::1] elev_phase, long long[::1] win_start,
               long long[::1] win_len, int threads=1):
    """Windowed weighted sum over antennas and chirps (no factorization)."""
    cdef Py_ssize_t n_ant = cube.shape[0]
    cdef Py_ssize_t n_dir = phase.shape[0]
    cdef Py_ssize_t n_chirp = phase.shape[1]
    cdef Py_ssize_t n_fast = cube.shape[2]
    out_arr = np.zeros((n_dir, n_fast), dtype=np.complex128)
    cdef double complex[:, ::1] out = out_arr
    cdef Py_ssize_t i, a, k, n, t
    cdef double ph
    cdef double complex w
    cdef int nthreads = threads if threads > 0 else 1
    with nogil:
        for i in prange(n_dir, schedule='static', num_threads=nthreads):
            for a in range(n_ant):
                for k in range(win_len[i]):
                    t = win_start[i] + k
                    if t >= n_chirp:
                        t = t - n_chirp
                    ph = phase[i, t] + elev_phase[a]
                    w = cos(ph) + 1j * sin(ph)
                    for n in range(n_fast):
                        out[i, n] = out[i, n] + w * cube[a, t, n]
    return out_arr

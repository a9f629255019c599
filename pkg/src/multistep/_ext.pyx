# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: tree split search and delay-equation integration.

Contracts match ``multistep._fallback``; see that module for docs.
"""

from libc.math cimport fabs, pow, INFINITY

import numpy as np
cimport numpy as cnp

cnp.import_array()


def best_split(double[::1] xs, double[:, ::1] ys, int min_leaf=1):
    cdef Py_ssize_t n = xs.shape[0]
    cdef Py_ssize_t m = ys.shape[1]
    cdef Py_ssize_t i, j
    if n < 2 * min_leaf or n < 2:
        return (-INFINITY, 0)

    cdef cnp.ndarray[double, ndim=1] run_arr = np.zeros(m, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] tot_arr = np.zeros(m, dtype=np.float64)
    cdef double[::1] run = run_arr
    cdef double[::1] tot = tot_arr

    for i in range(n):
        for j in range(m):
            tot[j] += ys[i, j]

    cdef double best_score = -INFINITY
    cdef Py_ssize_t best_pos = 0
    cdef double n_left, n_right, left_sq, right_sq, diff, score
    for i in range(n - 1):
        for j in range(m):
            run[j] += ys[i, j]
        n_left = i + 1
        n_right = n - n_left
        if n_left < min_leaf or n_right < min_leaf:
            continue
        if xs[i + 1] == xs[i]:
            continue
        left_sq = 0.0
        right_sq = 0.0
        for j in range(m):
            left_sq += run[j] * run[j]
            diff = tot[j] - run[j]
            right_sq += diff * diff
        score = left_sq / n_left + right_sq / n_right
        if score > best_score:
            best_score = score
            best_pos = i + 1
    if best_pos == 0:
        return (-INFINITY, 0)
    return (best_score, best_pos)


def mg_integrate(double[::1] buf, Py_ssize_t delay, Py_ssize_t steps,
                 double beta, double gamma, double exponent, double dt):
    cdef double x = buf[delay]
    cdef double xt, drive, k1, k2, k3, k4
    cdef Py_ssize_t i
    for i in range(steps):
        xt = buf[i]
        drive = beta * xt / (1.0 + pow(xt, exponent))
        k1 = dt * (drive - gamma * x)
        k2 = dt * (drive - gamma * (x + 0.5 * k1))
        k3 = dt * (drive - gamma * (x + 0.5 * k2))
        k4 = dt * (drive - gamma * (x + k3))
        x = x + (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        if fabs(x) > 1e6:
            return i
        buf[delay + i + 1] = x
    return -1

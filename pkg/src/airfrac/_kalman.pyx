# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled scalar Kalman recursions (see _kalman_py for the reference)."""
import numpy as np
cimport numpy as cnp
from libc.math cimport log, M_PI, INFINITY

cnp.import_array()


def kalman_loglik(const double[::1] g, const double[::1] e, const double[::1] f,
                  const double[::1] c, double a1, double p1, double su2, double se2):
    cdef Py_ssize_t t, n = g.shape[0]
    cdef double a = a1, p = p1, v, fv, k, ll = 0.0, log2pi = log(2.0 * M_PI)
    with nogil:
        for t in range(n):
            v = g[t] - e[t] * a
            fv = e[t] * e[t] * p + su2
            if fv <= 0.0:
                ll = -INFINITY
                break
            ll -= 0.5 * (log2pi + log(fv) + v * v / fv)
            k = p * e[t] / fv
            a = a + k * v
            p = p * su2 / fv
            a = c[t] + f[t] * a
            p = f[t] * f[t] * p + se2
    return ll


def kalman_filter(const double[::1] g, const double[::1] e, const double[::1] f,
                  const double[::1] c, double a1, double p1, double su2, double se2):
    cdef Py_ssize_t t, n = g.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] a_pred = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] p_pred = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] a_filt = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] p_filt = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] vv = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ff = np.empty(n)
    cdef double a = a1, p = p1, v, fv, k, ll = 0.0, log2pi = log(2.0 * M_PI)
    cdef bint degenerate = 0
    for t in range(n):
        a_pred[t] = a
        p_pred[t] = p
        v = g[t] - e[t] * a
        fv = e[t] * e[t] * p + su2
        vv[t] = v
        ff[t] = fv
        if fv <= 0.0:
            degenerate = 1
            break
        ll -= 0.5 * (log2pi + log(fv) + v * v / fv)
        k = p * e[t] / fv
        a = a + k * v
        p = p * su2 / fv
        a_filt[t] = a
        p_filt[t] = p
        a = c[t] + f[t] * a
        p = f[t] * f[t] * p + se2
    if degenerate:
        ll = float("-inf")
    return a_pred, p_pred, a_filt, p_filt, vv, ff, ll


def kalman_smooth(const double[::1] a_pred, const double[::1] p_pred,
                  const double[::1] a_filt, const double[::1] p_filt,
                  const double[::1] f):
    cdef Py_ssize_t t, n = a_pred.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] a_s = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] p_s = np.empty(n)
    cdef double j
    a_s[n - 1] = a_filt[n - 1]
    p_s[n - 1] = p_filt[n - 1]
    for t in range(n - 2, -1, -1):
        if p_pred[t + 1] > 0.0:
            j = p_filt[t] * f[t] / p_pred[t + 1]
        else:
            j = 0.0
        a_s[t] = a_filt[t] + j * (a_s[t + 1] - a_pred[t + 1])
        p_s[t] = p_filt[t] + j * j * (p_s[t + 1] - p_pred[t + 1])
    return a_s, p_s

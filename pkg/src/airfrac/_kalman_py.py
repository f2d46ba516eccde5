"""Pure-Python scalar Kalman recursions.

Reference implementation and import-time fallback for the compiled
``_kalman`` extension; both expose the same three functions.  The state
transition is ``a[t+1] = c[t] + f[t] * a[t] + eta``.
"""
import math

import numpy as np

_LOG2PI = math.log(2.0 * math.pi)


def kalman_loglik(g, e, f, c, a1, p1, su2, se2):
    a, p, ll = float(a1), float(p1), 0.0
    for gt, et, ft, ct in zip(g.tolist(), e.tolist(), f.tolist(), c.tolist()):
        v = gt - et * a
        fv = et * et * p + su2
        if fv <= 0.0:
            return -math.inf
        ll -= 0.5 * (_LOG2PI + math.log(fv) + v * v / fv)
        a += p * et / fv * v
        p = p * su2 / fv
        a = ct + ft * a
        p = ft * ft * p + se2
    return ll


def kalman_filter(g, e, f, c, a1, p1, su2, se2):
    n = len(g)
    a_pred, p_pred = np.empty(n), np.empty(n)
    a_filt, p_filt = np.empty(n), np.empty(n)
    vv, ff = np.empty(n), np.empty(n)
    a, p, ll = float(a1), float(p1), 0.0
    gl, el, fl, cl = g.tolist(), e.tolist(), f.tolist(), c.tolist()
    for t in range(n):
        a_pred[t], p_pred[t] = a, p
        v = gl[t] - el[t] * a
        fv = el[t] * el[t] * p + su2
        vv[t], ff[t] = v, fv
        if fv <= 0.0:
            ll = -math.inf
            break
        ll -= 0.5 * (_LOG2PI + math.log(fv) + v * v / fv)
        a += p * el[t] / fv * v
        p = p * su2 / fv
        a_filt[t], p_filt[t] = a, p
        a = cl[t] + fl[t] * a
        p = fl[t] * fl[t] * p + se2
    return a_pred, p_pred, a_filt, p_filt, vv, ff, ll


def kalman_smooth(a_pred, p_pred, a_filt, p_filt, f):
    n = len(a_pred)
    a_s, p_s = np.empty(n), np.empty(n)
    a_s[-1], p_s[-1] = a_filt[-1], p_filt[-1]
    for t in range(n - 2, -1, -1):
        j = p_filt[t] * f[t] / p_pred[t + 1] if p_pred[t + 1] > 0.0 else 0.0
        a_s[t] = a_filt[t] + j * (a_s[t + 1] - a_pred[t + 1])
        p_s[t] = p_filt[t] + j * j * (p_s[t + 1] - p_pred[t + 1])
    return a_s, p_s

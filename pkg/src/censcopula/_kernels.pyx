# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled likelihood kernels.

Scalar twins of the numpy routines in ``_kernels_py``; the inner loops of
local-likelihood fitting, cross-validation and the bootstrap all funnel
through these three entry points.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, expm1, fabs, fmax, fmin, log, log1p

cnp.import_array()

cdef double ETA_MAX = 700.0
cdef double FRANK_ZERO = 1e-8
cdef double FRANK_TAYLOR = 1e-5
cdef double FRANK_LOGSPACE = 35.0
cdef double FRANK_THETA_MAX = 500.0

cdef int FAM_CLAYTON = 0
cdef int FAM_FRANK = 1
cdef int FAM_GUMBEL = 2


cdef inline double _theta_from_eta(int fam, double eta) noexcept nogil:
    if eta > ETA_MAX:
        eta = ETA_MAX
    elif eta < -ETA_MAX:
        eta = -ETA_MAX
    if fam == FAM_CLAYTON:
        return exp(eta)
    if fam == FAM_GUMBEL:
        return exp(eta) + 1.0
    if eta == 0.0:
        return FRANK_ZERO
    return eta


cdef inline double _ln_expm1(double x) noexcept nogil:
    # log(e^x - 1), x > 0
    if x < 30.0:
        return log(expm1(x))
    return x + log1p(-exp(-x))


cdef inline double _logaddexp(double x, double y) noexcept nogil:
    cdef double m = fmax(x, y)
    return m + log1p(exp(fmin(x, y) - m))


# --- Clayton ---------------------------------------------------------------

cdef inline double _clayton_ln_a(double theta, double a, double b) noexcept nogil:
    cdef double p = -theta * a
    cdef double q = -theta * b
    cdef double m = fmax(p, q)
    if m < 1e-3:
        return log1p(expm1(p) + expm1(q))
    if m <= 700.0:
        return log(exp(p) + exp(q) - 1.0)
    return m + log(exp(p - m) + exp(q - m) - exp(-m))


cdef inline double _clayton_ll(double theta, double u1, double u2, int d1, int d2) noexcept nogil:
    cdef double a = log(u1)
    cdef double b = log(u2)
    cdef double ln_a = _clayton_ln_a(theta, a, b)
    if d1 == 0 and d2 == 0:
        return -ln_a / theta
    if d1 == 1 and d2 == 0:
        return -(theta + 1.0) * a - (1.0 + 1.0 / theta) * ln_a
    if d1 == 0 and d2 == 1:
        return -(theta + 1.0) * b - (1.0 + 1.0 / theta) * ln_a
    return log1p(theta) - (theta + 1.0) * (a + b) - (2.0 + 1.0 / theta) * ln_a


# --- Frank -----------------------------------------------------------------

cdef inline double _frank_ll(double theta, double u1, double u2, int d1, int d2) noexcept nogil:
    cdef double t, x, y, v, ea, eb, ed, q, mn, mx, g, ln_q, ld, la, lb, lq, s
    if theta > FRANK_THETA_MAX:
        theta = FRANK_THETA_MAX
    elif theta < -FRANK_THETA_MAX:
        theta = -FRANK_THETA_MAX
    t = theta
    # the mirrored censoring case (0,1) is the h-function with swapped args
    if d1 == 0 and d2 == 1:
        x = u2
        y = u1
        d1 = 1
        d2 = 0
    else:
        x = u1
        y = u2

    if fabs(t) < FRANK_TAYLOR:
        if d1 == 0 and d2 == 0:
            v = x * y * (1.0 + t * (1.0 - x) * (1.0 - y) / 2.0
                         + t * t * (1.0 - x) * (1.0 - 2.0 * x) * (1.0 - y) * (1.0 - 2.0 * y) / 12.0)
        elif d1 == 1 and d2 == 0:
            v = (y + t * y * (1.0 - y) * (1.0 - 2.0 * x) / 2.0
                 + t * t * y * (1.0 - y) * (1.0 - 2.0 * y) * (6.0 * x * x - 6.0 * x + 1.0) / 12.0)
        else:
            v = (1.0 + t * (1.0 - 2.0 * x) * (1.0 - 2.0 * y) / 2.0
                 + t * t * (6.0 * x * x - 6.0 * x + 1.0) * (6.0 * y * y - 6.0 * y + 1.0) / 12.0)
        return log(v)

    if t <= -FRANK_LOGSPACE:
        s = -t
        la = _ln_expm1(s * x)
        lb = _ln_expm1(s * y)
        ld = _ln_expm1(s)
        if d1 == 0 and d2 == 0:
            # softplus keeps the tiny ratio that logaddexp(...) - ld absorbs
            v = la + lb - ld
            if v > 30.0:
                v = v + log1p(exp(-v))
            else:
                v = log1p(exp(v))
            return log(v / s)
        lq = _logaddexp(la + lb, ld)
        if d1 == 1 and d2 == 0:
            return s * x + lb - lq
        return log(s) + ld + s * (x + y) - 2.0 * lq

    # for t > 0 the small quantity is q = d + a*b ~ -e^{-t*min(x,y)}; once
    # t*min is large, forming q directly cancels catastrophically
    if t > 0.0 and t * fmin(x, y) >= 15.0:
        mn = fmin(x, y)
        mx = fmax(x, y)
        g = 1.0 + exp(-t * (mx - mn)) * (1.0 - exp(-t * mn)) - exp(-t * (1.0 - mn))
        ln_q = -t * mn + log(g)
        ld = log1p(-exp(-t))
        if d1 == 0 and d2 == 0:
            return log((t * mn - log(g) + ld) / t)
        if d1 == 1 and d2 == 0:
            return -t * x + log(-expm1(-t * y)) - ln_q
        return log(t) + ld - t * (x + y) - 2.0 * ln_q

    ea = expm1(-t * x)
    eb = expm1(-t * y)
    ed = expm1(-t)
    q = ed + ea * eb
    if d1 == 0 and d2 == 0:
        return log(-log1p(ea * eb / ed) / t)
    if d1 == 1 and d2 == 0:
        return -t * x + log(fabs(eb)) - log(fabs(q))
    return log(fabs(t) * fabs(ed)) - t * (x + y) - 2.0 * log(fabs(q))


# --- Gumbel ----------------------------------------------------------------

cdef inline double _gumbel_ll(double theta, double u1, double u2, int d1, int d2) noexcept nogil:
    cdef double x, y, la, lb, lla, llb, ln_s, w
    if d1 == 0 and d2 == 1:
        x = u2
        y = u1
        d1 = 1
        d2 = 0
    else:
        x = u1
        y = u2
    la = -log(x)
    lb = -log(y)
    lla = log(la)
    llb = log(lb)
    ln_s = _logaddexp(theta * lla, theta * llb)
    w = exp(ln_s / theta)
    if d1 == 0 and d2 == 0:
        return -w
    if d1 == 1 and d2 == 0:
        return -w + (1.0 / theta - 1.0) * ln_s + (theta - 1.0) * lla + la
    return (-w + (theta - 1.0) * (lla + llb) + (1.0 / theta - 2.0) * ln_s
            + log(w + theta - 1.0) + la + lb)


cdef inline double _ll_point(int fam, double theta, double u1, double u2, int d1, int d2) noexcept nogil:
    if fam == FAM_CLAYTON:
        return _clayton_ll(theta, u1, u2, d1, d2)
    if fam == FAM_FRANK:
        return _frank_ll(theta, u1, u2, d1, d2)
    return _gumbel_ll(theta, u1, u2, d1, d2)


# --- entry points ----------------------------------------------------------

def loglik_sum(int fam_code, double theta, double[::1] u1, double[::1] u2,
               unsigned char[::1] d1, unsigned char[::1] d2, Py_ssize_t exclude=-1):
    cdef Py_ssize_t i, n = u1.shape[0]
    cdef double acc = 0.0
    for i in range(n):
        if i == exclude:
            continue
        acc += _ll_point(fam_code, theta, u1[i], u2[i], d1[i], d2[i])
    return acc


def loglik_terms(int fam_code, theta, double[::1] u1, double[::1] u2,
                 unsigned char[::1] d1, unsigned char[::1] d2):
    cdef Py_ssize_t i, n = u1.shape[0]
    arr = np.asarray(theta, dtype=np.float64)
    if arr.ndim == 0:
        arr = np.full(n, float(arr))
    cdef double[::1] tv = np.ascontiguousarray(arr)
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    for i in range(n):
        ov[i] = _ll_point(fam_code, tv[i], u1[i], u2[i], d1[i], d2[i])
    return out


def local_objective(int fam_code, double beta0, double beta1, double[::1] u1, double[::1] u2,
                    unsigned char[::1] d1, unsigned char[::1] d2,
                    double[::1] dx, double[::1] w, Py_ssize_t exclude=-1):
    cdef Py_ssize_t i, n = u1.shape[0]
    cdef double acc = 0.0
    cdef double theta
    for i in range(n):
        if i == exclude:
            continue
        theta = _theta_from_eta(fam_code, beta0 + beta1 * dx[i])
        acc += w[i] * _ll_point(fam_code, theta, u1[i], u2[i], d1[i], d2[i])
    return acc

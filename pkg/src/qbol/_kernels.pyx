# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the scalar root-finding kernels (see ``_pykernels`` for the reference)."""
from libc.math cimport log, log1p, sqrt, exp, fabs, INFINITY, nextafter

import numpy as np
cimport numpy as cnp

cnp.import_array()

from qbol._pykernels import KernelError

cdef int MAX_DOUBLINGS = 120
cdef int MAX_BISECT = 200
cdef int MAX_LAMBDA_ITERS = 400


cdef inline double _psi_prime(double k, double V, double alpha, double gmax,
                              double quad, double x) nogil:
    cdef double F
    if x == 0.0:
        return 0.0
    F = log1p(x / alpha)
    if gmax * sqrt(F) <= sqrt(V):
        return 2.0 * k * sqrt(V * F) + quad * x
    return k * gmax * F + k * V / gmax + quad * x


cpdef double qb_psi_prime(double k, double V, double alpha, double gmax,
                          double quad, double x):
    if x < 0.0:
        raise ValueError("x must be >= 0")
    return _psi_prime(k, V, alpha, gmax, quad, x)


cpdef double qb_link_inverse(double k, double V, double alpha, double gmax,
                             double quad, double target, double cap):
    cdef double tol, lo, hi, mid, r, rlo, rhi
    cdef int n, it
    if target < 0.0:
        raise ValueError("target must be >= 0")
    if target == 0.0:
        return 0.0
    if cap < INFINITY and _psi_prime(k, V, alpha, gmax, quad, cap) <= target:
        return cap
    tol = 1e-10 * (1.0 + target)
    lo = 0.0
    hi = 1.0
    n = 0
    while _psi_prime(k, V, alpha, gmax, quad, hi) < target:
        lo = hi
        hi *= 2.0
        n += 1
        if n > MAX_DOUBLINGS:
            raise KernelError("bracket doubling failed; curve does not reach target")
    for it in range(MAX_BISECT):
        mid = 0.5 * (lo + hi)
        r = _psi_prime(k, V, alpha, gmax, quad, mid) - target
        if fabs(r) <= tol:
            return mid if mid < cap else cap
        if mid <= lo or mid >= hi:
            rlo = fabs(_psi_prime(k, V, alpha, gmax, quad, lo) - target)
            rhi = fabs(_psi_prime(k, V, alpha, gmax, quad, hi) - target)
            mid = lo if rlo <= rhi else hi
            return mid if mid < cap else cap
        if r < 0.0:
            lo = mid
        else:
            hi = mid
    raise KernelError("bisection did not converge")


cdef double _lse(const double[::1] base, const double[::1] s, double lam,
                 double* dsum) nogil:
    """log-sum-exp of ``base - s*lam``; writes d/dlam into ``dsum``."""
    cdef Py_ssize_t i, n = base.shape[0]
    cdef double m = -INFINITY, a, tot = 0.0, dot = 0.0, e
    for i in range(n):
        a = base[i] - s[i] * lam
        if a > m:
            m = a
    for i in range(n):
        e = exp(base[i] - s[i] * lam - m)
        tot += e
        dot += e * s[i]
    dsum[0] = -dot / tot
    return m + log(tot)


def entropy_argmin(logp, c, mu, double k):
    cdef double[::1] lp = np.ascontiguousarray(logp, dtype=np.float64)
    cdef double[::1] cc = np.ascontiguousarray(c, dtype=np.float64)
    cdef double[::1] mm = np.ascontiguousarray(mu, dtype=np.float64)
    cdef Py_ssize_t i, n = lp.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] base_arr = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] s_arr = np.empty(n)
    cdef double[::1] base = base_arr
    cdef double[::1] s = s_arr
    cdef double lam, lo, hi, step, val, deriv, cand, g0, width, scale
    cdef int it, nd
    cdef bint converged
    cdef double tot = 0.0
    cdef cnp.ndarray[cnp.float64_t, ndim=1] q = np.empty(n)
    for i in range(n):
        s[i] = mm[i] / k
        base[i] = lp[i] - s[i] * cc[i]

    g0 = _lse(base, s, 0.0, &deriv)
    lam = 0.0
    if g0 != 0.0:
        step = 1.0
        nd = 0
        if g0 > 0.0:
            lo = 0.0
            hi = step
            while _lse(base, s, hi, &deriv) > 0.0:
                lo = hi
                step *= 2.0
                hi = step
                nd += 1
                if nd > MAX_DOUBLINGS:
                    raise KernelError("lambda bracket doubling failed")
        else:
            lo = -step
            hi = 0.0
            while _lse(base, s, lo, &deriv) < 0.0:
                hi = lo
                step *= 2.0
                lo = -step
                nd += 1
                if nd > MAX_DOUBLINGS:
                    raise KernelError("lambda bracket doubling failed")
        lam = 0.5 * (lo + hi)
        converged = False
        for it in range(MAX_LAMBDA_ITERS):
            val = _lse(base, s, lam, &deriv)
            if fabs(val) <= 1e-15:
                converged = True
                break
            if val > 0.0:
                lo = lam
            else:
                hi = lam
            if deriv < 0.0:
                cand = lam - val / deriv
            else:
                cand = lo
            if lo < cand < hi:
                lam = cand
            else:
                lam = 0.5 * (lo + hi)
            scale = max(fabs(lo), fabs(hi))
            if scale < 1e-300:
                scale = 1e-300
            width = nextafter(scale, INFINITY) - scale
            if hi - lo <= 4.0 * width:
                converged = True
                break
        if not converged:
            raise KernelError("lambda solve did not converge")

    val = _lse(base, s, lam, &deriv)
    for i in range(n):
        q[i] = exp(base[i] - s[i] * lam - val)
        tot += q[i]
    for i in range(n):
        q[i] /= tot
    return q, lam

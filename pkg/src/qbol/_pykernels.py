"""Pure-Python versions of the numerical kernels.

These mirror ``_kernels.pyx`` line for line and are used whenever the compiled
extension is unavailable (or ``QBOL_PURE_PYTHON=1`` is set).
"""
from __future__ import annotations

import math

import numpy as np

MAX_DOUBLINGS = 120
MAX_BISECT = 200
MAX_LAMBDA_ITERS = 400


class KernelError(RuntimeError):
    pass


def qb_psi_prime(k, V, alpha, gmax, quad, x):
    if x < 0.0:
        raise ValueError("x must be >= 0")
    if x == 0.0:
        return 0.0
    F = math.log1p(x / alpha)
    if gmax * math.sqrt(F) <= math.sqrt(V):
        out = 2.0 * k * math.sqrt(V * F)
    else:
        out = k * gmax * F + k * V / gmax
    return out + quad * x


def qb_link_inverse(k, V, alpha, gmax, quad, target, cap):
    if target < 0.0:
        raise ValueError("target must be >= 0")
    if target == 0.0:
        return 0.0
    if cap < math.inf and qb_psi_prime(k, V, alpha, gmax, quad, cap) <= target:
        return cap
    tol = 1e-10 * (1.0 + target)
    lo, hi = 0.0, 1.0
    n = 0
    while qb_psi_prime(k, V, alpha, gmax, quad, hi) < target:
        lo = hi
        hi *= 2.0
        n += 1
        if n > MAX_DOUBLINGS:
            raise KernelError("bracket doubling failed; curve does not reach target")
    for _ in range(MAX_BISECT):
        mid = 0.5 * (lo + hi)
        r = qb_psi_prime(k, V, alpha, gmax, quad, mid) - target
        if abs(r) <= tol:
            return min(mid, cap)
        if mid <= lo or mid >= hi:
            # bracket collapsed onto adjacent floats: return the closer endpoint
            rlo = abs(qb_psi_prime(k, V, alpha, gmax, quad, lo) - target)
            rhi = abs(qb_psi_prime(k, V, alpha, gmax, quad, hi) - target)
            return min(lo if rlo <= rhi else hi, cap)
        if r < 0.0:
            lo = mid
        else:
            hi = mid
    raise KernelError("bisection did not converge")


def _logsumexp(a):
    m = a.max()
    return m + math.log(np.exp(a - m).sum())


def entropy_argmin(logp, c, mu, k):
    """Solve ``log sum_i p_i exp(-mu_i (c_i + lam) / k) = 0`` for ``lam``; return ``(q, lam)``."""
    logp = np.asarray(logp, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    s = mu / k
    base = logp - s * c

    def g(lam):
        return _logsumexp(base - s * lam)

    g0 = g(0.0)
    if g0 == 0.0:
        lam = 0.0
    else:
        # g is strictly decreasing in lam
        step = 1.0
        if g0 > 0.0:
            lo, hi = 0.0, step
            n = 0
            while g(hi) > 0.0:
                lo = hi
                step *= 2.0
                hi = step
                n += 1
                if n > MAX_DOUBLINGS:
                    raise KernelError("lambda bracket doubling failed")
        else:
            lo, hi = -step, 0.0
            n = 0
            while g(lo) < 0.0:
                hi = lo
                step *= 2.0
                lo = -step
                n += 1
                if n > MAX_DOUBLINGS:
                    raise KernelError("lambda bracket doubling failed")
        lam = 0.5 * (lo + hi)
        converged = False
        for _ in range(MAX_LAMBDA_ITERS):
            a = base - s * lam
            m = a.max()
            e = np.exp(a - m)
            tot = e.sum()
            val = m + math.log(tot)
            if abs(val) <= 1e-15:
                converged = True
                break
            if val > 0.0:
                lo = lam
            else:
                hi = lam
            deriv = -float(np.dot(e, s)) / tot
            cand = lam - val / deriv if deriv < 0.0 else math.nan
            if lo < cand < hi:
                lam = cand
            else:
                lam = 0.5 * (lo + hi)
            if hi - lo <= 4.0 * math.ulp(max(abs(lo), abs(hi), 1e-300)):
                converged = True
                break
        if not converged:
            raise KernelError("lambda solve did not converge")
    a = base - s * lam
    q = np.exp(a - _logsumexp(a))
    q /= q.sum()
    return q, lam

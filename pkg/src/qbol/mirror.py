"""Mirror-descent kernels.

Two argmins are needed everywhere in the package:

* the centred mirror-descent step for a radially symmetric regularizer
  ``w -> R(||w||)``, which reduces to inverting the scalar link ``R'``;
* the scaled-entropy projection onto the simplex used by the multi-scale
  experts update.

Both are 1-D root finds (bracket doubling, then bisection); the compiled
backend in ``qbol._kernels`` handles the hot parametric cases.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from qbol._backend import KernelError, kernels
from qbol.core import DimensionError, as_point, norm

LINK_TOL = 1e-10
MAX_DOUBLINGS = 120
MAX_BISECT = 200


@dataclass(frozen=True)
class QBCurveParams:
    """Constants of the regularizer derivative used by the quadratically bounded learner.

    ``rho_inv`` is ``1/rho``; the quadratic part contributes ``kappa * rho_inv * x``.
    """

    k: float
    V: float
    alpha: float
    G_max: float
    kappa: float = 0.0
    rho_inv: float = 0.0

    def __post_init__(self):
        if not (self.V > 0 and self.alpha > 0 and self.G_max > 0):
            raise ValueError("V, alpha and G_max must be > 0")

    @property
    def quad(self) -> float:
        return self.kappa * self.rho_inv


def psi_prime(params: QBCurveParams, x: float) -> float:
    """Radial derivative ``k min_eta[F/eta + eta V] + (kappa/rho) x`` with ``F = log(x/alpha + 1)``.

    The inner minimum over ``eta <= 1/G_max`` is taken in closed form:
    ``2 sqrt(V F)`` when ``G_max sqrt(F) <= sqrt(V)`` and ``G_max F + V/G_max`` otherwise.
    """
    if x < 0:
        raise ValueError("x must be >= 0")
    p = params
    return kernels.qb_psi_prime(p.k, p.V, p.alpha, p.G_max, p.quad, float(x))


@dataclass(frozen=True)
class RadialCurve:
    """Derivative ``R'`` of a radial regularizer; ``params`` enables the compiled fast path."""

    deriv: Callable[[float], float]
    params: QBCurveParams | None = None

    @classmethod
    def qb(cls, params: QBCurveParams) -> "RadialCurve":
        return cls(deriv=lambda x: psi_prime(params, x), params=params)

    def __call__(self, x: float) -> float:
        return self.deriv(x)


def _generic_link_inverse(deriv: Callable[[float], float], target: float, cap: float) -> float:
    if cap < math.inf and deriv(cap) <= target:
        return cap
    tol = LINK_TOL * (1.0 + target)
    lo, hi = 0.0, 1.0
    n = 0
    while deriv(hi) < target:
        lo, hi = hi, 2.0 * hi
        n += 1
        if n > MAX_DOUBLINGS:
            raise KernelError("bracket doubling failed; curve does not reach target")
    for _ in range(MAX_BISECT):
        mid = 0.5 * (lo + hi)
        r = deriv(mid) - target
        if abs(r) <= tol:
            return min(mid, cap)
        if mid <= lo or mid >= hi:
            best = lo if abs(deriv(lo) - target) <= abs(deriv(hi) - target) else hi
            return min(best, cap)
        if r < 0:
            lo = mid
        else:
            hi = mid
    raise KernelError("bisection did not converge")


def link_inverse(curve: RadialCurve, target: float, cap: float = math.inf) -> float:
    """Smallest ``x`` in ``[0, cap]`` with ``R'(x) = target``, clamped to ``cap``."""
    if target < 0:
        raise ValueError("target must be >= 0")
    if not cap > 0:
        raise ValueError("cap must be in (0, inf]")
    if target == 0:
        return 0.0
    if curve.params is not None:
        p = curve.params
        return kernels.qb_link_inverse(p.k, p.V, p.alpha, p.G_max, p.quad, float(target), float(cap))
    return _generic_link_inverse(curve.deriv, float(target), float(cap))


def radial_gradient(curve: RadialCurve, w: np.ndarray) -> np.ndarray:
    """Gradient of ``w -> R(||w||)``; the zero vector at the origin."""
    n = norm(w)
    if n == 0.0:
        return np.zeros_like(w)
    return (curve(n) / n) * w


def cmd_step(w_t, grad_psi_at_w, g_tilde, next_curve: RadialCurve, domain_radius: float = math.inf) -> np.ndarray:
    """One centred mirror-descent step over the ball of radius ``domain_radius``.

    Minimizes ``<g_tilde, w> + psi_next(w) - <grad_psi_at_w, w>``; radial symmetry
    puts the minimizer on the ray through ``theta = grad_psi_at_w - g_tilde``.
    """
    w_t = as_point(w_t)
    d = w_t.size
    grad_psi_at_w = as_point(grad_psi_at_w)
    g_tilde = as_point(g_tilde)
    if grad_psi_at_w.size != d or g_tilde.size != d:
        raise DimensionError("cmd_step inputs must share a dimension")
    theta = grad_psi_at_w - g_tilde
    r = norm(theta)
    if r == 0.0:
        return np.zeros(d)
    x = link_inverse(next_curve, r, domain_radius)
    return (x / r) * theta


@dataclass(frozen=True)
class ScaledEntropyProblem:
    """``argmin_q sum_i c_i q_i + (k/mu_i)[q_i log(q_i/p_i) - q_i + p_i]`` over the simplex."""

    prior: np.ndarray
    costs: np.ndarray
    scales: np.ndarray
    k: float = 4.5

    def __post_init__(self):
        p = np.asarray(self.prior, dtype=np.float64)
        c = np.asarray(self.costs, dtype=np.float64)
        mu = np.asarray(self.scales, dtype=np.float64)
        object.__setattr__(self, "prior", p)
        object.__setattr__(self, "costs", c)
        object.__setattr__(self, "scales", mu)
        if not (p.shape == c.shape == mu.shape) or p.ndim != 1 or p.size == 0:
            raise DimensionError("prior, costs and scales must be equal-length vectors")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(c)) and np.all(np.isfinite(mu))):
            raise ValueError("non-finite entries")
        if np.any(p <= 0):
            raise ValueError("prior entries must be > 0")
        if abs(p.sum() - 1.0) > 1e-12 * p.size:
            raise ValueError(f"prior must sum to 1, got {p.sum()!r}")
        if np.any(mu <= 0):
            raise ValueError("scales must be > 0")
        if not self.k > 0:
            raise ValueError("k must be > 0")


def solve_scaled_entropy(problem: ScaledEntropyProblem) -> tuple[np.ndarray, float]:
    """Return ``(q, lam)`` where ``q_i = p_i exp(-mu_i (c_i + lam) / k)`` sums to one."""
    if problem.prior.size == 1:
        return np.ones(1), -float(problem.costs[0])
    q, lam = kernels.entropy_argmin(np.log(problem.prior), problem.costs, problem.scales, float(problem.k))
    return np.asarray(q), float(lam)


def scaled_entropy_argmin(problem: ScaledEntropyProblem) -> np.ndarray:
    return solve_scaled_entropy(problem)[0]


def kkt_residual(problem: ScaledEntropyProblem, q: np.ndarray, lam: float) -> float:
    """``max_i |(k/mu_i) log(q_i/p_i) + c_i + lam|``."""
    p, c, mu = problem.prior, problem.costs, problem.scales
    return float(np.max(np.abs((problem.k / mu) * np.log(q / p) + c + lam)))

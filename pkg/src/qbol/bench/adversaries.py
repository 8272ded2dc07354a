"""Adversarial sequences from the lower-bound constructions.

Both adversaries live in the plane and react to the learner's current play.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from qbol.core import LossQuery, QuadBound, as_point, norm
from qbol.bench.rng import generator


@dataclass
class StaticLBAdversary:
    """Emits ``g_t = (-G, -eps_t L ||w_t||)`` with Rademacher signs ``eps_t``.

    After the run, ``comparator()`` returns ``u = (U, s U)`` with
    ``U = (G/L) sqrt(2T)`` and ``s = sign(sum_t eps_t ||w_t||)``.
    """

    G: float
    L: float
    T: int
    rng_seed: int = 0
    signs: np.ndarray = field(init=False, repr=False)
    t: int = field(init=False, default=0)
    signed_norm_sum: float = field(init=False, default=0.0)
    sum_gw: float = field(init=False, default=0.0)

    def __post_init__(self):
        if not self.G > 0:
            raise ValueError("G must be > 0")
        if not self.L > 0:
            raise ValueError("L must be > 0 (the Lipschitz-only construction is not provided)")
        if self.T < 1:
            raise ValueError("T must be >= 1")
        rng = generator(self.rng_seed, "static_lb_signs")
        self.signs = rng.integers(0, 2, size=self.T) * 2.0 - 1.0

    @property
    def U(self) -> float:
        return (self.G / self.L) * math.sqrt(2.0 * self.T)

    @property
    def bound(self) -> QuadBound:
        return QuadBound(self.G, self.L)

    def next(self, w) -> np.ndarray:
        w = as_point(w, 2)
        if self.t >= self.T:
            raise IndexError("adversary horizon exhausted")
        e = self.signs[self.t]
        nw = norm(w)
        g = np.array([-self.G, -e * self.L * nw])
        self.signed_norm_sum += e * nw
        self.sum_gw += float(g @ w)
        self.t += 1
        return g

    def sign(self) -> float:
        return 1.0 if self.signed_norm_sum >= 0 else -1.0

    def comparator(self) -> np.ndarray:
        U = self.U
        return np.array([U, self.sign() * U])

    def regret(self) -> float:
        """``sum_t <g_t, w_t - u>`` against the constructed comparator, rounds so far."""
        U = self.U
        return self.sum_gw + self.G * self.t * U + U * self.L * abs(self.signed_norm_sum)


def static_lb_next(adv: StaticLBAdversary, w_t) -> np.ndarray:
    return adv.next(w_t)


def rotate_ccw(v: np.ndarray) -> np.ndarray:
    return np.array([-v[1], v[0]])


@dataclass(frozen=True)
class DynLBLoss:
    """``l(w) = -G/2 <xi, w> + L/4 (sigma - <xi, w>)^2``."""

    G: float
    L: float
    sigma: float
    xi: np.ndarray

    def value(self, w) -> float:
        a = float(self.xi @ w)
        return -0.5 * self.G * a + 0.25 * self.L * (self.sigma - a) ** 2

    def grad(self, w) -> np.ndarray:
        a = float(self.xi @ w)
        return (-0.5 * self.G - 0.5 * self.L * (self.sigma - a)) * self.xi

    def query(self, w) -> LossQuery:
        return LossQuery(self.value(w), self.grad(w))

    def query_batch(self, W):
        a = np.asarray(W) @ self.xi
        vals = -0.5 * self.G * a + 0.25 * self.L * (self.sigma - a) ** 2
        coef = -0.5 * self.G - 0.5 * self.L * (self.sigma - a)
        return vals, coef[:, None] * self.xi[None, :]

    @property
    def bound(self) -> QuadBound:
        return QuadBound(0.5 * self.G + 0.5 * self.sigma * self.L, self.L)

    @property
    def smoothness(self) -> float:
        return 0.5 * self.L


@dataclass
class DynamicLBAdversary:
    """Each round picks ``xi_t`` orthogonal to the play and the comparator ``u_t = sigma xi_t``."""

    G: float
    L: float
    M: float
    T: int
    mu_exp: float = 0.5
    t: int = field(init=False, default=0)

    def __post_init__(self):
        if not (self.G > 0 and self.L > 0 and self.M > 0):
            raise ValueError("G, L and M must be > 0")
        if self.G / self.L > self.M * (1 + 1e-12):
            raise ValueError("need G/L <= M")
        if not 0.0 <= self.mu_exp <= 0.5:
            raise ValueError("mu_exp must lie in [0, 1/2]")
        if self.T < 1:
            raise ValueError("T must be >= 1")

    @property
    def sigma(self) -> float:
        return self.M * self.T ** (-self.mu_exp)

    def direction(self, w) -> np.ndarray:
        w = as_point(w, 2)
        n = norm(w)
        if n == 0.0:
            return np.array([1.0, 0.0])
        return rotate_ccw(w / n)

    def next(self, w) -> tuple[DynLBLoss, np.ndarray]:
        xi = self.direction(w)
        self.t += 1
        return DynLBLoss(self.G, self.L, self.sigma, xi), self.sigma * xi

    def round_regret_floor(self) -> float:
        """Per-round regret when the play is orthogonal to ``xi_t``."""
        s = self.sigma
        return 0.5 * self.G * s + 0.25 * self.L * s * s


def dynamic_lb_next(adv: DynamicLBAdversary, w_t) -> tuple[DynLBLoss, np.ndarray]:
    return adv.next(w_t)


__all__ = [
    "StaticLBAdversary",
    "DynamicLBAdversary",
    "DynLBLoss",
    "static_lb_next",
    "dynamic_lb_next",
    "rotate_ccw",
]

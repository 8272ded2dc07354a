"""Multi-scale fixed-share experts.

Expert ``i`` carries its own scale ``mu_i``; the update is a scaled-entropy
mirror step on the costs ``l_i + mu_i l_i^2`` followed by mixing with the prior:

    q_{t+1} = argmin_q  sum_i (l_ti + mu_i l_ti^2) q_i + D_{psi_i}(q_i | p_ti)
    p_{t+1} = (1 - beta_t) q_{t+1} + beta_t p_1
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from qbol.core import DimensionError
from qbol.mirror import ScaledEntropyProblem, solve_scaled_entropy

log = logging.getLogger(__name__)

DEFAULT_K = 4.5


class ScaleViolation(ValueError):
    """``mu_i |l_i| > 1`` in strict mode."""


def max_beta(T: int) -> float:
    """Largest mixing rate the tracking guarantee allows over horizon ``T``."""
    return -math.expm1(-1.0 / T)


@dataclass(frozen=True)
class ExpertsConfig:
    """``beta`` is a float (constant rate), a callable ``t -> beta_t`` or ``None`` for ``1 - e^{-1/T}``."""

    mu: np.ndarray
    T: int
    k: float = DEFAULT_K
    p1: np.ndarray | None = None
    beta: float | Callable[[int], float] | None = None
    strict: bool = False

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=np.float64))
        if mu.ndim != 1 or mu.size == 0 or not np.all(np.isfinite(mu)) or np.any(mu <= 0):
            raise ValueError("mu must be a non-empty vector of finite positive reals")
        object.__setattr__(self, "mu", mu)
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if self.k < DEFAULT_K:
            raise ValueError("k must be >= 9/2")
        if self.p1 is None:
            p1 = mu**2 / np.sum(mu**2)
        else:
            p1 = np.asarray(self.p1, dtype=np.float64)
            if p1.shape != mu.shape:
                raise DimensionError("p1 and mu must have the same length")
            if not np.all(np.isfinite(p1)) or np.any(p1 <= 0):
                raise ValueError("p1 entries must be finite and > 0")
            if abs(p1.sum() - 1.0) > 1e-12:
                raise ValueError(f"p1 must sum to 1, got {p1.sum()!r}")
        object.__setattr__(self, "p1", p1)
        if isinstance(self.beta, (int, float)):
            b = float(self.beta)
            if not 0.0 <= b <= 1.0:
                raise ValueError("beta must lie in [0, 1]")

    @property
    def n(self) -> int:
        return self.mu.size

    def beta_at(self, t: int) -> float:
        if self.beta is None:
            return max_beta(self.T)
        if callable(self.beta):
            b = float(self.beta(t))
            if not 0.0 <= b <= 1.0:
                raise ValueError(f"beta_{t} = {b} outside [0, 1]")
            return b
        return float(self.beta)

    def schedule_is_admissible(self) -> bool:
        """True when every ``beta_t`` for ``t <= T`` respects ``beta_t <= 1 - e^{-1/T}``."""
        cap = max_beta(self.T) * (1 + 1e-12)
        return all(self.beta_at(t) <= cap for t in range(1, self.T + 1))


@dataclass(frozen=True)
class ExpertsState:
    p: np.ndarray
    q: np.ndarray
    t: int
    scale_violations: int = 0


def experts_init(config: ExpertsConfig) -> ExpertsState:
    p1 = config.p1.copy()
    return ExpertsState(p=p1, q=p1.copy(), t=1)


def experts_update(config: ExpertsConfig, state: ExpertsState, losses: Sequence[float]) -> ExpertsState:
    """One multi-scale fixed-share step on the loss vector ``losses``."""
    ell = np.asarray(losses, dtype=np.float64)
    if ell.shape != (config.n,):
        raise DimensionError(f"expected {config.n} losses, got shape {ell.shape}")
    if not np.all(np.isfinite(ell)):
        raise ValueError("losses must be finite")
    mu = config.mu
    violations = state.scale_violations
    worst = float(np.max(mu * np.abs(ell)))
    if worst > 1.0 + 1e-12:
        if config.strict:
            raise ScaleViolation(f"round {state.t}: max mu_i |l_i| = {worst:.6g} > 1")
        log.warning("round %d: scale condition violated (max mu_i |l_i| = %.6g)", state.t, worst)
        violations += 1

    prior = state.p / state.p.sum()
    q, _ = solve_scaled_entropy(ScaledEntropyProblem(prior, ell + mu * ell**2, mu, config.k))
    beta = config.beta_at(state.t)
    p = (1.0 - beta) * q + beta * config.p1
    return ExpertsState(p=p, q=q, t=state.t + 1, scale_violations=violations)


def experts_meta_bound(config: ExpertsConfig, u, loss_history) -> float:
    """Explicit regret bound ``sum_t <l_t, p_t - u>`` for comparator ``u`` on the simplex.

    ``sum_i u_i [k(log(u_i/p1_i) + 1)/mu_i + mu_i sum_t l_ti^2] + 2k sum_i p1_i/mu_i``
    with ``0 log 0 = 0``.
    """
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (config.n,):
        raise DimensionError("comparator length must match the number of experts")
    if np.any(u < 0) or abs(u.sum() - 1.0) > 1e-9:
        raise ValueError("u must lie on the simplex")
    L = np.asarray(loss_history, dtype=np.float64).reshape(-1, config.n)
    mu, p1, k = config.mu, config.p1, config.k
    sq = np.sum(L**2, axis=0)
    pos = u > 0
    per = np.zeros(config.n)
    per[pos] = u[pos] * (k * (np.log(u[pos] / p1[pos]) + 1.0) / mu[pos] + mu[pos] * sq[pos])
    return float(per.sum() + 2.0 * k * np.sum(p1 / mu))


__all__ = [
    "ExpertsConfig",
    "ExpertsState",
    "ScaleViolation",
    "experts_init",
    "experts_update",
    "experts_meta_bound",
    "max_beta",
]

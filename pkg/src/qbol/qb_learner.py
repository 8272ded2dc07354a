"""Comparator-adaptive learner for quadratically bounded gradient sequences.

Each round the learner plays ``w_t``, receives ``g_t`` with a certificate
``||g_t|| <= G_t + L_t ||w_t||``, and takes a centred mirror-descent step with the
radial regularizer

    psi_t(w) = k * int_0^{||w||} min_{eta <= 1/G_max} [F_t(x)/eta + eta V_t] dx
               + kappa/(2 rho_t) ||w||^2,        F_t(x) = log(x/alpha_t + 1),

plus a linearized composite penalty ``L_t^2/(2 sqrt(L_{1:t}^2)) ||w||^2``.

    >>> cfg = QBConfig(eps=1.0, G_max=1.0, L_max=0.0, dim=1)
    >>> s = qb_init(cfg)
    >>> s = qb_step(s, [1.0], G_t=1.0, L_t=0.0)
    >>> round(float(s.w[0]), 6)
    -0.000962
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from qbol.core import QuadBound, as_point, norm, qb_check
from qbol.mirror import QBCurveParams, RadialCurve, cmd_step, radial_gradient

log = logging.getLogger(__name__)


class CertificateViolation(ValueError):
    """A gradient broke its quadratic-boundedness certificate (strict mode only)."""


@dataclass(frozen=True)
class QBConfig:
    eps: float
    G_max: float
    L_max: float
    dim: int
    k: float = 3.0
    kappa: float = 4.0
    c: float = 4.0
    domain_radius: float = math.inf
    strict: bool = False

    def __post_init__(self):
        if not self.G_max > 0:
            raise ValueError("G_max must be > 0 (supply any positive value for purely non-Lipschitz losses)")
        if not self.eps > 0:
            raise ValueError("eps must be > 0")
        if self.L_max < 0:
            raise ValueError("L_max must be >= 0")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.k < 3 or self.kappa < 4 or self.c < 4:
            raise ValueError("need k >= 3, kappa >= 4, c >= 4")
        if not self.domain_radius > 0:
            raise ValueError("domain_radius must be in (0, inf]")

    def alpha(self, V: float) -> float:
        return self.eps * self.G_max / (math.sqrt(V) * math.log(V / self.G_max**2) ** 2)

    def curve(self, V: float, rho_inv: float) -> RadialCurve:
        return RadialCurve.qb(
            QBCurveParams(k=self.k, V=V, alpha=self.alpha(V), G_max=self.G_max, kappa=self.kappa, rho_inv=rho_inv)
        )


@dataclass(frozen=True)
class QBState:
    t: int
    w: np.ndarray
    sumG2: float
    sumL2: float
    V: float
    alpha: float
    rho_inv: float
    config: QBConfig = field(repr=False, compare=False, default=None)
    violations: int = 0
    curve: RadialCurve = field(repr=False, compare=False, default=None)


def qb_init(config: QBConfig) -> QBState:
    V = config.c * config.G_max**2
    return QBState(
        t=1,
        w=np.zeros(config.dim),
        sumG2=0.0,
        sumL2=0.0,
        V=V,
        alpha=config.alpha(V),
        rho_inv=config.L_max,
        config=config,
        curve=config.curve(V, config.L_max),
    )


def qb_step(state: QBState, g, G_t: float, L_t: float) -> QBState:
    config = state.config
    g = as_point(g, config.dim)
    if not (0 <= G_t <= config.G_max * (1 + 1e-12)) or not (0 <= L_t <= config.L_max * (1 + 1e-12)):
        raise ValueError(f"certificate ({G_t}, {L_t}) outside [0, G_max] x [0, L_max]")
    violations = state.violations
    if not qb_check(g, state.w, QuadBound(G_t, L_t)):
        if config.strict:
            raise CertificateViolation(
                f"round {state.t}: ||g||={norm(g):.6g} > {G_t} + {L_t}*{norm(state.w):.6g}"
            )
        log.warning("round %d: gradient violates its (G_t, L_t) certificate", state.t)
        violations += 1

    sumL2 = state.sumL2 + L_t * L_t
    # L_t^2 enters the running sum before the coefficient is formed, so 0/0 only when L_t = 0
    coef = L_t * L_t / math.sqrt(sumL2) if sumL2 > 0 else 0.0
    g_tilde = g + coef * state.w if coef else g

    sumG2 = state.sumG2 + G_t * G_t
    V_next = config.c * config.G_max**2 + sumG2
    rho_inv_next = math.sqrt(config.L_max**2 + sumL2)
    curve_next = config.curve(V_next, rho_inv_next)

    curve_now = state.curve if state.curve is not None else config.curve(state.V, state.rho_inv)
    grad_psi = radial_gradient(curve_now, state.w)
    w_next = cmd_step(state.w, grad_psi, g_tilde, curve_next, config.domain_radius)
    return QBState(
        t=state.t + 1,
        w=w_next,
        sumG2=sumG2,
        sumL2=sumL2,
        V=V_next,
        alpha=curve_next.params.alpha,
        rho_inv=rho_inv_next,
        config=config,
        violations=violations,
        curve=curve_next,
    )


def qb_regret_bound(config: QBConfig, final_state: QBState, u_norm: float) -> float:
    """Explicit upper bound on ``sum_t <g_t, w_t - u>`` after ``final_state.t - 1`` rounds."""
    if u_norm < 0:
        raise ValueError("u_norm must be >= 0")
    G = config.G_max
    F = math.log1p(u_norm / final_state.alpha)
    return (
        2.0 * config.eps * G
        + config.kappa * u_norm**2 * math.sqrt(config.L_max**2 + final_state.sumL2)
        + 2.0 * config.k * u_norm * max(math.sqrt(final_state.V * F), G * F)
    )


class QBLearner:
    """Stateful convenience wrapper: ``play()`` then ``update(g, G_t, L_t)``."""

    def __init__(self, config: QBConfig):
        self.config = config
        self.state = qb_init(config)

    def play(self) -> np.ndarray:
        return self.state.w

    def update(self, g, G_t: float, L_t: float) -> np.ndarray:
        self.state = qb_step(self.state, g, G_t, L_t)
        return self.state.w

    def regret_bound(self, u_norm: float) -> float:
        return qb_regret_bound(self.config, self.state, u_norm)


__all__ = [
    "QBConfig",
    "QBState",
    "QBLearner",
    "CertificateViolation",
    "qb_init",
    "qb_step",
    "qb_regret_bound",
]

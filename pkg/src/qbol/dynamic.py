"""Dynamic-regret meta-algorithm.

A grid of projected-gradient experts ``tau = (eta, D)`` is run in parallel. Each
expert takes biased steps ``w <- Proj_D[w - eta (1 + K eta L_t) g]`` and the
multi-scale fixed-share combiner mixes them with weights scaled by
``mu_tau = 1/(2D(G_max + D/eta))``. Relative losses are measured against the
origin, which lies in every expert's ball.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from qbol.core import QuadBound, as_point, path_length, project_ball, query_many
from qbol.experts import DEFAULT_K, ExpertsConfig, ExpertsState, experts_init, experts_update

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GridConfig:
    eps: float
    G_max: float
    L_max: float
    T: int
    K: float = 8.0
    smooth: bool = False
    max_exponent_cap: int = 40

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be > 0")
        if not self.G_max > 0:
            raise ValueError("G_max must be > 0")
        if not self.L_max > 0:
            raise ValueError("L_max must be > 0; for L_max = 0 use the static learner in qbol.qb_learner")
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if self.K < 8:
            raise ValueError("K must be >= 8")
        if self.max_exponent_cap < 0:
            raise ValueError("max_exponent_cap must be >= 0")

    @property
    def d_exponent(self) -> int:
        return min(self.T, self.max_exponent_cap)


def _doubling_until(start: float, cap: float) -> list[float]:
    # start, 2 start, 4 start, ... clipped at cap (cap itself included once)
    out = []
    i = 0
    while True:
        v = math.ldexp(start, i)
        if v >= cap:
            out.append(cap)
            return out
        out.append(v)
        i += 1


def grid_axes(cfg: GridConfig) -> tuple[list[float], list[float]]:
    """The step-size axis ``S_eta`` and radius axis ``S_D`` (both ascending)."""
    n = cfg.d_exponent
    if cfg.smooth:
        rt = math.sqrt(cfg.T)
        eta0 = 1.0 / (cfg.K * cfg.L_max * rt)
        etas = _doubling_until(eta0, eta0 * rt)
        d0 = cfg.eps / rt
    else:
        eta_max = 1.0 / (cfg.K * cfg.L_max)
        eta0 = cfg.eps / (cfg.K * (cfg.G_max + cfg.eps * cfg.L_max) * cfg.T)
        etas = _doubling_until(min(eta0, eta_max), eta_max)
        d0 = cfg.eps / cfg.T
    Ds = [math.ldexp(d0, j) for j in range(n + 1)]
    return sorted(set(etas)), sorted(set(Ds))


def build_grid(cfg: GridConfig) -> list[tuple[float, float]]:
    """Cartesian product ``S_eta x S_D`` as ``(eta, D)`` pairs."""
    etas, Ds = grid_axes(cfg)
    return [(eta, D) for eta in etas for D in Ds]


def mu_of(eta: float, D: float, G_max: float) -> float:
    return 1.0 / (2.0 * D * (G_max + D / eta))


@dataclass(frozen=True)
class ExpertTau:
    eta: float
    D: float
    mu: float
    w: np.ndarray

    @classmethod
    def new(cls, eta: float, D: float, G_max: float, dim: int) -> "ExpertTau":
        return cls(eta=eta, D=D, mu=mu_of(eta, D, G_max), w=np.zeros(dim))


def expert_step(tau: ExpertTau, g, L_t: float, K: float = 8.0) -> ExpertTau:
    g = as_point(g, tau.w.size)
    if K * tau.eta * L_t > 1.0 + 1e-12:
        raise ValueError(f"K*eta*L_t = {K * tau.eta * L_t:.6g} > 1; step size too large for this round")
    w = project_ball(tau.w - tau.eta * (1.0 + K * tau.eta * L_t) * g, tau.D)
    return ExpertTau(tau.eta, tau.D, tau.mu, w)


@dataclass
class DynLog:
    """Per-round records needed to evaluate bounds after the fact."""

    expert_loss: list[np.ndarray] = field(default_factory=list)
    ref_loss: list[float] = field(default_factory=list)
    grad_sq: list[np.ndarray] = field(default_factory=list)
    L: list[float] = field(default_factory=list)
    G: list[float] = field(default_factory=list)
    played_loss: list[float] = field(default_factory=list)
    played: list[np.ndarray] = field(default_factory=list)


@dataclass
class DynState:
    """Meta-algorithm state; single-owner, ``dyn_round`` advances it in place."""

    cfg: GridConfig
    eta: np.ndarray
    D: np.ndarray
    mu: np.ndarray
    W: np.ndarray
    weights: ExpertsState
    weights_cfg: ExpertsConfig
    t: int = 1
    logs: DynLog = field(default_factory=DynLog)

    @property
    def experts(self) -> list[ExpertTau]:
        return [ExpertTau(float(e), float(d), float(m), w.copy()) for e, d, m, w in zip(self.eta, self.D, self.mu, self.W)]

    @property
    def n_experts(self) -> int:
        return self.eta.size


def dyn_init(cfg: GridConfig, dim: int, grid: list[tuple[float, float]] | None = None) -> DynState:
    pairs = build_grid(cfg) if grid is None else list(grid)
    if not pairs:
        raise ValueError("empty grid")
    eta = np.array([p[0] for p in pairs], dtype=np.float64)
    D = np.array([p[1] for p in pairs], dtype=np.float64)
    if np.any(cfg.K * eta * cfg.L_max > 1.0 + 1e-12):
        raise ValueError("grid contains eta > 1/(K L_max)")
    mu = 1.0 / (2.0 * D * (cfg.G_max + D / eta))
    wcfg = ExpertsConfig(mu=mu, T=cfg.T, k=DEFAULT_K)
    return DynState(cfg=cfg, eta=eta, D=D, mu=mu, W=np.zeros((eta.size, dim)), weights=experts_init(wcfg), weights_cfg=wcfg)


def dyn_play(state: DynState) -> np.ndarray:
    """The ``p_t``-weighted average of expert iterates."""
    return state.weights.p @ state.W


def dyn_round(state: DynState, oracle, per_round_bounds: QuadBound) -> DynState:
    """Play, query every expert and the origin, update experts and weights."""
    K = state.cfg.K
    L_t = float(per_round_bounds.L)
    n, d = state.W.shape
    w_play = dyn_play(state)
    pts = np.vstack([state.W, w_play[None, :], np.zeros((1, d))])
    vals, grads = query_many(oracle, pts)
    ell_tau, g_tau = vals[:n], grads[:n]
    played_loss, ref = float(vals[n]), float(vals[n + 1])
    rel = ell_tau - ref
    gsq = np.einsum("ij,ij->i", g_tau, g_tau)

    if np.any(K * state.eta * L_t > 1.0 + 1e-12):
        raise ValueError(f"round {state.t}: L_t = {L_t} exceeds the grid's L_max")
    step = (state.eta * (1.0 + K * state.eta * L_t))[:, None]
    W = state.W - step * g_tau
    norms = np.linalg.norm(W, axis=1)
    over = norms > state.D
    W[over] *= (state.D[over] / norms[over])[:, None]

    lg = state.logs
    lg.expert_loss.append(ell_tau.copy())
    lg.ref_loss.append(ref)
    lg.grad_sq.append(gsq)
    lg.L.append(L_t)
    lg.G.append(float(per_round_bounds.G))
    lg.played_loss.append(played_loss)
    lg.played.append(w_play)

    state.weights = experts_update(state.weights_cfg, state.weights, rel)
    state.W = W
    state.t += 1
    return state


def c_s(mu: np.ndarray) -> float:
    mu = np.asarray(mu, dtype=np.float64)
    return float(mu.sum() / np.sum(mu**2))


def lambda_t(mu: np.ndarray, index: int) -> float:
    mu = np.asarray(mu, dtype=np.float64)
    return float(math.log(np.sum(mu**2) / mu[index] ** 2) + 1.0)


def untuned_bound(state: DynState, tau_index: int, u_path, u_losses, K: float | None = None) -> float:
    """Explicit bound on ``sum_t l_t(w_t) - l_t(u_t)`` through expert ``tau_index``.

    ``u_losses[t]`` is ``l_t(u_t)`` for the same rounds as the run log.
    """
    K = state.cfg.K if K is None else K
    U = np.asarray(u_path, dtype=np.float64)
    if U.ndim == 1:
        U = U[:, None]
    T = len(state.logs.played_loss)
    u_losses = np.asarray(u_losses, dtype=np.float64)
    if U.shape[0] != T or u_losses.shape != (T,):
        raise ValueError(f"comparator path and losses must cover the {T} logged rounds")
    eta, D = float(state.eta[tau_index]), float(state.D[tau_index])
    if np.max(np.linalg.norm(U, axis=1)) > D * (1 + 1e-12):
        raise ValueError("comparator leaves the expert's ball")
    k = state.weights_cfg.k
    G = state.cfg.G_max
    lam = lambda_t(state.mu, tau_index)
    ell_tau = np.array([row[tau_index] for row in state.logs.expert_loss])
    gsq = np.array([row[tau_index] for row in state.logs.grad_sq])
    Ls = np.asarray(state.logs.L)
    uT = float(np.dot(U[-1], U[-1]))
    P = path_length(U)
    return float(
        2 * k * c_s(state.mu)
        + 2 * k * D * G * lam
        + (uT + 2 * D * P + 4 * k * D * D * lam) / (2 * eta)
        + K * eta * np.sum(Ls * (u_losses - ell_tau))
        + 4 * eta * np.sum(gsq)
    )


def realized_regret(state: DynState, u_losses) -> float:
    return float(np.sum(state.logs.played_loss) - np.sum(u_losses))


__all__ = [
    "GridConfig",
    "ExpertTau",
    "DynState",
    "DynLog",
    "grid_axes",
    "build_grid",
    "mu_of",
    "expert_step",
    "dyn_init",
    "dyn_play",
    "dyn_round",
    "c_s",
    "lambda_t",
    "untuned_bound",
    "realized_regret",
]

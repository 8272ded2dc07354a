"""Saddle-point problems solved by running the static learner on the product space.

The learner sees the stacked gradient ``(g_x, g_y)`` with ``g_y`` a subgradient of
``-L`` in ``y``; the averaged iterates then have a reference-point duality gap of
at most the learner's regret divided by ``T``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import numpy as np

from qbol.core import DimensionError, as_point, norm
from qbol.qb_learner import QBConfig, qb_init, qb_step

POWER_TOL = 1e-10
POWER_MAX_ITERS = 1000


class PowerIterationError(RuntimeError):
    pass


class SaddleOracle(Protocol):
    dim_x: int
    dim_y: int

    def evaluate(self, x: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
        """``(L(x, y), g_x in d_x L, g_y in d_y[-L])``."""
        ...


@dataclass(frozen=True)
class QBComposition:
    Gx: float = 0.0
    Gy: float = 0.0
    Lxx: float = 0.0
    Lxy: float = 0.0
    Lyx: float = 0.0
    Lyy: float = 0.0

    def __post_init__(self):
        for name in ("Gx", "Gy", "Lxx", "Lxy", "Lyx", "Lyy"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")


def compose_qb(c: QBComposition) -> tuple[float, float]:
    """``(G_w, L_w)`` for the stacked gradient under the product norm."""
    s5 = math.sqrt(5.0)
    G_w = s5 * math.hypot(c.Gx, c.Gy)
    L_w = s5 * math.sqrt(c.Lxx**2 + c.Lyy**2 + c.Lxy**2 + c.Lyx**2)
    return G_w, L_w


def operator_norm(B) -> float:
    """Largest singular value by power iteration on ``B^T B`` from the normalized all-ones seed."""
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    m, n = B.shape
    if B.size == 0 or not np.any(B):
        return 0.0
    seeds = [np.ones(n) / math.sqrt(n)] + [np.eye(n)[i] for i in range(n)]
    for v in seeds:
        if norm(B @ v) == 0.0:
            continue  # seed in the null space; try the next one
        sigma = 0.0
        for _ in range(POWER_MAX_ITERS):
            z = B.T @ (B @ v)
            nz = norm(z)
            v = z / nz
            new = math.sqrt(nz)
            if abs(new - sigma) <= POWER_TOL * new:
                sigma = new
                break
            sigma = new
        else:
            raise PowerIterationError("operator norm did not converge")
        return norm(B @ v)
    return 0.0


# convex components F(w) with their own (G~, L~) certificates


@dataclass(frozen=True)
class ZeroF:
    def value(self, w):
        return 0.0

    def grad(self, w):
        return np.zeros_like(w)

    def qb(self) -> tuple[float, float]:
        return 0.0, 0.0


@dataclass(frozen=True)
class QuadraticF:
    """``a/2 ||w||^2``."""

    a: float

    def __post_init__(self):
        if self.a < 0:
            raise ValueError("a must be >= 0")

    def value(self, w):
        return 0.5 * self.a * float(np.dot(w, w))

    def grad(self, w):
        return self.a * w

    def qb(self):
        return 0.0, float(self.a)


@dataclass(frozen=True)
class NormF:
    """``c ||w||``; subgradient zero at the origin."""

    c: float

    def __post_init__(self):
        if self.c < 0:
            raise ValueError("c must be >= 0")

    def value(self, w):
        return self.c * norm(w)

    def grad(self, w):
        n = norm(w)
        return np.zeros_like(w) if n == 0 else (self.c / n) * w

    def qb(self):
        return float(self.c), 0.0


_FAMILIES = {"zero": ZeroF, "quadratic": QuadraticF, "norm": NormF}


def make_component(desc: dict | None):
    if desc is None:
        return ZeroF()
    desc = dict(desc)
    fam = desc.pop("family", "zero")
    if fam not in _FAMILIES:
        raise ValueError(f"unknown component family {fam!r}; expected one of {sorted(_FAMILIES)}")
    return _FAMILIES[fam](**desc)


@dataclass(frozen=True)
class BilinearProblem:
    """``L(x, y) = Fx(x) + <x, B y> - <ux, x> + <uy, y> - Fy(y)``."""

    B: np.ndarray
    ux: np.ndarray
    uy: np.ndarray
    Fx: object = field(default_factory=ZeroF)
    Fy: object = field(default_factory=ZeroF)

    def __post_init__(self):
        B = np.atleast_2d(np.asarray(self.B, dtype=np.float64))
        ux = as_point(self.ux)
        uy = as_point(self.uy)
        if B.shape != (ux.size, uy.size):
            raise DimensionError(f"B has shape {B.shape}, expected ({ux.size}, {uy.size})")
        if not np.all(np.isfinite(B)):
            raise ValueError("B has non-finite entries")
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "ux", ux)
        object.__setattr__(self, "uy", uy)

    @property
    def dim_x(self) -> int:
        return self.ux.size

    @property
    def dim_y(self) -> int:
        return self.uy.size

    def value(self, x, y) -> float:
        return float(self.Fx.value(x) + x @ self.B @ y - self.ux @ x + self.uy @ y - self.Fy.value(y))

    def evaluate(self, x, y):
        gx = self.Fx.grad(x) + self.B @ y - self.ux
        gy = -(self.B.T @ x) - self.uy + self.Fy.grad(y)
        return self.value(x, y), gx, gy

    @classmethod
    def from_dict(cls, d: dict) -> "BilinearProblem":
        B = np.asarray(d["B"], dtype=np.float64)
        B = np.atleast_2d(B)
        ux = d.get("ux", [0.0] * B.shape[0])
        uy = d.get("uy", [0.0] * B.shape[1])
        return cls(B=B, ux=ux, uy=uy, Fx=make_component(d.get("Fx")), Fy=make_component(d.get("Fy")))

    @classmethod
    def from_json(cls, path) -> "BilinearProblem":
        return cls.from_dict(json.loads(Path(path).read_text()))


def bilinear_qb(p: BilinearProblem) -> QBComposition:
    Gfx, Lfx = p.Fx.qb()
    Gfy, Lfy = p.Fy.qb()
    return QBComposition(
        Gx=Gfx + norm(p.ux),
        Gy=Gfy + norm(p.uy),
        Lxx=Lfx,
        Lxy=operator_norm(p.B),
        Lyx=operator_norm(p.B.T),
        Lyy=Lfy,
    )


@dataclass(frozen=True)
class Checkpoint:
    """Averages after ``t`` rounds together with the learner state that ends round ``t``."""

    xbar: np.ndarray
    ybar: np.ndarray
    sum_gw: float
    sum_g: np.ndarray
    state: object


@dataclass
class SaddleRun:
    """Averages plus the sums needed for the linearized regret at any reference point."""

    xbar: np.ndarray
    ybar: np.ndarray
    T: int
    sum_gw: float
    sum_g: np.ndarray
    config: QBConfig
    final_state: object = None
    checkpoints: dict = field(default_factory=dict)
    iterates: list | None = None

    def linear_regret(self, x_ref, y_ref) -> float:
        """``sum_t <g_t, w_t - w_ref>`` for the stacked gradients of this run."""
        ref = np.concatenate([as_point(x_ref), as_point(y_ref)])
        return float(self.sum_gw - self.sum_g @ ref)


def saddle_config(oracle, eps: float = 1.0, composition: QBComposition | None = None, G_floor: float = 1.0) -> QBConfig:
    """Learner configuration on the product space from the composed certificate.

    A zero ``G_w`` is replaced by ``G_floor`` since the learner needs ``G_max > 0``.
    """
    if composition is None:
        composition = bilinear_qb(oracle)
    G_w, L_w = compose_qb(composition)
    return QBConfig(eps=eps, G_max=G_w if G_w > 0 else G_floor, L_max=L_w, dim=oracle.dim_x + oracle.dim_y)


def saddle_solve(
    oracle,
    T: int,
    config: QBConfig | None = None,
    checkpoints=(),
    keep_iterates: bool = False,
) -> SaddleRun:
    """Run ``T`` rounds of the static learner on the stacked gradient and return averaged iterates."""
    if T < 1:
        raise ValueError("T must be >= 1")
    dx, dy = oracle.dim_x, oracle.dim_y
    cfg = saddle_config(oracle) if config is None else config
    if cfg.dim != dx + dy:
        raise DimensionError("learner dimension must equal dim_x + dim_y")
    state = qb_init(cfg)
    total = np.zeros(dx + dy)
    sum_g = np.zeros(dx + dy)
    sum_gw = 0.0
    marks = set(int(c) for c in checkpoints)
    snaps = {}
    its = [] if keep_iterates else None
    for t in range(1, T + 1):
        w = state.w
        if its is not None:
            its.append(w.copy())
        total += w
        _, gx, gy = oracle.evaluate(w[:dx], w[dx:])
        g = np.concatenate([gx, gy])
        sum_g += g
        sum_gw += float(g @ w)
        state = qb_step(state, g, cfg.G_max, cfg.L_max)
        if t in marks:
            avg = total / t
            snaps[t] = Checkpoint(avg[:dx].copy(), avg[dx:].copy(), sum_gw, sum_g.copy(), state)
    avg = total / T
    return SaddleRun(
        xbar=avg[:dx],
        ybar=avg[dx:],
        T=T,
        sum_gw=sum_gw,
        sum_g=sum_g,
        config=cfg,
        final_state=state,
        checkpoints=snaps,
        iterates=its,
    )


def duality_gap(oracle, xbar, ybar, x_ref, y_ref) -> float:
    """Reference-point gap ``L(xbar, y_ref) - L(x_ref, ybar)``."""
    hi = oracle.evaluate(as_point(xbar, oracle.dim_x), as_point(y_ref, oracle.dim_y))[0]
    lo = oracle.evaluate(as_point(x_ref, oracle.dim_x), as_point(ybar, oracle.dim_y))[0]
    return float(hi - lo)


__all__ = [
    "SaddleOracle",
    "QBComposition",
    "BilinearProblem",
    "SaddleRun",
    "Checkpoint",
    "ZeroF",
    "QuadraticF",
    "NormF",
    "PowerIterationError",
    "compose_qb",
    "operator_norm",
    "bilinear_qb",
    "make_component",
    "saddle_config",
    "saddle_solve",
    "duality_gap",
]

"""Online least-squares streams with a drifting ground truth.

``l_t(w) = 1/2 (y_t - <x_t, w>)^2`` with ``y_t = <x_t, w*_t> + n_t``. Features
have a fixed norm and noise is bounded, so the global constants
``G_max = |y|_max ||x||`` and ``L_max = ||x||^2`` are known up front.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from qbol.core import LossQuery, as_point, norm, project_ball
from qbol.bench.rng import component_streams

DRIFTS = ("constant", "piecewise", "random_walk")


@dataclass(frozen=True)
class SquareLoss:
    x: np.ndarray
    y: float

    def value(self, w) -> float:
        r = self.y - float(self.x @ w)
        return 0.5 * r * r

    def grad(self, w) -> np.ndarray:
        return -(self.y - float(self.x @ w)) * self.x

    def query(self, w) -> LossQuery:
        return LossQuery(self.value(w), self.grad(w))

    def query_batch(self, W):
        r = self.y - np.asarray(W) @ self.x
        return 0.5 * r * r, -r[:, None] * self.x[None, :]

    def certificate(self, w) -> tuple[float, float]:
        """``(G_t, L_t) = (|y| ||x||, |<x, w/||w||>| ||x||)``, with ``L_t = ||x||^2`` at the origin."""
        nx = norm(self.x)
        nw = norm(w)
        G_t = abs(self.y) * nx
        L_t = float(self.x @ self.x) if nw == 0.0 else abs(float(self.x @ w)) / nw * nx
        return G_t, L_t

    @property
    def smoothness(self) -> float:
        return float(self.x @ self.x)


@dataclass
class RegressionStream:
    """Pre-drawn stream of ``T`` rounds; draws never depend on the learner."""

    dim: int
    T: int
    seed: int = 0
    drift: str = "piecewise"
    n_shifts: int = 2
    w_star_norm: float = 1.0
    x_norm: float = 1.0
    noise: float = 0.1
    walk_step: float = 0.05
    t: int = field(init=False, default=0)

    def __post_init__(self):
        if self.dim < 1 or self.T < 1:
            raise ValueError("dim and T must be >= 1")
        if self.drift not in DRIFTS:
            raise ValueError(f"drift must be one of {DRIFTS}")
        if self.w_star_norm < 0 or self.noise < 0 or not self.x_norm > 0:
            raise ValueError("need w_star_norm >= 0, noise >= 0, x_norm > 0")
        rngs = component_streams(self.seed, ["features", "noise", "drift"])
        z = rngs["features"].standard_normal((self.T, self.dim))
        self.X = self.x_norm * z / np.linalg.norm(z, axis=1, keepdims=True)
        self.W_star = self._ground_truth(rngs["drift"])
        n = rngs["noise"].uniform(-self.noise, self.noise, size=self.T) if self.noise > 0 else np.zeros(self.T)
        self.Y = np.einsum("ij,ij->i", self.X, self.W_star) + n

    def _unit(self, rng) -> np.ndarray:
        v = rng.standard_normal(self.dim)
        return v / np.linalg.norm(v)

    def _ground_truth(self, rng) -> np.ndarray:
        W = np.empty((self.T, self.dim))
        if self.drift == "random_walk":
            w = self.w_star_norm * self._unit(rng)
            for t in range(self.T):
                W[t] = w
                w = project_ball(w + self.walk_step * rng.standard_normal(self.dim) / math.sqrt(self.dim), self.w_star_norm)
            return W
        segments = 1 if self.drift == "constant" else self.n_shifts + 1
        edges = np.linspace(0, self.T, segments + 1).round().astype(int)
        for a, b in zip(edges[:-1], edges[1:]):
            W[a:b] = self.w_star_norm * self._unit(rng)
        return W

    @property
    def G_max(self) -> float:
        return self.x_norm * (self.x_norm * self.w_star_norm + self.noise)

    @property
    def L_max(self) -> float:
        return self.x_norm**2

    def loss(self, t: int) -> SquareLoss:
        """Loss of 0-indexed round ``t``."""
        return SquareLoss(self.X[t], float(self.Y[t]))

    def comparator_losses(self, U) -> np.ndarray:
        """``l_t(u_t)`` for a path given as rows (or a single point used every round)."""
        U = np.asarray(U, dtype=np.float64)
        if U.ndim == 1:
            U = np.broadcast_to(U, (self.T, self.dim))
        r = self.Y - np.einsum("ij,ij->i", self.X, U)
        return 0.5 * r * r


def regression_next(stream: RegressionStream, w_t) -> tuple[LossQuery, float, float]:
    """Advance one round: the loss value and gradient at ``w_t`` plus its certificate."""
    if stream.t >= stream.T:
        raise IndexError("stream exhausted")
    w_t = as_point(w_t, stream.dim)
    loss = stream.loss(stream.t)
    stream.t += 1
    G_t, L_t = loss.certificate(w_t)
    return loss.query(w_t), G_t, L_t


__all__ = ["RegressionStream", "SquareLoss", "regression_next", "DRIFTS"]

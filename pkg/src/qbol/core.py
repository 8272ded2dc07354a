"""Vectors, loss oracles, quadratic-boundedness certificates and regret accounting.

Points are plain 1-D ``numpy.float64`` arrays. The reference point of every
quadratic bound is the origin; oracles that live around another centre must
translate before handing out gradients.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Protocol, Sequence

import numpy as np

REL_SLACK = 1e-12


class DimensionError(ValueError):
    """Raised when two points that must share a dimension do not."""


def as_point(x, dim: int | None = None) -> np.ndarray:
    """Coerce ``x`` to a finite float64 vector, optionally checking its dimension."""
    arr = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionError(f"expected a non-empty vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("point has non-finite entries")
    if dim is not None and arr.size != dim:
        raise DimensionError(f"expected dimension {dim}, got {arr.size}")
    return arr


def norm(x: np.ndarray) -> float:
    return float(np.sqrt(np.dot(x, x)))


def project_ball(w: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection onto the centred ball; ``radius=inf`` is the identity."""
    if np.isinf(radius):
        return w
    n = norm(w)
    if n <= radius:
        return w
    return w * (radius / n)


@dataclass(frozen=True)
class QuadBound:
    """Certificate ``||g|| <= G + L ||w||`` for gradients queried at ``w``."""

    G: float
    L: float

    def __post_init__(self):
        for name in ("G", "L"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")


@dataclass(frozen=True)
class LossQuery:
    value: float
    grad: np.ndarray


class LossOracle(Protocol):
    """One round's loss. Any number of queries may be made; all hit the same function."""

    def query(self, w: np.ndarray) -> LossQuery: ...


def query_many(oracle, W: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Values and gradients at every row of ``W``; uses ``oracle.query_batch`` when present."""
    batch = getattr(oracle, "query_batch", None)
    if batch is not None:
        vals, grads = batch(W)
        return np.asarray(vals, dtype=np.float64), np.asarray(grads, dtype=np.float64)
    vals = np.empty(W.shape[0])
    grads = np.empty_like(W)
    for i, w in enumerate(W):
        q = oracle.query(w)
        vals[i] = q.value
        grads[i] = q.grad
    return vals, grads


@dataclass(frozen=True)
class FunctionOracle:
    """Adapter turning a ``w -> (value, grad)`` callable into a loss oracle."""

    fn: Callable[[np.ndarray], tuple[float, np.ndarray]]

    def query(self, w: np.ndarray) -> LossQuery:
        v, g = self.fn(w)
        return LossQuery(float(v), np.asarray(g, dtype=np.float64))


def qb_check(g, w, bound: QuadBound) -> bool:
    g = as_point(g)
    w = as_point(w)
    if g.size != w.size:
        raise DimensionError(f"gradient dim {g.size} != point dim {w.size}")
    rhs = bound.G + bound.L * norm(w)
    return norm(g) <= rhs + REL_SLACK * (1.0 + rhs)


def path_length(path) -> float:
    """Total movement ``sum_t ||u_t - u_{t-1}||`` of a comparator sequence (rows are rounds)."""
    P = np.asarray(path, dtype=np.float64)
    if P.ndim == 1:
        P = P[:, None]
    if P.shape[0] == 0:
        raise ValueError("comparator path must be non-empty")
    if P.shape[0] == 1:
        return 0.0
    return float(np.sum(np.linalg.norm(np.diff(P, axis=0), axis=1)))


def self_bounding_check(g, value: float, min_value: float, L: float) -> bool:
    """``||g||^2 <= 2 L (value - min_value)``, the self-bounding property of L-smooth losses."""
    g = as_point(g)
    if L < 0:
        raise ValueError("L must be >= 0")
    if value < min_value - 1e-12:
        raise ValueError("value is below the stated minimum")
    g2 = float(np.dot(g, g))
    return g2 <= 2.0 * L * (value - min_value) + 1e-9 * (1.0 + g2)


@dataclass
class RegretLedger:
    """Running losses of the learner and of every registered comparator path."""

    path_ids: Sequence[str]
    played_losses: list[float] = field(default_factory=list)
    comparator_losses: dict[str, list[float]] = field(default_factory=dict)

    def __post_init__(self):
        self.path_ids = tuple(self.path_ids)
        for pid in self.path_ids:
            self.comparator_losses.setdefault(pid, [])

    @property
    def round_count(self) -> int:
        return len(self.played_losses)

    def record_round(self, played: float, at_comparators: Mapping[str, float]) -> "RegretLedger":
        missing = [pid for pid in self.path_ids if pid not in at_comparators]
        if missing:
            raise KeyError(f"missing comparator losses for {missing}")
        self.played_losses.append(float(played))
        for pid in self.path_ids:
            self.comparator_losses[pid].append(float(at_comparators[pid]))
        return self

    def regret(self, path_id: str, start: int = 0, stop: int | None = None) -> float:
        played = np.asarray(self.played_losses[start:stop])
        comp = np.asarray(self.comparator_losses[path_id][start:stop])
        return float(played.sum() - comp.sum())

    def regret_curve(self, path_id: str) -> np.ndarray:
        played = np.asarray(self.played_losses)
        comp = np.asarray(self.comparator_losses[path_id])
        return np.cumsum(played - comp)


def record_round(ledger: RegretLedger, played: float, at_comparators: Mapping[str, float]) -> RegretLedger:
    return ledger.record_round(played, at_comparators)

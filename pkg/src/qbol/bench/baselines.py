"""Fixed-step projected online gradient descent."""
from __future__ import annotations

import math

import numpy as np

from qbol.core import as_point, project_ball


def baseline_ogd_step(w, g, eta: float, D: float = math.inf) -> np.ndarray:
    """``Proj_D[w - eta g]``; ``D = inf`` means no projection."""
    if not eta > 0:
        raise ValueError("eta must be > 0")
    if not D > 0:
        raise ValueError("D must be in (0, inf]")
    w = as_point(w)
    g = as_point(g, w.size)
    return project_ball(w - eta * g, D)


class OGDLearner:
    def __init__(self, dim: int, eta: float, D: float = math.inf):
        if not eta > 0:
            raise ValueError("eta must be > 0")
        self.eta = eta
        self.D = D
        self.w = np.zeros(dim)

    def play(self) -> np.ndarray:
        return self.w

    def update(self, g) -> np.ndarray:
        self.w = baseline_ogd_step(self.w, g, self.eta, self.D)
        return self.w

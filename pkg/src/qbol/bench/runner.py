"""Experiment runner: scenario x learner -> per-round CSV and JSON summary.

Config files are JSON::

    {
      "scenario": "regression" | "static_lb" | "dynamic_lb" | "bilinear_saddle",
      "learner": "qb" | "dynamic" | "baseline_ogd",
      "T": 2000,                 # or "horizons": [500, 2000]
      "seed": 0,                 # or "seeds": [0, 1, 2]
      "scenario_params": {...},
      "learner_params": {...}
    }

A single (T, seed) pair writes ``run.csv`` and ``summary.json`` straight into the
output directory; several pairs get one ``T<T>_seed<seed>`` subdirectory each.
"""
from __future__ import annotations

import copy
import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from qbol.core import QuadBound, path_length, self_bounding_check
from qbol.dynamic import GridConfig, dyn_init, dyn_play, dyn_round
from qbol.experts import DEFAULT_K
from qbol.qb_learner import QBConfig, qb_init, qb_step
from qbol.saddle import BilinearProblem, bilinear_qb, compose_qb, duality_gap
from qbol.bench.adversaries import DynamicLBAdversary, StaticLBAdversary
from qbol.bench.baselines import OGDLearner
from qbol.bench.rng import PRNG_NAME
from qbol.bench.streams import RegressionStream

SCHEMA = "qbol-run-csv/1"
SUMMARY_SCHEMA = "qbol-run-summary/1"
SCENARIOS = ("regression", "static_lb", "dynamic_lb", "bilinear_saddle")
LEARNERS = ("qb", "dynamic", "baseline_ogd")
SLACK = 1e-9


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class LinearLoss:
    """``w -> <g, w>``; used for gradient-only scenarios."""

    g: np.ndarray
    smoothness: float = 0.0

    def value(self, w) -> float:
        return float(self.g @ w)

    def grad(self, w) -> np.ndarray:
        return self.g

    def query_batch(self, W):
        W = np.asarray(W)
        return W @ self.g, np.broadcast_to(self.g, W.shape).copy()


# scenarios ---------------------------------------------------------------


class _Scenario:
    dim: int
    G_max: float
    L_max: float
    path_ids: tuple[str, ...]

    def round(self, t: int, w):
        """Return ``(loss, G_t, L_t)`` for 0-indexed round ``t`` at play ``w``."""
        raise NotImplementedError

    def comparator_paths(self, T: int) -> dict[str, np.ndarray]:
        """Rows are ``u_t``; called after the run."""
        raise NotImplementedError

    def extras(self, run) -> dict:
        return {}


class _Regression(_Scenario):
    def __init__(self, p: dict, T: int, seed: int, learner: str):
        allowed = {"dim", "drift", "n_shifts", "w_star_norm", "x_norm", "noise", "walk_step"}
        _check_keys(p, allowed, "scenario_params")
        self.stream = RegressionStream(T=T, seed=seed, **{"dim": 5, **p})
        self.dim = self.stream.dim
        self.G_max = self.stream.G_max
        self.L_max = self.stream.L_max
        self.path_ids = ("zero", "drift")

    def round(self, t, w):
        f = self.stream.loss(t)
        G_t, L_t = f.certificate(w)
        return f, G_t, L_t

    def comparator_paths(self, T):
        return {"zero": np.zeros((T, self.dim)), "drift": self.stream.W_star[:T]}

    def extras(self, run):
        return {"self_bounding_failures": run.self_bounding_failures}


class _StaticLB(_Scenario):
    def __init__(self, p: dict, T: int, seed: int, learner: str):
        _check_keys(p, {"G", "L"}, "scenario_params")
        self.adv = StaticLBAdversary(G=float(p.get("G", 1.0)), L=float(p.get("L", 1.0)), T=T, rng_seed=seed)
        self.dim = 2
        self.G_max, self.L_max = self.adv.G, self.adv.L
        self.path_ids = ("zero", "lb")

    def round(self, t, w):
        g = self.adv.next(w)
        return LinearLoss(g), self.adv.G, self.adv.L

    def comparator_paths(self, T):
        return {"zero": np.zeros((T, 2)), "lb": np.tile(self.adv.comparator(), (T, 1))}

    def extras(self, run):
        a = self.adv
        return {"U": a.U, "sign": a.sign(), "GTU": a.G * a.t * a.U, "lb_regret": a.regret()}


class _DynamicLB(_Scenario):
    def __init__(self, p: dict, T: int, seed: int, learner: str):
        _check_keys(p, {"G", "L", "M", "mu_exp"}, "scenario_params")
        G, L = float(p.get("G", 1.0)), float(p.get("L", 1.0))
        self.adv = DynamicLBAdversary(G=G, L=L, M=float(p.get("M", max(1.0, G / L))), T=T, mu_exp=float(p.get("mu_exp", 0.5)))
        self.dim = 2
        self.G_max = 0.5 * G + 0.5 * self.adv.sigma * L
        self.L_max = L
        self.path_ids = ("zero", "lb")
        self.us = []

    def round(self, t, w):
        f, u = self.adv.next(w)
        self.us.append(u)
        b = f.bound
        return f, b.G, b.L

    def comparator_paths(self, T):
        return {"zero": np.zeros((T, 2)), "lb": np.array(self.us)}

    def extras(self, run):
        return {"sigma": self.adv.sigma, "round_floor": self.adv.round_regret_floor(), "orthogonal_rounds": run.orthogonal_rounds}


class _BilinearSaddle(_Scenario):
    def __init__(self, p: dict, T: int, seed: int, learner: str, base_dir: Path | None = None):
        _check_keys(p, {"problem", "x_ref", "y_ref"}, "scenario_params")
        prob = p.get("problem", {"B": [[1.0]]})
        if isinstance(prob, str):
            path = Path(prob)
            if not path.is_absolute() and base_dir is not None:
                path = base_dir / path
            self.problem = BilinearProblem.from_json(path)
        else:
            self.problem = BilinearProblem.from_dict(prob)
        dx, dy = self.problem.dim_x, self.problem.dim_y
        self.dx = dx
        self.dim = dx + dy
        G_w, L_w = compose_qb(bilinear_qb(self.problem))
        self.G_cert, self.L_max = G_w, L_w
        self.G_max = G_w if G_w > 0 else 1.0
        self.x_ref = np.asarray(p.get("x_ref", [1.0] * dx), dtype=np.float64)
        self.y_ref = np.asarray(p.get("y_ref", [1.0] * dy), dtype=np.float64)
        self.path_ids = ("zero", "ref")
        self.total = np.zeros(self.dim)
        self.n = 0

    def round(self, t, w):
        self.total += w
        self.n += 1
        _, gx, gy = self.problem.evaluate(w[: self.dx], w[self.dx :])
        return LinearLoss(np.concatenate([gx, gy])), self.G_cert, self.L_max

    def comparator_paths(self, T):
        ref = np.concatenate([self.x_ref, self.y_ref])
        return {"zero": np.zeros((T, self.dim)), "ref": np.tile(ref, (T, 1))}

    def extras(self, run):
        avg = self.total / max(self.n, 1)
        xbar, ybar = avg[: self.dx], avg[self.dx :]
        gap = duality_gap(self.problem, xbar, ybar, self.x_ref, self.y_ref)
        return {"xbar": xbar.tolist(), "ybar": ybar.tolist(), "gap": gap}


def _check_keys(p: dict, allowed: set, where: str):
    bad = set(p) - allowed
    if bad:
        raise ConfigError(f"unknown keys in {where}: {sorted(bad)}")


# learners ----------------------------------------------------------------


class _QB:
    bound_kind = "static"

    def __init__(self, p: dict, sc: _Scenario, T: int):
        _check_keys(p, {"eps", "k", "kappa", "c", "domain_radius", "strict"}, "learner_params")
        self.cfg = QBConfig(
            eps=float(p.get("eps", 1.0)),
            G_max=sc.G_max,
            L_max=sc.L_max,
            dim=sc.dim,
            k=float(p.get("k", 3.0)),
            kappa=float(p.get("kappa", 4.0)),
            c=float(p.get("c", 4.0)),
            domain_radius=float(p.get("domain_radius", math.inf)),
            strict=bool(p.get("strict", False)),
        )
        self.state = qb_init(self.cfg)
        self.hist = []

    def play(self):
        return self.state.w

    def update(self, f, w, G_t, L_t):
        self.state = qb_step(self.state, f.grad(w), G_t, L_t)
        s = self.state
        self.hist.append((s.V, s.alpha, s.sumL2))

    @property
    def violations(self):
        return self.state.violations

    def bounds(self, U: np.ndarray) -> np.ndarray | None:
        norms = np.linalg.norm(U, axis=1)
        if np.ptp(norms) > 0 or np.any(np.ptp(U, axis=0) > 0):
            return None  # time-varying comparator: the static bound does not apply
        un = float(norms[0])
        V, alpha, sumL2 = (np.array(c) for c in zip(*self.hist))
        c = self.cfg
        F = np.log1p(un / alpha)
        return (
            2 * c.eps * c.G_max
            + c.kappa * un**2 * np.sqrt(c.L_max**2 + sumL2)
            + 2 * c.k * un * np.maximum(np.sqrt(V * F), c.G_max * F)
        )


class _Dynamic:
    bound_kind = "dynamic"

    def __init__(self, p: dict, sc: _Scenario, T: int):
        _check_keys(p, {"eps", "K", "smooth", "max_exponent_cap"}, "learner_params")
        self.cfg = GridConfig(
            eps=float(p.get("eps", 1.0)),
            G_max=sc.G_max,
            L_max=sc.L_max,
            T=T,
            K=float(p.get("K", 8.0)),
            smooth=bool(p.get("smooth", False)),
            max_exponent_cap=int(p.get("max_exponent_cap", 40)),
        )
        self.state = dyn_init(self.cfg, sc.dim)

    def play(self):
        return dyn_play(self.state)

    def update(self, f, w, G_t, L_t):
        dyn_round(self.state, f, QuadBound(G_t, getattr(f, "smoothness", L_t)))

    @property
    def violations(self):
        return self.state.weights.scale_violations

    def bounds(self, U: np.ndarray, u_loss: np.ndarray) -> np.ndarray | None:
        """Prefix-wise minimum over admissible experts of the untuned bound."""
        st = self.state
        lg = st.logs
        k = st.weights_cfg.k
        G, K = st.cfg.G_max, st.cfg.K
        ell = np.array(lg.expert_loss)  # T x N
        gsq = np.array(lg.grad_sq)
        Ls = np.array(lg.L)
        mu2 = st.mu**2
        lam = np.log(mu2.sum() / mu2) + 1.0
        cs = st.mu.sum() / mu2.sum()
        eta, D = st.eta[None, :], st.D[None, :]
        uT2 = np.einsum("ij,ij->i", U, U)[:, None]
        steps = np.r_[0.0, np.linalg.norm(np.diff(U, axis=0), axis=1)]
        P = np.cumsum(steps)[:, None]
        bias = np.cumsum(Ls[:, None] * (u_loss[:, None] - ell), axis=0)
        g2 = np.cumsum(gsq, axis=0)
        B = (
            2 * k * cs
            + 2 * k * D * G * lam[None, :]
            + (uT2 + 2 * D * P + 4 * k * D * D * lam[None, :]) / (2 * eta)
            + K * eta * bias
            + 4 * eta * g2
        )
        reach = np.maximum.accumulate(np.linalg.norm(U, axis=1))[:, None]
        B = np.where(D >= reach * (1 - 1e-12), B, np.inf)
        out = B.min(axis=1)
        return None if not np.all(np.isfinite(out)) else out


class _OGD:
    bound_kind = None

    def __init__(self, p: dict, sc: _Scenario, T: int):
        _check_keys(p, {"eta", "D"}, "learner_params")
        self.o = OGDLearner(sc.dim, float(p.get("eta", 1.0 / math.sqrt(T))), float(p.get("D", math.inf)))

    def play(self):
        return self.o.w

    def update(self, f, w, G_t, L_t):
        self.o.update(f.grad(w))

    violations = 0


_SCENARIO_CLS = {"regression": _Regression, "static_lb": _StaticLB, "dynamic_lb": _DynamicLB, "bilinear_saddle": _BilinearSaddle}
_LEARNER_CLS = {"qb": _QB, "dynamic": _Dynamic, "baseline_ogd": _OGD}
_SUPPORTED = {
    "qb": set(SCENARIOS),
    "dynamic": {"regression", "dynamic_lb"},
    "baseline_ogd": {"regression", "static_lb", "dynamic_lb"},
}


# driver ------------------------------------------------------------------


@dataclass
class RunResult:
    columns: list[str]
    rows: np.ndarray
    summary: dict
    self_bounding_failures: int = 0
    orthogonal_rounds: int = 0
    extra: dict = field(default_factory=dict)


def validate_config(cfg: dict) -> dict:
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    _check_keys(cfg, {"scenario", "learner", "T", "horizons", "seed", "seeds", "scenario_params", "learner_params", "name"}, "config")
    sc, le = cfg.get("scenario"), cfg.get("learner")
    if sc not in SCENARIOS:
        raise ConfigError(f"scenario must be one of {SCENARIOS}, got {sc!r}")
    if le not in LEARNERS:
        raise ConfigError(f"learner must be one of {LEARNERS}, got {le!r}")
    if sc not in _SUPPORTED[le]:
        raise ConfigError(f"learner {le!r} does not support scenario {sc!r}")
    Ts = cfg.get("horizons", [cfg["T"]] if "T" in cfg else None)
    if not Ts or any(not isinstance(t, int) or isinstance(t, bool) or t < 1 for t in Ts):
        raise ConfigError("T (or horizons) must be positive integers")
    seeds = cfg.get("seeds", [cfg.get("seed", 0)])
    if not seeds or any(not isinstance(s, int) or isinstance(s, bool) or s < 0 for s in seeds):
        raise ConfigError("seeds must be non-negative integers")
    for key in ("scenario_params", "learner_params"):
        if not isinstance(cfg.get(key, {}), dict):
            raise ConfigError(f"{key} must be an object")
    return cfg


def run_single(cfg: dict, T: int, seed: int, base_dir: Path | None = None) -> RunResult:
    cfg = validate_config(copy.deepcopy(cfg))
    sp = dict(cfg.get("scenario_params", {}))
    lp = dict(cfg.get("learner_params", {}))
    name = cfg["scenario"]
    if name == "bilinear_saddle":
        sc = _BilinearSaddle(sp, T, seed, cfg["learner"], base_dir)
    else:
        sc = _SCENARIO_CLS[name](sp, T, seed, cfg["learner"])
    le = _LEARNER_CLS[cfg["learner"]](lp, sc, T)

    played = np.empty(T)
    norm_w = np.empty(T)
    losses = []
    sb_fail = 0
    orth = 0
    for t in range(T):
        w = np.array(le.play(), dtype=np.float64)
        f, G_t, L_t = sc.round(t, w)
        played[t] = f.value(w)
        norm_w[t] = float(np.linalg.norm(w))
        losses.append(f)
        if name == "regression":
            if not self_bounding_check(f.grad(w), played[t], 0.0, f.smoothness):
                sb_fail += 1
        if name == "dynamic_lb" and abs(float(f.xi @ w)) <= 1e-12 * (1 + norm_w[t]):
            orth += 1
        le.update(f, w, G_t, L_t)

    paths = sc.comparator_paths(T)
    cols = ["t", "loss_played", "norm_w"]
    data = [np.arange(1, T + 1, dtype=np.float64), played, norm_w]
    regret_cols, bound_cols = [], []
    path_summary = {}
    violations = 0
    for pid in sc.path_ids:
        U = paths[pid]
        u_loss = np.array([f.value(u) for f, u in zip(losses, U)])
        reg = np.cumsum(played - u_loss)
        regret_cols.append((f"regret_{pid}", reg))
        if le.bound_kind == "static":
            bnd = le.bounds(U)
        elif le.bound_kind == "dynamic":
            bnd = le.bounds(U, u_loss)
        else:
            bnd = None
        if bnd is not None:
            bound_cols.append((f"bound_{pid}", bnd))
            violations += int(np.sum(reg > bnd + SLACK * (1 + np.abs(bnd))))
        path_summary[pid] = {
            "regret": float(reg[-1]),
            "P_T": path_length(U),
            "M": float(np.max(np.linalg.norm(U, axis=1))),
            "bound": None if bnd is None else float(bnd[-1]),
        }
    for c, v in regret_cols + bound_cols:
        cols.append(c)
        data.append(v)

    result = RunResult(columns=cols, rows=np.column_stack(data), summary={}, self_bounding_failures=sb_fail, orthogonal_rounds=orth)
    result.summary = {
        "schema": SUMMARY_SCHEMA,
        "csv_schema": SCHEMA,
        "prng": PRNG_NAME,
        "scenario": name,
        "learner": cfg["learner"],
        "T": T,
        "seed": seed,
        "scenario_params": sp,
        "learner_params": lp,
        "G_max": sc.G_max,
        "L_max": sc.L_max,
        "paths": path_summary,
        "bound_violations": violations,
        "certificate_violations": int(le.violations),
        "extras": sc.extras(result),
    }
    return result


def _fmt(x: float) -> str:
    x = float(x)
    if x.is_integer() and abs(x) < 2**53:
        return str(int(x))
    return repr(x)


def write_run(result: RunResult, out: Path) -> Path:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    lines = [f"# schema={SCHEMA}", ",".join(result.columns)]
    for row in result.rows:
        lines.append(",".join(_fmt(v) for v in row))
    with open(out / "run.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    with open(out / "summary.json", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(result.summary, indent=2, sort_keys=True, allow_nan=False) + "\n")
    return out


def load_config(path) -> dict:
    path = Path(path)
    try:
        cfg = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})") from e
    return validate_config(cfg)


def run_experiment(config, out_dir) -> list[Path]:
    """Run every (horizon, seed) pair of ``config`` (a dict or a JSON file path)."""
    base = None
    if not isinstance(config, dict):
        base = Path(config).resolve().parent
        config = load_config(config)
    cfg = validate_config(config)
    Ts = cfg.get("horizons", [cfg.get("T")])
    seeds = cfg.get("seeds", [cfg.get("seed", 0)])
    pairs = list(itertools.product(Ts, seeds))
    out_dir = Path(out_dir)
    dirs = []
    for T, seed in pairs:
        d = out_dir if len(pairs) == 1 else out_dir / f"T{T}_seed{seed}"
        dirs.append(write_run(run_single(cfg, T, seed, base), d))
    return dirs


# verification ------------------------------------------------------------


def read_run_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or not lines[0].startswith("# schema="):
        raise ConfigError(f"{path}: missing schema line")
    schema = lines[0].split("=", 1)[1]
    if schema != SCHEMA:
        raise ConfigError(f"{path}: unsupported schema {schema!r}")
    cols = lines[1].split(",")
    rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[2:] if ln], dtype=np.float64)
    return cols, rows.reshape(-1, len(cols))


@dataclass
class VerifyReport:
    run_dir: Path
    rows: int
    checked: dict
    violations: int
    recorded_violations: int
    problems: list

    @property
    def ok(self) -> bool:
        return not self.problems and self.violations == 0


def verify_run(run_dir) -> VerifyReport:
    run_dir = Path(run_dir)
    cols, rows = read_run_csv(run_dir / "run.csv")
    summary = json.loads((run_dir / "summary.json").read_text(encoding="utf-8"))
    problems = []
    if rows.shape[0] != summary["T"]:
        problems.append(f"expected {summary['T']} rows, found {rows.shape[0]}")
    idx = {c: i for i, c in enumerate(cols)}
    checked = {}
    total = 0
    for c in cols:
        if not c.startswith("bound_"):
            continue
        pid = c[len("bound_"):]
        if f"regret_{pid}" not in idx:
            problems.append(f"bound column {c} has no regret column")
            continue
        reg, bnd = rows[:, idx[f"regret_{pid}"]], rows[:, idx[c]]
        n = int(np.sum(reg > bnd + SLACK * (1 + np.abs(bnd))))
        checked[pid] = n
        total += n
    if total != summary.get("bound_violations"):
        problems.append(f"recomputed {total} violations but summary records {summary.get('bound_violations')}")
    return VerifyReport(run_dir, rows.shape[0], checked, total, summary.get("bound_violations", -1), problems)


def find_runs(root) -> list[Path]:
    root = Path(root)
    if (root / "run.csv").exists():
        return [root]
    return sorted(p.parent for p in root.rglob("run.csv"))

"""Acceptance criteria 1-11, one test each, at the stated tolerances.

Each test appends a ``[PASS]`` or ``[FAIL]`` line that pytest prints in an
"acceptance criteria" section at the end of the run.
"""
import math
import time

import numpy as np
import pytest

import conftest
from oracles import golden_radial_argmin, entropy_objective, simplex_grid_min
from qbol.core import QuadBound, path_length, self_bounding_check
from qbol.dynamic import GridConfig, dyn_init, dyn_play, dyn_round, realized_regret, untuned_bound
from qbol.experts import ExpertsConfig, experts_init, experts_meta_bound, experts_update
from qbol.mirror import QBCurveParams, RadialCurve, ScaledEntropyProblem, cmd_step, kkt_residual, solve_scaled_entropy
from qbol.qb_learner import QBConfig, qb_init, qb_regret_bound, qb_step
from qbol.saddle import BilinearProblem, duality_gap, saddle_solve
from qbol.bench.adversaries import DynamicLBAdversary, StaticLBAdversary
from qbol.bench.runner import run_single
from qbol.bench.streams import RegressionStream


def record(n: int, ok: bool, detail: str):
    conftest.ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}")
    assert ok, detail


def test_criterion_01_mirror_inversion():
    rng = np.random.default_rng(101)
    cases = []
    for i in range(100):
        p = QBCurveParams(k=rng.uniform(3, 10), V=10 ** rng.uniform(0, 4), alpha=10 ** rng.uniform(-4, 0), G_max=1.0,
                          kappa=4.0 if i % 2 else 0.0, rho_inv=rng.uniform(0.1, 3))
        curve = RadialCurve.qb(p)
        theta = rng.standard_normal(3)
        theta *= curve(10 ** rng.uniform(-4, 4)) / np.linalg.norm(theta)
        cases.append((curve, theta))
    t0 = time.perf_counter()
    xs = [float(np.linalg.norm(cmd_step(np.zeros(3), th, np.zeros(3), c))) for c, th in cases]
    elapsed = time.perf_counter() - t0
    worst = 0.0
    for (c, th), x in zip(cases, xs):
        ref = golden_radial_argmin(c, float(np.linalg.norm(th)))
        worst = max(worst, abs(x - ref) / (1 + ref))
    record(1, worst <= 1e-6 and elapsed < 1.0, f"max |dx|/(1+x) = {worst:.2e} (<= 1e-6), cmd_step time {elapsed:.3f}s (< 1s)")


def test_criterion_02_simplex_kkt():
    rng = np.random.default_rng(202)
    worst_sum = worst_kkt = 0.0
    positive = True
    for _ in range(200):
        n = int(rng.integers(1, 51))
        mu = 10 ** rng.uniform(-3, 3, n)
        ell = rng.uniform(-1, 1, n) / mu
        prob = ScaledEntropyProblem(rng.dirichlet(np.ones(n)), ell + mu * ell**2, mu)
        q, lam = solve_scaled_entropy(prob)
        positive &= bool(np.all(q > 0))
        worst_sum = max(worst_sum, abs(q.sum() - 1))
        worst_kkt = max(worst_kkt, kkt_residual(prob, q, lam) / (1 + np.max(np.abs(prob.costs))))
    worst_gap = -math.inf
    for _ in range(20):
        mu = 10 ** rng.uniform(-1, 1, 3)
        ell = rng.uniform(-1, 1, 3) / mu
        p, c = rng.dirichlet(np.ones(3)), ell + mu * ell**2
        q, _ = solve_scaled_entropy(ScaledEntropyProblem(p, c, mu))
        worst_gap = max(worst_gap, entropy_objective(q, p, c, mu, 4.5) - simplex_grid_min(p, c, mu, 4.5))
    ok = positive and worst_sum <= 1e-12 and worst_kkt <= 1e-8 and worst_gap <= 1e-6
    record(2, ok, f"|sum-1| <= {worst_sum:.1e}, scaled KKT <= {worst_kkt:.1e}, N=3 objective - grid min <= {worst_gap:.1e}")


def test_criterion_03_static_bound():
    T, d = 2000, 5
    violations = checks = 0
    t0 = time.perf_counter()
    for seed in range(20):
        rng = np.random.default_rng(3000 + seed)
        cfg = QBConfig(eps=1.0, G_max=1.0, L_max=1.0, dim=d)
        s = qb_init(cfg)
        dirs = rng.standard_normal((8, d))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        drift = rng.standard_normal(d)
        sum_g, sum_gw = np.zeros(d), 0.0
        for _ in range(T):
            G_t, L_t = rng.uniform(0, 1), rng.uniform(0, 1)
            v = drift + rng.standard_normal(d)
            g = v / np.linalg.norm(v) * (G_t + L_t * np.linalg.norm(s.w)) * rng.uniform(0, 1)
            sum_g += g
            sum_gw += float(g @ s.w)
            s = qb_step(s, g, G_t, L_t)
        for un in (0.0, 0.1, 1.0, 10.0, 100.0):
            b = qb_regret_bound(cfg, s, un)
            for u in un * dirs:
                checks += 1
                violations += int(sum_gw - sum_g @ u > b)
    elapsed = time.perf_counter() - t0
    record(3, violations == 0 and elapsed < 10, f"{violations} violations in {checks} checks, {elapsed:.2f}s (< 10s)")


def test_criterion_04_origin_regret():
    worst = -math.inf
    for seed in range(20):
        adv = StaticLBAdversary(G=1.0, L=1.0, T=1000, rng_seed=seed)
        cfg = QBConfig(eps=1.0, G_max=1.0, L_max=1.0, dim=2)
        s = qb_init(cfg)
        for _ in range(1000):
            s = qb_step(s, adv.next(s.w), 1.0, 1.0)
        worst = max(worst, adv.sum_gw)
    record(4, worst <= 2.0, f"max regret vs 0 over 20 seeds = {worst:.4g} (<= 2 eps G_max = 2)")


def test_criterion_05_multiscale_template():
    N, T = 5, 1000
    violations = 0
    worst_slack = math.inf
    for seed in range(20):
        rng = np.random.default_rng(5000 + seed)
        mu = 10 ** rng.uniform(-2, 1, N)
        cfg = ExpertsConfig(mu=mu, T=T)
        s = experts_init(cfg)
        bias = rng.uniform(-1, 1, N)
        hist, reg = np.empty((T, N)), np.zeros(N)
        for t in range(T):
            ell = np.clip(bias + 0.5 * rng.uniform(-1, 1, N), -1, 1) / mu
            reg += float(ell @ s.p) - ell
            hist[t] = ell
            s = experts_update(cfg, s, ell)
        assert s.scale_violations == 0
        for i in range(N):
            b = experts_meta_bound(cfg, np.eye(N)[i], hist)
            violations += int(reg[i] > b)
            worst_slack = min(worst_slack, b - reg[i])
    record(5, violations == 0, f"{violations} violations over 20 seeds x {N} experts, min slack {worst_slack:.3g}")


def test_criterion_06_dynamic_untuned_bound():
    T, d = 200, 3
    violations = checks = 0
    n_exp = 0
    t0 = time.perf_counter()
    for seed in range(5):
        stream = RegressionStream(dim=d, T=T, seed=600 + seed, drift="random_walk")
        cfg = GridConfig(eps=1.0, G_max=stream.G_max, L_max=stream.L_max, T=T, smooth=True, max_exponent_cap=5)
        st = dyn_init(cfg, d)
        n_exp = st.n_experts
        for t in range(T):
            f = stream.loss(t)
            dyn_round(st, f, QuadBound(f.certificate(dyn_play(st))[0], f.smoothness))
        rng = np.random.default_rng(seed)
        paths = [stream.W_star] + [np.tile(c, (T, 1)) for c in [np.zeros(d)] + list(rng.uniform(-0.6, 0.6, (4, d)))]
        for U in paths:
            u_loss = stream.comparator_losses(U)
            reg = realized_regret(st, u_loss)
            reach = np.max(np.linalg.norm(U, axis=1))
            for i in range(st.n_experts):
                if st.D[i] >= reach:
                    checks += 1
                    violations += int(reg > untuned_bound(st, i, U, u_loss))
    elapsed = time.perf_counter() - t0
    ok = violations == 0 and elapsed < 30 and n_exp <= 30 and checks > 0
    record(6, ok, f"|S| = {n_exp}, {violations} violations in {checks} (expert, path) checks, {elapsed:.2f}s (< 30s)")


def test_criterion_07_dynamic_tracking():
    sp = {"dim": 1, "x_norm": 0.1, "w_star_norm": 1.0, "noise": 0.1, "drift": "piecewise", "n_shifts": 2}
    lp = {"smooth": True, "max_exponent_cap": 8, "eps": 1.0}
    T = 2000
    ratios, wins = [], 0
    for seed in range(5):
        reg = {}
        for h in (T, 4 * T):
            cfg = {"scenario": "regression", "learner": "dynamic", "T": h, "seed": seed, "scenario_params": sp, "learner_params": lp}
            reg[h] = run_single(cfg, h, seed).summary["paths"]["drift"]["regret"]
        ogd = {"scenario": "regression", "learner": "baseline_ogd", "T": T, "seed": seed, "scenario_params": sp}
        wins += int(reg[T] < run_single(ogd, T, seed).summary["paths"]["drift"]["regret"])
        ratios.append(reg[4 * T] / reg[T])
    ok = max(ratios) <= 2.5 and wins >= 4
    record(7, ok, f"R_4T/R_T per seed = [{', '.join(f'{r:.3f}' for r in ratios)}] (<= 2.5), beats OGD in {wins}/5 seeds (>= 4)")


def test_criterion_08_saddle():
    p = BilinearProblem(B=[[1.0]], ux=[0.0], uy=[0.0])
    T = 10_000
    t0 = time.perf_counter()
    run = saddle_solve(p, T, checkpoints=range(1, T + 1))
    elapsed = time.perf_counter() - t0
    bad = 0
    for t, cp in run.checkpoints.items():
        gap = duality_gap(p, cp.xbar, cp.ybar, [1.0], [1.0])
        bad += int(gap > qb_regret_bound(run.config, cp.state, math.sqrt(2)) / t)
    g100 = duality_gap(p, run.checkpoints[100].xbar, run.checkpoints[100].ybar, [1.0], [1.0])
    g_end = duality_gap(p, run.xbar, run.ybar, [1.0], [1.0])
    ok = bad == 0 and g_end <= g100 / 5 and elapsed < 5
    record(8, ok, f"{bad} rounds above bound/T, gap(1e4) = {g_end:.3g} vs gap(1e2)/5 = {g100 / 5:.3g}, {elapsed:.2f}s (< 5s)")


def test_criterion_09_static_lower_bound():
    T = 400
    ratios = []
    for seed in range(50):
        adv = StaticLBAdversary(G=1.0, L=1.0, T=T, rng_seed=seed)
        s = qb_init(QBConfig(eps=1.0, G_max=1.0, L_max=1.0, dim=2))
        for _ in range(T):
            s = qb_step(s, adv.next(s.w), 1.0, 1.0)
        ratios.append(adv.regret() / (adv.G * T * adv.U))
    m = float(np.mean(ratios))
    record(9, m >= 0.8, f"mean regret / (G T U) over 50 seeds = {m:.4f} (>= 0.8)")


@pytest.mark.parametrize("learner", ["dynamic", "qb"])
def test_criterion_10_dynamic_lower_bound(learner):
    G, L, M, T = 1.0, 1.0, 2.0, 500
    adv = DynamicLBAdversary(G=G, L=L, M=M, T=T)
    sig = adv.sigma
    rng = np.random.default_rng(10)
    us, plays, qb_ok = [], [], True
    lossdiff = 0.0
    if learner == "dynamic":
        st = dyn_init(GridConfig(eps=1.0, G_max=0.5 * G + 0.5 * sig * L, L_max=L, T=T), 2)
        play = lambda: dyn_play(st)
    else:
        s = [qb_init(QBConfig(eps=1.0, G_max=0.5 * G + 0.5 * sig * L, L_max=L, dim=2))]
        play = lambda: s[0].w
    for _ in range(T):
        w = play()
        f, u = adv.next(w)
        W = rng.standard_normal((100, 2)) * 10 ** rng.uniform(-2, 2, (100, 1))
        _, grads = f.query_batch(W)
        qb_ok &= bool(np.all(np.linalg.norm(grads, axis=1) <= (0.5 * G + 0.5 * sig * L + L * np.linalg.norm(W, axis=1)) * (1 + 1e-12)))
        us.append(u)
        plays.append(abs(float(f.xi @ w)))
        lossdiff += f.value(w) - f.value(u)
        if learner == "dynamic":
            dyn_round(st, f, QuadBound(f.bound.G, f.smoothness))
        else:
            s[0] = qb_step(s[0], f.grad(w), f.bound.G, f.bound.L)
    us = np.array(us)
    floor = 0.5 * G * sig * T + 0.25 * L * sig**2 * T
    norms_ok = bool(np.allclose(np.linalg.norm(us, axis=1), sig, rtol=1e-14, atol=0))
    path_ok = path_length(us) <= 2 * sig * T
    orth = max(plays) <= 1e-12
    ok = qb_ok and norms_ok and path_ok and orth and lossdiff >= floor * (1 - 1e-12)
    record(10, ok, f"[{learner}] sampled QB {qb_ok}, |u_t| = sigma {norms_ok}, P_T <= 2 sigma T {path_ok}, "
                   f"max |<xi,w>| = {max(plays):.1e}, regret {lossdiff:.6g} >= floor {floor:.6g}")


def test_criterion_11_self_bounding():
    fails = rounds = 0
    for drift in ("constant", "piecewise", "random_walk"):
        cfg = {"scenario": "regression", "learner": "qb", "T": 1000, "seed": 11,
               "scenario_params": {"dim": 4, "drift": drift}}
        r = run_single(cfg, 1000, 11)
        fails += r.self_bounding_failures
        rounds += 1000
        # independent recheck on fresh random points
        stream = RegressionStream(dim=4, T=200, seed=12, drift=drift)
        rng = np.random.default_rng(0)
        for t in range(200):
            f = stream.loss(t)
            w = rng.standard_normal(4) * rng.uniform(0, 3)
            rounds += 1
            fails += int(not self_bounding_check(f.grad(w), f.value(w), 0.0, float(f.x @ f.x)))
    record(11, fails == 0, f"{fails} failures in {rounds} rounds")

import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qbol.mirror import QBCurveParams, RadialCurve, cmd_step, radial_gradient
from qbol.qb_learner import CertificateViolation, QBConfig, QBLearner, qb_init, qb_regret_bound, qb_step
from oracles import golden_radial_argmin, psi_prime_ref


def cfg1(**kw):
    base = dict(eps=1.0, G_max=1.0, L_max=0.0, dim=1)
    base.update(kw)
    return QBConfig(**base)


def test_init_values():
    s = qb_init(cfg1())
    assert s.t == 1 and s.V == 4.0 and s.sumG2 == 0.0 and s.sumL2 == 0.0
    # alpha_1 = 1/(2 ln^2 4), recomputed from the formula
    assert math.isclose(s.alpha, 1.0 / (2.0 * math.log(4.0) ** 2), rel_tol=1e-14)
    assert abs(s.alpha - 0.26017) < 1e-5
    assert s.rho_inv == 0.0


@pytest.mark.parametrize("d", [1, 3, 17])
def test_init_origin(d):
    assert np.array_equal(qb_init(cfg1(dim=d, L_max=2.0)).w, np.zeros(d))
    assert qb_init(cfg1(dim=d, L_max=2.0)).rho_inv == 2.0


@pytest.mark.parametrize("bad", [dict(G_max=0.0), dict(eps=0.0), dict(L_max=-1.0), dict(k=2.0), dict(kappa=3.0),
                                 dict(c=3.0), dict(dim=0), dict(domain_radius=0.0)])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        cfg1(**bad)


def test_zero_gradients_keep_origin():
    c = cfg1(dim=3, L_max=1.0)
    s = qb_init(c)
    for _ in range(50):
        s = qb_step(s, np.zeros(3), 1.0, 1.0)
    assert np.array_equal(s.w, np.zeros(3))


@pytest.mark.parametrize("sign", [1.0, -1.0])
def test_first_step_value(sign):
    c = cfg1()
    s = qb_step(qb_init(c), [sign], 1.0, 0.0)
    assert s.V == 5.0
    alpha2 = 1.0 / (math.sqrt(5.0) * math.log(5.0) ** 2)
    assert math.isclose(s.alpha, alpha2, rel_tol=1e-14)
    assert abs(alpha2 - 0.17265) < 1e-5
    # independent oracle: golden-section on the full radial objective with eta minimized numerically
    x_ref = golden_radial_argmin(lambda x: psi_prime_ref(3.0, 5.0, alpha2, 1.0, 0.0, x), 1.0, rtol=1e-12)
    assert math.isclose(x_ref, alpha2 * math.expm1(1.0 / 180.0), rel_tol=1e-6)
    assert math.isclose(-sign * s.w[0], x_ref, rel_tol=1e-6)
    assert abs(abs(s.w[0]) - 9.62e-4) < 5e-6


def test_regret_bound_examples():
    c = cfg1()
    s = qb_init(c)
    assert qb_regret_bound(c, s, 0.0) == 2.0
    T = 25
    for _ in range(T):
        s = qb_step(s, [0.3], 1.0, 0.0)
    for u in (0.01, 1.0, 7.0):
        V = 4.0 + T
        alpha = 1.0 / (math.sqrt(V) * math.log(V) ** 2)
        F = math.log(u / alpha + 1.0)
        ref = 2.0 + 6.0 * u * max(math.sqrt(V * F), F)
        assert math.isclose(qb_regret_bound(c, s, u), ref, rel_tol=1e-12)
    vals = [qb_regret_bound(c, s, u) for u in np.linspace(0, 100, 50)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        qb_regret_bound(c, s, -1.0)


def test_lipschitz_case_has_no_composite_term():
    c = cfg1(dim=2)
    s = qb_init(c)
    rng = np.random.default_rng(0)
    for _ in range(30):
        g = rng.uniform(-0.7, 0.7, 2)
        params = QBCurveParams(c.k, s.V + 1.0, c.alpha(s.V + 1.0), c.G_max, c.kappa, 0.0)
        expected = cmd_step(s.w, radial_gradient(s.curve, s.w), g, RadialCurve.qb(params))
        s = qb_step(s, g, 1.0, 0.0)
        assert s.sumL2 == 0.0 and s.rho_inv == 0.0
        assert np.array_equal(s.w, expected)


def test_monotone_V_and_domain_radius():
    c = cfg1(dim=3, L_max=1.0, domain_radius=0.005)
    s = qb_init(c)
    rng = np.random.default_rng(4)
    prev, reached = s.V, 0.0
    for _ in range(300):
        g = -np.ones(3) / math.sqrt(3)  # pushes outward steadily
        s = qb_step(s, g * rng.uniform(0, 1), 1.0, 0.0)
        assert s.V >= prev and np.linalg.norm(s.w) <= 0.005 * (1 + 1e-12)
        assert math.log(s.V / c.G_max**2) ** 2 >= math.log(4.0) ** 2
        prev, reached = s.V, max(reached, np.linalg.norm(s.w))
    assert math.isclose(reached, 0.005, rel_tol=1e-9)


def test_certificate_violation_warns_then_strict_raises(caplog):
    c = cfg1(dim=1)
    with caplog.at_level(logging.WARNING, logger="qbol.qb_learner"):
        s = qb_step(qb_init(c), [2.0], 1.0, 0.0)
    assert s.violations == 1 and "violates" in caplog.text
    with pytest.raises(CertificateViolation):
        qb_step(qb_init(cfg1(strict=True)), [2.0], 1.0, 0.0)


def test_certificate_range_checked():
    s = qb_init(cfg1(L_max=1.0))
    with pytest.raises(ValueError):
        qb_step(s, [0.0], 1.5, 0.0)
    with pytest.raises(ValueError):
        qb_step(s, [0.0], 0.5, 2.0)


def test_learner_wrapper():
    lr = QBLearner(cfg1(dim=2, L_max=1.0))
    assert np.array_equal(lr.play(), np.zeros(2))
    w = lr.update([1.0, 0.0], 1.0, 0.0)
    assert w[0] < 0 and lr.regret_bound(0.0) == 2.0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 4), st.floats(0.1, 3.0), st.floats(0.0, 2.0))
def test_linearized_regret_below_bound(seed, d, G_max, L_max):
    rng = np.random.default_rng(seed)
    c = QBConfig(eps=1.0, G_max=G_max, L_max=L_max, dim=d)
    s = qb_init(c)
    drift = rng.standard_normal(d)
    sum_g = np.zeros(d)
    sum_gw = 0.0
    for _ in range(150):
        G_t, L_t = rng.uniform(0, G_max), rng.uniform(0, L_max)
        v = drift + rng.standard_normal(d)
        g = v / np.linalg.norm(v) * (G_t + L_t * np.linalg.norm(s.w)) * rng.uniform(0.5, 1.0)
        sum_g += g
        sum_gw += g @ s.w
        s = qb_step(s, g, G_t, L_t)
    for un in (0.0, 0.5, 5.0, 50.0):
        u = -un * sum_g / max(np.linalg.norm(sum_g), 1e-300)
        assert sum_gw - sum_g @ u <= qb_regret_bound(c, s, un) + 1e-9

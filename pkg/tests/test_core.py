import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qbol.core import (
    DimensionError,
    FunctionOracle,
    QuadBound,
    RegretLedger,
    as_point,
    path_length,
    project_ball,
    qb_check,
    query_many,
    record_round,
    self_bounding_check,
)

finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_as_point_rejects_nonfinite_and_wrong_dim():
    with pytest.raises(ValueError):
        as_point([1.0, np.nan])
    with pytest.raises(DimensionError):
        as_point([1.0, 2.0], dim=3)
    with pytest.raises(DimensionError):
        as_point(np.zeros((2, 2)))


def test_quadbound_validation():
    with pytest.raises(ValueError):
        QuadBound(-1.0, 0.0)
    with pytest.raises(ValueError):
        QuadBound(0.0, math.inf)


def test_qb_check_examples():
    assert qb_check(np.zeros(3), np.array([5.0, 1.0, 2.0]), QuadBound(0.0, 0.0))
    w = np.array([2.0, 0.0])
    assert qb_check(np.array([3.0, 0.0]), w, QuadBound(1.0, 1.0))
    assert not qb_check(np.array([3.1, 0.0]), w, QuadBound(1.0, 1.0))


def test_qb_check_dimension_mismatch():
    with pytest.raises(DimensionError):
        qb_check(np.zeros(2), np.zeros(3), QuadBound(1.0, 1.0))


@given(st.lists(finite, min_size=3, max_size=3), st.lists(finite, min_size=3, max_size=3),
       st.floats(0, 10), st.floats(0, 10), st.floats(0, 5), st.floats(0, 5))
def test_qb_check_monotone(g, w, G, L, dG, dL):
    if qb_check(g, w, QuadBound(G, L)):
        assert qb_check(g, w, QuadBound(G + dG, L + dL))


def test_path_length_examples():
    assert path_length(np.ones((5, 2))) == 0.0
    assert path_length([0.0, 1.0, 3.0]) == 3.0
    assert path_length([[1.0, 2.0]]) == 0.0
    with pytest.raises(ValueError):
        path_length(np.zeros((0, 2)))


def test_path_length_matches_resummation():
    rng = np.random.default_rng(0)
    P = rng.standard_normal((200, 4))
    ref = 0.0
    for a, b in zip(P[:-1], P[1:]):
        ref += math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))
    assert abs(path_length(P) - ref) <= 1e-12 * max(1.0, ref)


@given(st.integers(1, 20), st.lists(finite, min_size=2, max_size=2), st.integers(0, 1000))
def test_path_length_translation_invariant(n, shift, seed):
    P = np.random.default_rng(seed).standard_normal((n, 2))
    assert math.isclose(path_length(P), path_length(P + np.array(shift)), rel_tol=1e-9, abs_tol=1e-9)


def test_ledger_examples():
    led = RegretLedger(["u"])
    record_round(led, 1.0, {"u": 0.0})
    assert led.round_count == 1 and led.regret("u") == 1.0
    led2 = RegretLedger(["a", "b"])
    for v in [0.3, 1.2, -4.0]:
        led2.record_round(v, {"a": v, "b": 0.0})
    assert led2.regret("a") == 0.0


def test_ledger_missing_path():
    led = RegretLedger(["a", "b"])
    with pytest.raises(KeyError):
        led.record_round(1.0, {"a": 0.0})


def test_ledger_random_rounds_and_additivity():
    rng = np.random.default_rng(3)
    played = rng.standard_normal(100)
    comp = rng.standard_normal(100)
    led = RegretLedger(["u"])
    for p, c in zip(played, comp):
        led.record_round(p, {"u": c})
    brute = 0.0
    for p, c in zip(played, comp):
        brute += p - c
    assert abs(led.regret("u") - brute) <= 1e-10
    s = 37
    assert abs(led.regret("u") - (led.regret("u", 0, s) + led.regret("u", s))) <= 1e-10
    assert abs(led.regret_curve("u")[-1] - led.regret("u")) <= 1e-10


def test_self_bounding_examples():
    assert self_bounding_check(np.zeros(2), 1.0, 1.0, 0.0)
    assert self_bounding_check([2.0], 2.0, 0.0, 1.0)
    assert not self_bounding_check([2.0], 2.0, 0.0, 0.9)
    with pytest.raises(ValueError):
        self_bounding_check([1.0], 0.0, 1.0, 1.0)


def test_project_ball_and_query_many():
    assert np.allclose(project_ball(np.array([3.0, 4.0]), 1.0), [0.6, 0.8])
    w = np.array([0.1, 0.2])
    assert project_ball(w, math.inf) is w
    orc = FunctionOracle(lambda w: (float(w @ w), 2 * w))
    vals, grads = query_many(orc, np.array([[1.0, 0.0], [0.0, 2.0]]))
    assert np.allclose(vals, [1.0, 4.0]) and np.allclose(grads, [[2.0, 0.0], [0.0, 4.0]])

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from wassball import SolverError
from wassball.lp import simplex_bland
from wassball.search import compass_maximize, golden_section


def test_simplex_against_scipy():
    rng = np.random.default_rng(11)
    for _ in range(40):
        m, n = int(rng.integers(2, 5)), int(rng.integers(5, 30))
        A = np.hstack([rng.uniform(0.1, 2, size=(m, n)), np.eye(m)])
        b = rng.uniform(1, 3, size=m)
        c = np.concatenate([rng.normal(size=n), np.zeros(m)])
        res = simplex_bland(c, A, b, list(range(n, n + m)))
        ref = linprog(-c, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
        assert res.value == pytest.approx(-ref.fun, rel=1e-9, abs=1e-12)
        assert np.allclose(A @ res.x, b, atol=1e-10)
        assert np.all(res.x >= 0)
        assert np.count_nonzero(res.x) <= m


def test_simplex_degenerate_problem_terminates():
    # a classic cycling example for the largest-coefficient rule
    c = np.array([0.75, -150, 0.02, -6, 0, 0, 0])
    A = np.array(
        [[0.25, -60, -0.04, 9, 1, 0, 0], [0.5, -90, -0.02, 3, 0, 1, 0], [0, 0, 1, 0, 0, 0, 1]], dtype=float
    )
    b = np.array([0.0, 0.0, 1.0])
    res = simplex_bland(c, A, b, [4, 5, 6])
    assert res.value == pytest.approx(0.05)


def test_simplex_unbounded_and_bad_basis():
    A = np.array([[1.0, -1.0]])
    with pytest.raises(SolverError):
        simplex_bland(np.array([0.0, 1.0]), A, np.array([1.0]), [0])
    with pytest.raises(SolverError):
        simplex_bland(np.array([1.0, 1.0]), np.eye(2), np.ones(2), [0, 0])


@given(st.floats(-5, 5), st.floats(0.1, 10))
@settings(max_examples=100, deadline=None)
def test_golden_section_quadratic(c, scale):
    x, v = golden_section(lambda t: scale * (t - c) ** 2, -10, 10, tol=1e-12)
    assert abs(x - c) < 1e-5
    assert v <= 1e-9 * scale


def test_golden_section_boundary_minimum():
    x, v = golden_section(lambda t: t, 2.0, 5.0)
    assert x == 2.0 and v == 2.0
    x, v = golden_section(lambda t: abs(t - 1.0) + 3, 0.0, 4.0, tol=1e-12)
    assert x == pytest.approx(1.0, abs=1e-9)


def test_compass_maximize_independent_searches():
    targets = np.array([[1.0, -2.0], [0.3, 0.7], [-1.5, 0.0]])

    def fun(P, idx):
        return -np.sum((P - targets[idx][:, None, :]) ** 2, axis=-1)

    def project(P, idx):
        return np.clip(P, -1.0, 1.0)

    x, v = compass_maximize(fun, np.zeros((3, 2)), project, 0.5, min_step=1e-9)
    assert np.allclose(x, np.clip(targets, -1, 1), atol=1e-8)
    # a single search gives the same trajectory as when run alongside others
    x1, _ = compass_maximize(lambda P, idx: fun(P, idx + 1), np.zeros((1, 2)), project, 0.5, min_step=1e-9)
    assert np.array_equal(x1[0], x[1])


def test_compass_treats_nan_as_infeasible():
    def fun(P, idx):
        return np.where(P[..., 0] > 0.5, np.nan, P[..., 0])

    x, v = compass_maximize(fun, np.zeros((1, 1)), lambda P, idx: P, 0.25, min_step=1e-9)
    assert 0.5 - 1e-8 <= x[0, 0] <= 0.5
    assert math.isfinite(v[0])

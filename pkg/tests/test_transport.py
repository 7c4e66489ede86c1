import itertools

import numpy as np
import pytest
from conftest import random_measure
from scipy.optimize import linprog

from wassball import DiscreteMeasure, MetricSpec, distance, solve_transport, wasserstein


def brute_force_transport(a, b, C):
    """Minimum cost over every basic feasible solution of the transportation polytope."""
    m, n = C.shape
    cells = [(i, j) for i in range(m) for j in range(n)]
    A = np.zeros((m + n, m * n))
    for k, (i, j) in enumerate(cells):
        A[i, k] = 1.0
        A[m + j, k] = 1.0
    rhs = np.concatenate([a, b])
    best = np.inf
    for basis in itertools.combinations(range(m * n), m + n - 1):
        B = A[:-1, basis]  # one marginal equation is redundant
        if abs(np.linalg.det(B)) < 1e-12:
            continue
        x = np.linalg.solve(B, rhs[:-1])
        if np.all(x >= -1e-12):
            best = min(best, float(np.dot(C.ravel()[list(basis)], x)))
    return best


def scipy_transport(a, b, C):
    m, n = C.shape
    A = np.zeros((m + n, m * n))
    for i in range(m):
        A[i, i * n:(i + 1) * n] = 1.0
    for j in range(n):
        A[m + j, j::n] = 1.0
    res = linprog(C.ravel(), A_eq=A, b_eq=np.concatenate([a, b]), bounds=(0, None), method="highs")
    return res.fun


def test_transport_examples():
    m1, m2 = MetricSpec("euclidean", 1), MetricSpec("euclidean", 2)
    x = DiscreteMeasure.dirac([1.0, 2.0])
    plan = solve_transport(x, x, m1)
    assert plan.triplets() == [(0, 0, 1.0)] and plan.cost == 0.0
    assert solve_transport(DiscreteMeasure.dirac([0.0]), DiscreteMeasure.dirac([3.0]), m2).cost == 9.0
    mu = DiscreteMeasure([[0.0], [1.0]], [0.5, 0.5])
    nu = DiscreteMeasure([[0.0], [2.0]], [0.5, 0.5])
    assert solve_transport(mu, nu, m1).cost == pytest.approx(0.5, abs=1e-15)
    assert wasserstein(mu, nu, m1) == pytest.approx(0.5, abs=1e-15)
    assert wasserstein(mu, mu, m2) == 0.0


def test_dirac_pair_is_ground_distance(rng):
    for p in (1, 2, 3):
        m = MetricSpec("euclidean", p)
        for _ in range(20):
            x, y = rng.normal(size=3), rng.normal(size=3)
            w = wasserstein(DiscreteMeasure.dirac(x), DiscreteMeasure.dirac(y), m)
            assert w == pytest.approx(distance(x, y, m), rel=1e-12)


def test_matches_vertex_enumeration(rng):
    for trial in range(60):
        rows = int(rng.integers(1, 5))
        cols = int(rng.integers(1, 8 - rows))
        dim = int(rng.integers(1, 4))
        p = [1, 2][trial % 2]
        mu, nu = random_measure(rng, rows, dim), random_measure(rng, cols, dim)
        m = MetricSpec("euclidean", p)
        C = m.pairwise_cost(mu.atoms, nu.atoms)
        plan = solve_transport(mu, nu, m)
        assert plan.cost == pytest.approx(brute_force_transport(mu.weights, nu.weights, C), rel=1e-9, abs=1e-12)


def test_matches_scipy_and_plan_invariants(rng):
    for trial in range(60):
        rows, cols = int(rng.integers(1, 9)), int(rng.integers(1, 9))
        dim = int(rng.integers(1, 4))
        m = [MetricSpec("euclidean", 1), MetricSpec("qnorm", 2, q=1.0), MetricSpec("euclidean", 2)][trial % 3]
        mu, nu = random_measure(rng, rows, dim), random_measure(rng, cols, dim)
        plan = solve_transport(mu, nu, m)
        C = m.pairwise_cost(mu.atoms, nu.atoms)
        assert plan.cost == pytest.approx(scipy_transport(mu.weights, nu.weights, C), rel=1e-9, abs=1e-12)
        G = plan.dense()
        assert np.all(G >= 0)
        assert np.allclose(G.sum(axis=1), mu.weights, atol=1e-10, rtol=0)
        assert np.allclose(G.sum(axis=0), nu.weights, atol=1e-10, rtol=0)
        assert plan.nnz <= rows + cols - 1
        assert plan.cost == pytest.approx(float(np.sum(G * C)), rel=1e-12, abs=1e-15)


def test_degenerate_marginals():
    m = MetricSpec("euclidean", 1)
    mu = DiscreteMeasure([[0.0], [1.0], [2.0], [3.0]], [0.25] * 4)
    nu = DiscreteMeasure([[0.5], [2.5]], [0.5, 0.5])
    plan = solve_transport(mu, nu, m)
    assert plan.cost == pytest.approx(0.5)
    assert plan.nnz <= 5
    # equal partial sums force a degenerate basis
    a = DiscreteMeasure([[0.0], [1.0], [5.0]], [0.5, 0.25, 0.25])
    b = DiscreteMeasure([[0.0], [1.0], [5.0]], [0.5, 0.25, 0.25])
    assert wasserstein(a, b, m) == 0.0


def test_monotone_in_p(rng):
    for _ in range(40):
        mu, nu = random_measure(rng, 5, 2), random_measure(rng, 4, 2)
        w1 = wasserstein(mu, nu, MetricSpec("euclidean", 1))
        w2 = wasserstein(mu, nu, MetricSpec("euclidean", 2))
        w3 = wasserstein(mu, nu, MetricSpec("euclidean", 3))
        assert w1 <= w2 + 1e-9 and w2 <= w3 + 1e-9


def test_symmetry_is_exact(rng):
    for _ in range(50):
        mu, nu = random_measure(rng, 6, 2), random_measure(rng, 3, 2)
        for p in (1, 2):
            m = MetricSpec("euclidean", p)
            assert wasserstein(mu, nu, m) == wasserstein(nu, mu, m)


def test_larger_instance_against_scipy():
    rng = np.random.default_rng(7)
    mu, nu = random_measure(rng, 40, 2), random_measure(rng, 35, 2)
    m = MetricSpec("euclidean", 2)
    C = m.pairwise_cost(mu.atoms, nu.atoms)
    plan = solve_transport(mu, nu, m)
    assert plan.cost == pytest.approx(scipy_transport(mu.weights, nu.weights, C), rel=1e-9)
    assert plan.nnz <= 74

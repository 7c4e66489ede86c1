import numpy as np
import pytest

from wassball import Box, DiscreteMeasure, MetricSpec, ProblemInstance, parse


def random_measure(rng, n_atoms, dim, spread=2.0):
    atoms = rng.uniform(-spread, spread, size=(n_atoms, dim))
    w = rng.dirichlet(np.ones(n_atoms))
    return DiscreteMeasure.build(atoms, w, renormalize=True)


def make_instance(source, atoms, weights, r, p=1, half=4.0, grid=65, kind="euclidean", **metric_kw):
    nu = DiscreteMeasure.build(atoms, weights, renormalize=True)
    n = nu.dim
    metric = MetricSpec(kind, p, **metric_kw)
    box = Box(np.full(n, -half), np.full(n, half))
    return ProblemInstance(nu, r, metric, parse(source, n), box, {"grid": grid})


def random_instance(rng, source_1d, source_2d, p=None, r=None):
    dim = int(rng.integers(1, 3))
    N = int(rng.integers(1, 5))
    p = p if p is not None else int(rng.integers(1, 3))
    r = r if r is not None else float(rng.uniform(0.2, 1.2))
    nu = random_measure(rng, N, dim)
    source = source_1d if dim == 1 else source_2d
    return make_instance(source, nu.atoms, nu.weights, r, p)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def linear_p1():
    return make_instance("x1", [[0.0]], [1.0], 1.0, p=1, half=10.0, grid=81)


@pytest.fixture
def linear_p2():
    return make_instance("x1", [[0.0]], [1.0], 1.0, p=2, half=10.0, grid=81)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)

"""Exact p-Wasserstein distance between discrete measures via the transportation simplex.

The basis is kept as a spanning tree over the m row nodes and n column nodes
(m + n - 1 basic cells). Each iteration computes dual potentials on the tree,
prices every cell, pivots the most negative reduced cost around the unique
cycle it closes, and re-solves the basic flows from scratch so round-off does
not accumulate. Degeneracy is removed by Orden's perturbation of the
marginals; the final plan is re-solved on the optimal tree with the
unperturbed weights.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .core import DiscreteMeasure, MetricSpec, check_same_dim
from .errors import SolverError

PERTURBATION = 1e-13
DENSE_LIMIT = 10**6


@dataclass(frozen=True)
class TransportPlan:
    """Sparse coupling: ``mass[k]`` moves from source atom ``rows[k]`` to target atom ``cols[k]``."""

    n_rows: int
    n_cols: int
    rows: np.ndarray
    cols: np.ndarray
    mass: np.ndarray
    cost: float
    vertex: bool = True

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self.mass))

    def dense(self) -> np.ndarray:
        G = np.zeros((self.n_rows, self.n_cols))
        np.add.at(G, (self.rows, self.cols), self.mass)
        return G

    def triplets(self) -> list:
        return [(int(i), int(j), float(w)) for i, j, w in zip(self.rows, self.cols, self.mass)]


class _Costs:
    """Cost matrix d^p, dense when small, otherwise produced row by row on demand."""

    def __init__(self, xs: np.ndarray, ys: np.ndarray, m: MetricSpec):
        self.xs, self.ys, self.m = xs, ys, m
        self.shape = (xs.shape[0], ys.shape[0])
        self.dense = m.pairwise_cost(xs, ys) if self.shape[0] * self.shape[1] <= DENSE_LIMIT else None

    def row(self, i: int) -> np.ndarray:
        if self.dense is not None:
            return self.dense[i]
        return self.m.cost(self.ys, self.xs[i])

    def entry(self, i: int, j: int) -> float:
        if self.dense is not None:
            return float(self.dense[i, j])
        return float(self.m.cost(self.xs[i], self.ys[j]))

    def scale(self) -> float:
        if self.dense is not None:
            return float(np.max(self.dense)) if self.dense.size else 0.0
        return max(float(np.max(self.row(i))) for i in range(self.shape[0]))


def _northwest_corner(a: np.ndarray, b: np.ndarray) -> list:
    m, n = a.size, b.size
    basis = []
    i = j = 0
    ra, rb = a.copy(), b.copy()
    while i < m and j < n:
        basis.append((i, j))
        t = min(ra[i], rb[j])
        ra[i] -= t
        rb[j] -= t
        if i == m - 1:
            j += 1
        elif j == n - 1:
            i += 1
        elif ra[i] <= rb[j]:
            i += 1
        else:
            j += 1
    if len(basis) != m + n - 1:  # pragma: no cover - structural invariant
        raise SolverError(f"north-west corner produced {len(basis)} cells, expected {m + n - 1}")
    return basis


def _adjacency(basis: list, m: int, n: int) -> list:
    """Tree adjacency over nodes 0..m-1 (rows) and m..m+n-1 (columns)."""
    adj = [[] for _ in range(m + n)]
    for k, (i, j) in enumerate(basis):
        adj[i].append((m + j, k))
        adj[m + j].append((i, k))
    return adj


def _flows(basis: list, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Basic flows on a spanning tree by repeated leaf elimination."""
    m, n = a.size, b.size
    adj = _adjacency(basis, m, n)
    rem = np.concatenate([a, b]).astype(float)
    deg = np.array([len(x) for x in adj])
    used = np.zeros(len(basis), dtype=bool)
    x = np.zeros(len(basis))
    leaves = deque(v for v in range(m + n) if deg[v] == 1)
    while leaves:
        v = leaves.popleft()
        if deg[v] != 1:
            continue
        for w, k in adj[v]:
            if not used[k]:
                break
        else:  # pragma: no cover
            continue
        used[k] = True
        x[k] = rem[v]
        rem[w] -= rem[v]
        rem[v] = 0.0
        deg[v] -= 1
        deg[w] -= 1
        if deg[w] == 1:
            leaves.append(w)
    return x


def _potentials(basis: list, costs: _Costs, m: int, n: int):
    adj = _adjacency(basis, m, n)
    pot = np.full(m + n, np.nan)
    pot[0] = 0.0
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for w, k in adj[v]:
            if np.isnan(pot[w]):
                i, j = basis[k]
                pot[w] = costs.entry(i, j) - pot[v]
                queue.append(w)
    return pot[:m], pot[m:]


def _tree_path(basis: list, m: int, n: int, src: int, dst: int) -> list:
    """Basic cell indices along the tree path from node ``src`` to node ``dst``."""
    adj = _adjacency(basis, m, n)
    prev = {src: None}
    queue = deque([src])
    while queue:
        v = queue.popleft()
        if v == dst:
            break
        for w, k in adj[v]:
            if w not in prev:
                prev[w] = (v, k)
                queue.append(w)
    path = []
    v = dst
    while prev[v] is not None:
        v, k = prev[v]
        path.append(k)
    path.reverse()
    return path


def _solve_basis(a: np.ndarray, b: np.ndarray, costs: _Costs, max_iter: int) -> list:
    m, n = a.size, b.size
    a_p = a + PERTURBATION
    b_p = b.copy()
    b_p[-1] += m * PERTURBATION
    basis = _northwest_corner(a_p, b_p)
    tol = 1e-12 * max(1.0, costs.scale())
    for _ in range(max_iter):
        x = _flows(basis, a_p, b_p)
        u, v = _potentials(basis, costs, m, n)
        best, enter = -tol, None
        for i in range(m):
            red = costs.row(i) - u[i] - v
            j = int(np.argmin(red))
            if red[j] < best:
                best, enter = float(red[j]), (i, j)
        if enter is None:
            return basis
        i, j = enter
        # path from column node j back to row node i closes the cycle with (i, j)
        path = _tree_path(basis, m, n, m + j, i)
        minus = path[0::2]
        k_out = min(minus, key=lambda k: (x[k], basis[k]))
        basis[k_out] = enter
    raise SolverError(f"transportation simplex hit the iteration cap ({max_iter})")


def solve_transport(mu: DiscreteMeasure, nu: DiscreteMeasure, m: MetricSpec, max_iter: int = 100000) -> TransportPlan:
    """Optimal coupling of ``mu`` (rows) and ``nu`` (columns) for cost d^p, as a vertex plan."""
    check_same_dim(mu, nu)
    m.check_dim(mu.dim)
    a, b = np.asarray(mu.weights, dtype=float), np.asarray(nu.weights, dtype=float)
    costs = _Costs(mu.atoms, nu.atoms, m)
    basis = _solve_basis(a, b, costs, max_iter)
    # drop the perturbation: re-solve flows on the optimal tree with the true marginals
    x = _flows(basis, a, b)
    x = np.where(x > 0, x, 0.0)
    keep = x > 0
    rows = np.array([basis[k][0] for k in range(len(basis))], dtype=int)[keep]
    cols = np.array([basis[k][1] for k in range(len(basis))], dtype=int)[keep]
    mass = x[keep]
    order = np.lexsort((cols, rows))
    rows, cols, mass = rows[order], cols[order], mass[order]
    cost = float(sum(w * costs.entry(i, j) for i, j, w in zip(rows, cols, mass)))
    return TransportPlan(mu.size, nu.size, rows, cols, mass, max(cost, 0.0))


def _order_key(mu: DiscreteMeasure) -> tuple:
    return (mu.size, mu.atoms.tobytes(), mu.weights.tobytes())


def wasserstein(mu: DiscreteMeasure, nu: DiscreteMeasure, m: MetricSpec) -> float:
    """W_p(mu, nu) = (optimal transport cost)^(1/p).

    The pair is put in a canonical order first, so swapping the arguments
    solves the identical LP and the result is symmetric bit for bit.
    """
    if _order_key(nu) < _order_key(mu):
        mu, nu = nu, mu
    cost = solve_transport(mu, nu, m).cost
    return cost if m.p == 1 else cost ** (1.0 / m.p)

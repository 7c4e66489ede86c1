"""Finite-support LP oracle: restrict atom locations to a grid and solve the lifted LP exactly.

With grid Z and reference atoms y_1..y_N the LP is::

    maximize   sum_{z,i} f(z) g[z,i]
    subject to sum_z g[z,i] = alpha_i                  i = 1..N
               sum_{z,i} d^p(z, y_i) g[z,i] + s = r^p
               g, s >= 0

The normalization row is redundant given the N marginal rows and is left
out, so a basic solution has at most N + 1 positive entries.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .core import DiscreteMeasure, ProblemInstance
from .errors import ContractViolation, InputError
from .lp import simplex_bland

MAX_LP_ENTRIES = 10**7
NNZ_TOL = 1e-14


@dataclass(frozen=True)
class GridSpec:
    """Cartesian grid over the search box; reference atoms are always added."""

    counts: tuple

    def __post_init__(self):
        counts = tuple(int(c) for c in np.atleast_1d(self.counts))
        if not counts or any(c < 2 for c in counts):
            raise InputError(f"grid needs at least 2 points per dimension, got {counts}")
        object.__setattr__(self, "counts", counts)

    @classmethod
    def uniform(cls, count: int, dim: int) -> "GridSpec":
        return cls((int(count),) * dim)

    def refined(self) -> "GridSpec":
        """Double the density; the refined grid contains every point of this one."""
        return GridSpec(tuple(2 * c - 1 for c in self.counts))

    def points(self, inst: ProblemInstance) -> np.ndarray:
        box = inst.search_box
        if len(self.counts) != box.dim:
            raise InputError(f"grid has {len(self.counts)} dimensions, instance has {box.dim}")
        axes = [
            box.lo[k] + box.width[k] * (np.arange(c) / (c - 1)) for k, c in enumerate(self.counts)
        ]
        # exact endpoints regardless of rounding in lo + width
        for k, ax in enumerate(axes):
            ax[-1] = box.hi[k]
        Z = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, box.dim)
        extra = [y for y in inst.reference.atoms if not np.any(np.all(Z == y, axis=1))]
        if extra:
            Z = np.vstack([Z, np.unique(np.array(extra), axis=0)])
        return Z


@dataclass(frozen=True)
class GridPlan:
    """Sparse plan over (grid point, reference atom) pairs plus the budget slack."""

    points: np.ndarray  # Z, (K, n)
    alpha: np.ndarray  # reference weights
    z_index: np.ndarray
    atom_index: np.ndarray
    mass: np.ndarray
    budget_coeff: np.ndarray  # d^p(Z[z], y_i) per entry
    slack: float
    budget: float  # r^p
    vertex: bool = True

    @property
    def nnz(self) -> int:
        return int(np.sum(self.mass > NNZ_TOL))

    def triplets(self) -> list:
        return [
            (self.points[z].tolist(), int(i), float(w))
            for z, i, w in zip(self.z_index, self.atom_index, self.mass)
        ]


class GridLPResult(NamedTuple):
    value: float
    plan: GridPlan
    vertex: bool
    iterations: int


class Sparsity(NamedTuple):
    nonzeros: int
    ok: bool


def solve_grid_lp(inst: ProblemInstance, grid: GridSpec, max_iter: int = 200000) -> GridLPResult:
    """Solve the lifted LP over ``grid`` to an optimal vertex with Bland's rule."""
    Z = grid.points(inst)
    nu = inst.reference
    N = nu.size
    if Z.shape[0] * N > MAX_LP_ENTRIES:
        raise InputError(f"grid LP too large: {Z.shape[0]} points x {N} atoms")
    F = inst.objective.batch(Z)
    ok = np.isfinite(F)
    keep_y = [np.flatnonzero(np.all(Z == y, axis=1))[0] for y in nu.atoms]
    if not np.all(ok[keep_y]):
        raise InputError("objective is undefined at a reference atom; the identity coupling has no value")
    Z, F = Z[ok], F[ok]
    K = Z.shape[0]
    D = inst.metric.pairwise_cost(Z, nu.atoms)  # (K, N)
    # column z*N + i carries mass from y_i to Z[z]; the last column is the slack
    c = np.concatenate([np.repeat(F, N), [0.0]])
    A = np.zeros((N + 1, K * N + 1))
    cols = np.arange(K * N)
    A[cols % N, cols] = 1.0
    A[N, :-1] = D.reshape(-1)
    A[N, -1] = 1.0
    b = np.concatenate([nu.weights, [inst.budget]])
    ident = [int(np.flatnonzero(np.all(Z == y, axis=1))[0]) * N + i for i, y in enumerate(nu.atoms)]
    res = simplex_bland(c, A, b, ident + [K * N], max_iter=max_iter)
    x = res.x
    support = np.flatnonzero(x[:-1] > 0)
    plan = GridPlan(
        points=Z,
        alpha=np.array(nu.weights),
        z_index=support // N,
        atom_index=support % N,
        mass=x[support],
        budget_coeff=D.reshape(-1)[support],
        slack=float(x[-1]),
        budget=inst.budget,
        vertex=True,
    )
    return GridLPResult(res.value, plan, True, res.iterations)


def _support_matrix(plan: GridPlan) -> np.ndarray:
    N = plan.alpha.size
    live = plan.mass > NNZ_TOL
    cols = []
    for i, coeff in zip(plan.atom_index[live], plan.budget_coeff[live]):
        col = np.zeros(N + 1)
        col[i] = 1.0
        col[N] = coeff
        cols.append(col)
    if plan.slack > NNZ_TOL:
        col = np.zeros(N + 1)
        col[N] = 1.0
        cols.append(col)
    return np.array(cols).T if cols else np.zeros((N + 1, 0))


def check_sparsity(plan: GridPlan) -> Sparsity:
    """Count structural nonzeros of a basic plan and compare with N + 1.

    Raises ContractViolation when the support columns are linearly dependent,
    i.e. the plan is not a vertex of the LP feasible region.
    """
    M = _support_matrix(plan)
    if M.shape[1] and np.linalg.matrix_rank(M) < M.shape[1]:
        raise ContractViolation(
            f"plan is not a vertex: {M.shape[1]} support columns have rank {np.linalg.matrix_rank(M)}"
        )
    nnz = plan.nnz
    return Sparsity(nnz, nnz <= plan.alpha.size + 1)


def marginal_of(plan: GridPlan) -> DiscreteMeasure:
    """First marginal of the plan: grid points weighted by the mass they receive."""
    N = plan.alpha.size
    col = np.bincount(plan.atom_index, weights=plan.mass, minlength=N)
    if np.max(np.abs(col - plan.alpha)) > 1e-10:
        raise ContractViolation(f"plan column sums {col.tolist()} differ from reference weights")
    rows = np.bincount(plan.z_index, weights=plan.mass, minlength=plan.points.shape[0])
    live = np.flatnonzero(rows > 0)
    return DiscreteMeasure.build(plan.points[live], rows[live], renormalize=True)


def average_plans(p: GridPlan, q: GridPlan, t: float = 0.5) -> GridPlan:
    """Convex combination of two plans on the same grid (generally not a vertex)."""
    if p.points.shape != q.points.shape or not np.array_equal(p.points, q.points):
        raise InputError("plans live on different grids")
    N = p.alpha.size
    K = p.points.shape[0]

    def dense(plan):
        x = np.zeros(K * N)
        np.add.at(x, plan.z_index * N + plan.atom_index, plan.mass)
        return x

    coeff = np.zeros(K * N)
    coeff[p.z_index * N + p.atom_index] = p.budget_coeff
    coeff[q.z_index * N + q.atom_index] = q.budget_coeff
    x = t * dense(p) + (1 - t) * dense(q)
    support = np.flatnonzero(x > 0)
    return GridPlan(
        p.points, p.alpha, support // N, support % N, x[support], coeff[support],
        t * p.slack + (1 - t) * q.slack, p.budget, vertex=False,
    )


def plan_from_entries(inst: ProblemInstance, points: Sequence, entries: Sequence) -> GridPlan:
    """Build a plan from explicit ``(z_index, atom_index, mass)`` entries over ``points``."""
    Z = np.asarray(points, dtype=float)
    z = np.array([e[0] for e in entries], dtype=int)
    i = np.array([e[1] for e in entries], dtype=int)
    w = np.array([e[2] for e in entries], dtype=float)
    coeff = inst.metric.cost(Z[z], inst.reference.atoms[i])
    slack = inst.budget - float(np.dot(coeff, w))
    return GridPlan(Z, np.array(inst.reference.weights), z, i, w, coeff, slack, inst.budget, vertex=False)

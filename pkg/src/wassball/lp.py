"""Revised primal simplex with Bland's rule for small-row, many-column LPs.

Solves ``maximize c @ x  s.t.  A @ x = b, x >= 0`` from a caller-supplied
feasible basis. The row count is tiny (the oracle LPs have N + 1 rows), so
the basis matrix is refactorized from scratch every iteration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SolverError


@dataclass(frozen=True)
class LPResult:
    x: np.ndarray
    value: float
    basis: tuple
    iterations: int


def simplex_bland(
    c: np.ndarray,
    A: np.ndarray,
    b: np.ndarray,
    basis,
    max_iter: int = 200000,
    tol: float = 1e-11,
) -> LPResult:
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    basis = list(basis)
    if len(basis) != m or len(set(basis)) != m:
        raise SolverError(f"initial basis must list {m} distinct columns")
    rc_tol = tol * max(1.0, float(np.max(np.abs(c))) if n else 1.0)
    for it in range(max_iter):
        B = A[:, basis]
        try:
            xB = np.linalg.solve(B, b)
            pi = np.linalg.solve(B.T, c[basis])
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"singular basis at iteration {it}") from exc
        rc = c - pi @ A
        rc[basis] = 0.0
        improving = np.flatnonzero(rc > rc_tol)
        if improving.size == 0:
            x = np.zeros(n)
            x[basis] = np.maximum(xB, 0.0)
            value = float(c[basis] @ x[basis])
            return LPResult(x, value, tuple(basis), it)
        e = int(improving[0])  # Bland: lowest index enters
        d = np.linalg.solve(B, A[:, e])
        pos = d > tol
        if not np.any(pos):
            raise SolverError(f"LP is unbounded along column {e}")
        ratios = np.full(m, np.inf)
        ratios[pos] = np.maximum(xB[pos], 0.0) / d[pos]
        rmin = ratios.min()
        ties = np.flatnonzero(ratios <= rmin + 1e-14 * max(1.0, rmin))
        leave = min(ties, key=lambda k: basis[k])  # Bland: lowest index leaves
        basis[leave] = e
    raise SolverError(
        f"simplex iteration cap reached ({max_iter} iterations, {n} columns, {m} rows)"
    )

"""Derivative-free scalar and box-constrained search used by the solver."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(fun: Callable[[float], float], lo: float, hi: float, tol: float = 1e-10, max_iter: int = 200):
    """Minimize a unimodal ``fun`` on [lo, hi]; returns (argmin, min value).

    The endpoints are evaluated too, so a minimum sitting on the boundary is
    returned exactly.
    """
    a, b = float(lo), float(hi)
    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(max_iter):
        if b - a <= tol * max(1.0, abs(a) + abs(b)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INVPHI * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + INVPHI * (b - a)
            fd = fun(d)
    best = min([(fc, c), (fd, d), (fun(lo), float(lo)), (fun(hi), float(hi))])
    return best[1], best[0]


def compass_maximize(
    fun: Callable[[np.ndarray, np.ndarray], np.ndarray],
    x0: np.ndarray,
    project: Callable[[np.ndarray, np.ndarray], np.ndarray],
    step0,
    min_step: float = 1e-7,
    max_iter: int = 2000,
    f0: np.ndarray = None,
):
    """Run S independent compass (coordinate pattern) searches in lock step.

    ``x0`` has shape (S, n). ``fun(points, idx)`` receives candidates of shape
    (k, K, n) for the searches ``idx`` and returns values (k, K); NaN or -inf
    marks an infeasible candidate. ``project(points, idx)`` maps candidates
    back into the feasible set. Each search polls the 2n axis moves, takes the
    best strict improvement, and halves its step when none exists, stopping
    once the step falls below ``min_step``. Searches never interact, so a
    search's trajectory does not depend on which others run beside it.
    """
    x = np.array(x0, dtype=float)
    S, n = x.shape
    idx_all = np.arange(S)
    val = fun(x[:, None, :], idx_all)[:, 0] if f0 is None else np.array(f0, dtype=float)
    val = np.where(np.isfinite(val), val, -np.inf)
    step = np.broadcast_to(np.asarray(step0, dtype=float), (S,)).copy()
    moves = np.concatenate([np.eye(n), -np.eye(n)])
    for _ in range(max_iter):
        active = np.flatnonzero(step >= min_step)
        if active.size == 0:
            break
        cand = x[active, None, :] + step[active, None, None] * moves[None, :, :]
        cand = project(cand, active)
        cv = fun(cand, active)
        cv = np.where(np.isfinite(cv), cv, -np.inf)
        k = np.argmax(cv, axis=1)
        best = cv[np.arange(active.size), k]
        cur = val[active]
        slack = np.where(np.isfinite(cur), 1e-15 * np.maximum(1.0, np.abs(cur)), 0.0)
        gain = best > cur + slack
        mover = active[gain]
        x[mover] = cand[np.flatnonzero(gain), k[gain]]
        val[mover] = best[gain]
        step[active[~gain]] *= 0.5
    return x, val

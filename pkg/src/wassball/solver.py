"""Primal solver over (N+1)-atom measures with one split reference atom, and a dual upper bound.

A candidate keeps every reference atom y_i on a single destination x_i,
except atom j whose mass is split between x_j (mass alpha_j - beta) and an
extra location x_{N+1} (mass beta). The primal search runs independent
restarts of cyclic coordinate ascent over these candidates. Restart 0 is
seeded from the Lagrangian relaxation (per-atom maximizers of
f(x) - lam d^p(x, y_i) combined by a small column LP); the others start
from random perturbations of the reference.

The dual bound is min over lam >= 0 of
lam r^p + sum_i alpha_i sup_{x in box} [f(x) - lam d^p(x, y_i)],
with the inner sup taken over a dense grid and refined by compass search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .ball import contains
from .core import DiscreteMeasure, ProblemInstance
from .errors import DomainError, InputError
from .expr import ObjectiveFn, evaluate
from .lp import simplex_bland
from .oracle import GridSpec
from .search import compass_maximize, golden_section

DEFAULT_RESTARTS = 64
DEFAULT_GRID = 65
DEFAULT_REFINEMENTS = 4
FINE_GRID_CAP = 40000
MIN_STEP = 1e-7
MAX_SWEEPS = 50


@dataclass(frozen=True)
class StructuralCandidate:
    """Reference weights/atoms plus destinations; ``split_index`` is 0-based."""

    alpha: np.ndarray
    anchors: np.ndarray  # y_1..y_N
    split_index: int
    locations: np.ndarray  # x_1..x_{N+1}, shape (N+1, n)
    split_mass: float

    def __post_init__(self):
        N = self.alpha.size
        if self.locations.shape != (N + 1, self.anchors.shape[1]):
            raise InputError(f"expected {N + 1} locations of dimension {self.anchors.shape[1]}")
        if not 0 <= self.split_index < N:
            raise InputError(f"split index {self.split_index} out of range")
        aj = float(self.alpha[self.split_index])
        if not -1e-15 <= self.split_mass <= aj + 1e-15:
            raise InputError(f"split mass {self.split_mass} outside [0, {aj}]")

    @property
    def slot_weights(self) -> np.ndarray:
        j = self.split_index
        w = np.append(np.array(self.alpha, dtype=float), self.split_mass)
        w[j] = self.alpha[j] - self.split_mass
        return w

    @property
    def slot_anchors(self) -> np.ndarray:
        return np.vstack([self.anchors, self.anchors[self.split_index][None, :]])

    def budget(self, metric) -> float:
        return float(np.dot(self.slot_weights, metric.cost(self.locations, self.slot_anchors)))

    def measure(self) -> DiscreteMeasure:
        w = np.maximum(self.slot_weights, 0.0)
        return DiscreteMeasure.build(self.locations, w, renormalize=True).merged(drop_zero=True)


def objective_of(cand: StructuralCandidate, f: ObjectiveFn) -> float:
    """sum_{i != j} alpha_i f(x_i) + (alpha_j - beta) f(x_j) + beta f(x_{N+1})."""
    total = 0.0
    for w, x in zip(cand.slot_weights, cand.locations):
        if w != 0:
            total += w * evaluate(f, x)
    return float(total)


@dataclass(frozen=True)
class SolveReport:
    primal_value: float
    primal_measure: DiscreteMeasure
    dual_value: float
    gap: float
    budget_used: float
    restarts: int
    converged: bool
    candidate: StructuralCandidate = field(repr=False)
    seed: int = 0

    def with_dual(self, dual_value: float) -> "SolveReport":
        return replace(self, dual_value=float(dual_value), gap=float(dual_value - self.primal_value))

    def to_dict(self) -> dict:
        c = self.candidate
        return {
            "primal_value": self.primal_value,
            "dual_value": self.dual_value,
            "gap": self.gap,
            "budget_used": self.budget_used,
            "restarts": self.restarts,
            "converged": self.converged,
            "seed": self.seed,
            "primal_measure": self.primal_measure.to_dict(),
            "candidate": {
                "split_index": c.split_index + 1,
                "split_mass": c.split_mass,
                "locations": c.locations.tolist(),
            },
        }


# --- Lagrangian relaxation ---------------------------------------------------


def _fine_counts(inst: ProblemInstance) -> tuple:
    g = int(inst.settings.get("grid", DEFAULT_GRID))
    fine = 2 * (g - 1) + 1
    cap = int(math.floor(FINE_GRID_CAP ** (1.0 / inst.dim) + 1e-9))
    return (max(2, min(fine, cap)),) * inst.dim


class _Lagrangian:
    """g(lam) = lam r^p + sum_i alpha_i sup_x [f(x) - lam d^p(x, y_i)] on grid and refined."""

    def __init__(self, inst: ProblemInstance, seed: int = 0, starts: int = 4, random_starts: int = 2):
        self.inst = inst
        grid = GridSpec(_fine_counts(inst))
        Z = grid.points(inst)
        F = inst.objective.batch(Z)
        ok = np.isfinite(F)
        if not np.any(ok):
            raise DomainError("objective is undefined on the whole search grid")
        self.Z, self.F = Z[ok], F[ok]
        self.Y = np.asarray(inst.reference.atoms)
        self.alpha = np.asarray(inst.reference.weights)
        self.D = inst.metric.pairwise_cost(self.Z, self.Y)  # (K, N)
        self.spacing = float(np.max(inst.search_box.width / (np.array(grid.counts) - 1)))
        self.starts = starts
        rng = np.random.default_rng([seed, 7919])
        box = inst.search_box
        self.random_pts = box.lo + box.width * rng.random((random_starts * self.Y.shape[0], inst.dim))

    def grid_value(self, lam: float) -> float:
        inner = np.max(self.F[:, None] - lam * self.D, axis=0)
        return lam * self.inst.budget + float(self.alpha @ inner)

    def grid_subgradient(self, lam: float) -> float:
        k = np.argmax(self.F[:, None] - lam * self.D, axis=0)
        return self.inst.budget - float(self.alpha @ self.D[k, np.arange(self.Y.shape[0])])

    def refine(self, lam: float):
        """Inner sups by compass search from the best grid points; returns (g, maximizers (N, n))."""
        inst = self.inst
        N = self.Y.shape[0]
        vals = self.F[:, None] - lam * self.D
        k = min(self.starts, vals.shape[0])
        top = np.argsort(-vals, axis=0, kind="stable")[:k]  # (k, N)
        owner = np.concatenate([np.repeat(np.arange(N), k), np.arange(self.random_pts.shape[0]) % N])
        x0 = np.vstack([self.Z[top.T.reshape(-1)], self.random_pts])
        f, metric, box = inst.objective, inst.metric, inst.search_box

        def fun(P, idx):
            return f.batch(P) - lam * metric.cost(P, self.Y[owner[idx]][:, None, :])

        def project(P, idx):
            return box.clip(P)

        x, v = compass_maximize(fun, x0, project, self.spacing, MIN_STEP)
        best_x = np.empty((N, inst.dim))
        best_v = np.full(N, -np.inf)
        for s in range(x.shape[0]):
            i = owner[s]
            if v[s] > best_v[i]:
                best_v[i], best_x[i] = v[s], x[s]
        grid_best = vals.max(axis=0)
        best_v = np.maximum(best_v, grid_best)
        return lam * inst.budget + float(self.alpha @ best_v), best_x

    def bracket(self):
        if self.grid_subgradient(0.0) >= 0:
            return 0.0, 0.0
        hi = 1.0
        for _ in range(200):
            if self.grid_subgradient(hi) >= 0:
                break
            hi *= 2.0
        lo = 0.0 if hi == 1.0 else hi / 2.0
        return lo, hi

    def add_points(self, X: np.ndarray) -> None:
        """Grow the pooled model with extra candidate points (e.g. refined maximizers)."""
        F = self.inst.objective.batch(X)
        ok = np.isfinite(F)
        if np.any(ok):
            X = X[ok]
            self.Z = np.vstack([self.Z, X])
            self.F = np.concatenate([self.F, F[ok]])
            self.D = np.vstack([self.D, self.inst.metric.pairwise_cost(X, self.Y)])

    def pooled_argmin(self) -> float:
        lo, hi = self.bracket()
        return lo if hi == lo else golden_section(self.grid_value, lo, hi, tol=1e-12)[0]

    def minimize(self, refinements: int):
        """Cutting-plane loop on lam.

        Golden section runs on the pooled model (grid plus every refined
        maximizer found so far), which is cheap; the inner sups are then
        refined by compass search at that lam and the maximizers join the
        pool. Every refined evaluation is an upper bound, so the smallest one
        is returned as (lam, value, maximizers).
        """
        best = {}
        lam = self.pooled_argmin()
        for _ in range(max(0, refinements) + 2):
            if lam not in best:
                best[lam] = self.refine(lam)
                self.add_points(best[lam][1])
            nxt = self.pooled_argmin()
            if abs(nxt - lam) <= 1e-9 * max(1.0, lam) and nxt in best:
                break
            lam = nxt
        if lam not in best:
            best[lam] = self.refine(lam)
            self.add_points(best[lam][1])
        t_best = min(best, key=lambda t: (best[t][0], t))
        return t_best, best[t_best][0], best[t_best][1]


def _minimize_dual(inst: ProblemInstance, refinements: int, seed: int):
    model = _Lagrangian(inst, seed)
    lam, value, _ = model.minimize(refinements)
    return model, lam, float(value)


def dual_bound(inst: ProblemInstance, lambda_grid_refinements: int = DEFAULT_REFINEMENTS, seed: int = 0) -> float:
    """Upper bound on the optimum over measures supported in the search box."""
    return _minimize_dual(inst, lambda_grid_refinements, seed)[2]


# --- primal search -------------------------------------------------------------


def _lagrangian_start(model: _Lagrangian, lam: float):
    """Combine per-atom Lagrangian maximizers near the dual minimizer by a column LP."""
    inst = model.inst
    pts = [model.Y]
    for t in (lam, lam * (1 - 1e-3), lam * (1 + 1e-3), lam * (1 - 1e-6), lam * (1 + 1e-6), lam + 1e-9):
        k = np.argmax(model.F[:, None] - max(t, 0.0) * model.D, axis=0)
        pts.append(model.Z[k])
    P = np.unique(np.vstack(pts), axis=0)
    f, metric = inst.objective, inst.metric
    FP = f.batch(P)
    ok = np.isfinite(FP)
    P, FP = P[ok], FP[ok]
    N, K = model.Y.shape[0], P.shape[0]
    D = metric.pairwise_cost(P, model.Y)
    c = np.concatenate([np.repeat(FP, N), [0.0]])
    A = np.zeros((N + 1, K * N + 1))
    cols = np.arange(K * N)
    A[cols % N, cols] = 1.0
    A[N, :-1] = D.reshape(-1)
    A[N, -1] = 1.0
    b = np.concatenate([model.alpha, [inst.budget]])
    ident = [int(np.flatnonzero(np.all(P == y, axis=1))[0]) * N + i for i, y in enumerate(model.Y)]
    x = simplex_bland(c, A, b, ident + [K * N]).x[:-1].reshape(K, N)
    locs = np.vstack([model.Y, model.Y[:1]]).astype(float)
    j, beta = 0, 0.0
    for i in range(N):
        live = np.flatnonzero(x[:, i] > 0)
        if live.size == 0:
            continue
        live = live[np.argsort(-x[live, i], kind="stable")]
        locs[i] = P[live[0]]
        if live.size > 1:
            j, beta = i, float(min(x[live[1], i], model.alpha[i]))
            locs[N] = P[live[1]]
    if beta == 0.0:
        locs[N] = locs[0]
    return locs, j, beta


def _random_start(inst: ProblemInstance, rng: np.random.Generator, j: int):
    Y = np.asarray(inst.reference.atoms)
    N, n = Y.shape
    metric, box, r = inst.metric, inst.search_box, inst.radius
    anchors = np.vstack([Y, Y[j][None, :]])
    u = rng.standard_normal((N + 1, n))
    nrm = metric.norm(u)
    u = np.where(nrm[:, None] > 0, u / np.where(nrm > 0, nrm, 1.0)[:, None], 0.0)
    x = box.clip(anchors + u * (2.0 * r * rng.random(N + 1))[:, None])
    beta = float(rng.uniform(0.0, inst.reference.weights[j]))
    w = np.append(np.array(inst.reference.weights, dtype=float), beta)
    w[j] -= beta
    B = float(np.dot(w, metric.cost(x, anchors)))
    if B > inst.budget:
        # pull every atom toward its anchor; the budget scales like t^p
        t = (0.999 * inst.budget / B) ** (1.0 / metric.p)
        x = anchors + t * (x - anchors)
    return x, beta


class _Ascent:
    """Cyclic coordinate ascent on T candidates at once; each row evolves independently."""

    def __init__(self, inst: ProblemInstance, X, beta, split):
        self.inst = inst
        self.alpha = np.asarray(inst.reference.weights, dtype=float)
        self.Y = np.asarray(inst.reference.atoms, dtype=float)
        self.X = np.array(X, dtype=float)  # (T, N+1, n)
        self.beta = np.array(beta, dtype=float)
        self.split = np.array(split, dtype=int)
        T, S, _ = self.X.shape
        self.rows = np.arange(T)
        self.anchors = np.concatenate([np.broadcast_to(self.Y, (T,) + self.Y.shape), self.Y[self.split][:, None, :]], axis=1)
        self.step0 = 0.1 * float(np.max(inst.search_box.width))

    def weights(self) -> np.ndarray:
        T = self.X.shape[0]
        W = np.concatenate([np.broadcast_to(self.alpha, (T, self.alpha.size)), self.beta[:, None]], axis=1).copy()
        W[self.rows, self.split] -= self.beta
        return W

    def fvals(self) -> np.ndarray:
        return self.inst.objective.batch(self.X)

    def costs(self) -> np.ndarray:
        return self.inst.metric.cost(self.X, self.anchors)

    def value(self) -> np.ndarray:
        W = self.weights()
        Fv = self.fvals()
        terms = np.where(W != 0, W * Fv, 0.0)
        v = np.sum(terms, axis=1)
        bad = np.any((W != 0) & ~np.isfinite(Fv), axis=1)
        return np.where(bad, -np.inf, v)

    def budget(self) -> np.ndarray:
        return np.sum(self.weights() * self.costs(), axis=1)

    def sweep_slot(self, s: int, live: np.ndarray) -> None:
        inst, metric, box = self.inst, self.inst.metric, self.inst.search_box
        W = self.weights()
        C = self.costs()
        others = np.sum(W * C, axis=1) - W[:, s] * C[:, s]
        rem = np.maximum(inst.budget - others, 0.0)
        w_eff = np.where(W[:, s] > 0, W[:, s], self.alpha[self.split])
        cap = (rem / w_eff) ** (1.0 / metric.p)
        anchor = self.anchors[:, s, :]
        f = inst.objective

        def fun(P, idx):
            return f.batch(P)

        def project(P, idx):
            P = box.clip(P)
            a = anchor[live[idx]][:, None, :]
            d = metric.dist(P, a)
            lim = cap[live[idx]][:, None]
            scale = np.where(d > lim, lim / np.where(d > 0, d, 1.0), 1.0)
            return a + (P - a) * scale[..., None]

        x, _ = compass_maximize(fun, self.X[live, s, :], project, self.step0, MIN_STEP)
        self.X[live, s, :] = x

    def _retract(self, x, anchor, rem, w):
        """Pull x radially toward anchor so that w d^p(x, anchor) <= rem."""
        metric = self.inst.metric
        with np.errstate(all="ignore"):
            cap = np.where(rem >= 0, (np.maximum(rem, 0.0) / w) ** (1.0 / metric.p), np.nan)
        d = metric.dist(x, anchor)
        scale = np.where(d > cap, cap / np.where(d > 0, d, 1.0), 1.0)
        return anchor + (x - anchor) * scale[:, None]

    def line_search_beta(self, live: np.ndarray) -> None:
        """Exact search over beta plus two merge moves.

        With locations fixed, objective and budget are affine in beta, so the
        endpoints and the budget-binding value cover the line. The merge moves
        set beta to 0 (or alpha_j) while pulling the surviving location back
        inside the budget, a joint step plain coordinate ascent cannot take.
        """
        inst, metric, f = self.inst, self.inst.metric, self.inst.objective
        T = self.X.shape[0]
        N = self.alpha.size
        r, j = self.rows, self.split
        aj = self.alpha[j]
        yj = self.Y[j]
        C = self.costs()
        Fv = self.fvals()
        mask = np.ones((T, N + 1), dtype=bool)
        mask[r, j] = False
        mask[:, N] = False
        W = np.where(mask, np.broadcast_to(np.append(self.alpha, 0.0), (T, N + 1)), 0.0)
        B_rest = np.sum(W * C, axis=1)
        O_rest = np.sum(np.where(W != 0, W * Fv, 0.0), axis=1)
        xj, xe = self.X[r, j], self.X[r, N]
        room = inst.budget - B_rest
        xj_m = self._retract(xj, yj, room, aj)
        xe_m = self._retract(xe, yj, room, aj)
        cj, ce = C[r, j], C[r, N]
        dc = ce - cj
        with np.errstate(all="ignore"):
            bind = np.where(dc != 0, (room - aj * cj) / np.where(dc != 0, dc, 1.0), 0.0)
        beta = np.stack([self.beta, np.zeros(T), aj, np.clip(bind, 0.0, aj), np.zeros(T), aj], axis=1)
        XJ = np.stack([xj, xj, xj, xj, xj_m, xj], axis=1)
        XE = np.stack([xe, xe, xe, xe, xe, xe_m], axis=1)
        FJ, FE = f.batch(XJ), f.batch(XE)
        CJ, CE = metric.cost(XJ, yj[:, None, :]), metric.cost(XE, yj[:, None, :])
        wj, we = aj[:, None] - beta, beta
        with np.errstate(invalid="ignore"):
            obj = O_rest[:, None] + np.where(wj != 0, wj * FJ, 0.0) + np.where(we != 0, we * FE, 0.0)
            bud = B_rest[:, None] + wj * CJ + we * CE
        ok = np.isfinite(obj) & np.isfinite(bud) & (bud <= inst.budget * (1 + 1e-12))
        ok[:, 0] = True
        obj = np.where(ok, obj, -np.inf)
        obj[:, 0] = np.where(np.isfinite(obj[:, 0]), obj[:, 0], -np.inf)
        # highest objective, then smaller budget, then keep the current state
        pick = np.zeros(T, dtype=int)
        for k in range(1, beta.shape[1]):
            cur_o, cur_b = obj[r, pick], bud[r, pick]
            better = (obj[:, k] > cur_o) | ((obj[:, k] == cur_o) & (bud[:, k] < cur_b))
            pick = np.where(better, k, pick)
        self.beta[live] = beta[live, pick[live]]
        self.X[live, j[live]] = XJ[live, pick[live]]
        self.X[live, N] = XE[live, pick[live]]

    def run(self, max_sweeps: int = MAX_SWEEPS):
        T = self.X.shape[0]
        N = self.alpha.size
        val = self.value()
        done = ~np.isfinite(val)
        converged = np.zeros(T, dtype=bool)
        for _ in range(max_sweeps):
            live = np.flatnonzero(~done)
            if live.size == 0:
                break
            for s in range(N + 1):
                self.sweep_slot(s, live)
            self.line_search_beta(live)
            new = self.value()
            small = new[live] <= val[live] + 1e-12 * np.maximum(1.0, np.abs(val[live]))
            val = np.where(np.isin(np.arange(T), live), np.maximum(new, val), val)
            converged[live[small]] = True
            done[live[small]] = True
        return val, converged


def solve_primal(
    inst: ProblemInstance,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    lambda_grid_refinements: int = DEFAULT_REFINEMENTS,
    *,
    _dual=None,
) -> SolveReport:
    """Multi-start search over split-atom candidates; the dual fields are left as NaN."""
    if restarts < 1:
        raise InputError("restarts must be >= 1")
    nu = inst.reference
    N = nu.size
    starts_X, starts_beta, starts_j = [], [], []
    try:
        model, lam, _ = _dual if _dual is not None else _minimize_dual(inst, lambda_grid_refinements, seed)
        X0, j0, b0 = _lagrangian_start(model, lam)
    except DomainError:
        X0, j0, b0 = np.vstack([nu.atoms, nu.atoms[:1]]), 0, 0.0
    starts_X.append(X0)
    starts_beta.append(b0)
    starts_j.append(j0)
    for t in range(1, restarts):
        rng = np.random.default_rng([seed, t])
        j = (t - 1) % N
        X, beta = _random_start(inst, rng, j)
        starts_X.append(X)
        starts_beta.append(beta)
        starts_j.append(j)
    asc = _Ascent(inst, np.array(starts_X), starts_beta, starts_j)
    _, converged = asc.run()

    best = None
    for t in range(restarts):
        cand = StructuralCandidate(
            np.array(nu.weights), np.array(nu.atoms), int(asc.split[t]), asc.X[t].copy(),
            float(min(max(asc.beta[t], 0.0), nu.weights[asc.split[t]])),
        )
        try:
            v = objective_of(cand, inst.objective)
        except DomainError:
            continue
        B = cand.budget(inst.metric)
        key = (-v, B, tuple(cand.measure().atoms.reshape(-1)))
        if best is None or key < best[0]:
            best = (key, t, cand, v, B)
    if best is None:
        raise DomainError("every restart hit an objective domain error")
    _, t, cand, v, B = best
    return SolveReport(
        primal_value=v,
        primal_measure=cand.measure(),
        dual_value=float("nan"),
        gap=float("nan"),
        budget_used=B,
        restarts=restarts,
        converged=bool(converged[t]),
        candidate=cand,
        seed=seed,
    )


def solve(
    inst: ProblemInstance,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    lambda_grid_refinements: int = DEFAULT_REFINEMENTS,
) -> SolveReport:
    """Primal search plus dual bound, with the gap filled in."""
    dual = _minimize_dual(inst, lambda_grid_refinements, seed)
    report = solve_primal(inst, restarts, seed, lambda_grid_refinements, _dual=dual)
    return report.with_dual(dual[2])


def certify(
    inst: ProblemInstance,
    report: SolveReport,
    gap_tol: float = 1e-4,
    relative: bool = True,
    member_tol: float = 1e-7,
) -> bool:
    """Gap within tolerance, measure inside the ball, and at most N + 1 atoms."""
    if report.primal_measure.size > inst.reference.size + 1:
        return False
    if not np.isfinite(report.gap):
        return False
    limit = gap_tol * max(1.0, abs(report.primal_value)) if relative else gap_tol
    if report.gap > limit:
        return False
    return contains(inst.reference, inst.radius, report.primal_measure, inst.metric, member_tol).inside

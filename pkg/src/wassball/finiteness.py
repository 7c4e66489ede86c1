"""Growth-condition certificates and the explicit divergent sequence of in-ball measures."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import DiscreteMeasure, ProblemInstance, as_point
from .errors import DiagnosticError, DomainError, InputError
from .expr import evaluate, growth_ratio
from .transport import wasserstein

BOUNDED = "bounded-evidence"
DIVERGENT = "divergence-evidence"
INCONCLUSIVE = "inconclusive"

DEFAULT_RADII = tuple(float(v) for v in np.logspace(0.0, 3.0, 13))
TREND_FACTOR = 1.1  # per-decade growth separating "plateau" from "growing"


@dataclass(frozen=True)
class GrowthCertificate:
    p_probe: float
    x0: np.ndarray
    c_estimate: float
    verdict: str
    shell_data: tuple  # ((radius, ratio), ...)

    def to_dict(self) -> dict:
        return {
            "p_probe": self.p_probe,
            "x0": np.asarray(self.x0).tolist(),
            "c_estimate": self.c_estimate,
            "verdict": self.verdict,
            "shell_data": [list(t) for t in self.shell_data],
        }


@dataclass(frozen=True)
class DivergenceWitness:
    k: int
    y_k: np.ndarray
    eps_k: float
    measure_k: DiscreteMeasure
    objective_k: float
    w_check: float

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "y_k": np.asarray(self.y_k).tolist(),
            "eps_k": self.eps_k,
            "objective_k": self.objective_k,
            "w_check": self.w_check,
            "measure_k": self.measure_k.to_dict(),
        }


def classify_trend(shell_data: Sequence) -> str:
    """Trend rule over the last half of the shells.

    Ratios are compared on a per-decade scale, both across the whole tail and
    over its final step: growth of at least 10% per decade on both counts, or
    a value that overflowed to +inf, is divergence evidence, growth below 10% on both counts (including decrease)
    is bounded evidence, and disagreement or mixed signs are inconclusive.
    """
    data = list(shell_data)
    if len(data) < 2:
        return INCONCLUSIVE
    tail = data[len(data) - max(2, math.ceil(len(data) / 2)):]
    R = np.array([t[0] for t in tail])
    v = np.array([t[1] for t in tail])
    if np.any(v == np.inf):
        return DIVERGENT
    if not np.all(np.isfinite(v)):
        return INCONCLUSIVE
    if np.all(v <= 0):
        return BOUNDED
    if np.any(v <= 0):
        return INCONCLUSIVE

    def per_decade(i, j):
        return (v[j] / v[i]) ** (1.0 / math.log10(R[j] / R[i]))

    overall = per_decade(0, len(v) - 1)
    last = per_decade(len(v) - 2, len(v) - 1)
    if overall >= TREND_FACTOR and last >= TREND_FACTOR:
        return DIVERGENT
    if overall < TREND_FACTOR and last < TREND_FACTOR:
        return BOUNDED
    return INCONCLUSIVE


def certify_growth(
    inst: ProblemInstance,
    p_probe: float,
    radii: Optional[Sequence[float]] = None,
    seed: int = 0,
    samples_per_shell: int = 256,
    x0=None,
) -> GrowthCertificate:
    """Heuristic check of f(x) <= c (1 + d^p_probe(x, x0)) on sampled shells.

    Probing at p_probe = p speaks to finiteness of the optimal value; probing
    slightly below p speaks to attainment.
    """
    if not p_probe > 0:
        raise InputError(f"p_probe must be positive, got {p_probe}")
    radii = DEFAULT_RADII if radii is None else tuple(float(R) for R in radii)
    if len(radii) < 2 or radii[-1] < 10 * radii[0]:
        raise InputError("probe radii must span at least one decade")
    x0 = inst.reference.barycenter() if x0 is None else as_point(x0, inst.dim)
    try:
        data = growth_ratio(inst.objective, x0, p_probe, radii, inst.metric, samples_per_shell, seed)
    except (DiagnosticError, DomainError):
        return GrowthCertificate(float(p_probe), x0, float("nan"), INCONCLUSIVE, ())
    c = max(0.0, max(ratio for _, ratio in data))
    return GrowthCertificate(float(p_probe), x0, c, classify_trend(data), tuple(data))


def escape_mass(alpha_1: float, r: float, p: float, dist_p: float) -> float:
    """eps = min(alpha_1, r^p / 2^p) / (1 + d^p(y^k, y_1))."""
    return min(alpha_1, r**p / 2.0**p) / (1.0 + dist_p)


def build_divergence_sequence(inst: ProblemInstance, escape_direction, K: int) -> list:
    """Measures mu^k = eps_k delta(y^k) + (alpha_1 - eps_k) delta(y_1) + sum_{i>=2} alpha_i delta(y_i).

    The escaping atom follows y^k = y_1 + 2^k u with u the unit vector (in the
    ground metric) along ``escape_direction``, so d(y^k, y_1) = 2^k. Every
    witness carries W_p(mu^k, nu) computed by the exact transport LP.
    """
    if K < 1:
        raise InputError("K must be >= 1")
    nu, m, r = inst.reference, inst.metric, inst.radius
    u = as_point(escape_direction, inst.dim)
    un = float(m.norm(u))
    if un == 0:
        raise InputError("escape direction must be nonzero")
    u = u / un
    y1, a1 = nu.atoms[0], float(nu.weights[0])
    out = []
    for k in range(1, K + 1):
        yk = y1 + 2.0**k * u
        dp = float(m.cost(yk, y1))
        eps = escape_mass(a1, r, m.p, dp)
        atoms = np.vstack([yk[None, :], nu.atoms])
        weights = np.concatenate([[eps, a1 - eps], nu.weights[1:]])
        mu_k = DiscreteMeasure(atoms, weights)
        objective = float(sum(w * evaluate(inst.objective, x) for x, w in zip(atoms, weights)))
        out.append(DivergenceWitness(k, yk, eps, mu_k, objective, wasserstein(mu_k, nu, m)))
    return out

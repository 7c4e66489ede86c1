"""Wasserstein-ball membership, uniform moment bound and tail-mass (tightness) bound."""

from __future__ import annotations

from typing import NamedTuple, Optional

import numpy as np

from .core import DiscreteMeasure, MetricSpec, as_point, pth_moment
from .errors import InputError
from .transport import wasserstein


class Membership(NamedTuple):
    inside: bool
    margin: float  # r - W_p(mu, nu)


class BallCertificate(NamedTuple):
    radius: float
    reference_moment: float
    moment_bound: float
    base_point: np.ndarray
    p: float


class TailBound(NamedTuple):
    threshold_radius: float
    tail_mass: float


def contains(nu: DiscreteMeasure, r: float, mu: DiscreteMeasure, m: MetricSpec, tol: float = 0.0) -> Membership:
    """Is ``mu`` in the closed ball of radius ``r`` around ``nu``, up to ``tol``?"""
    if not r > 0:
        raise InputError(f"radius must be positive, got {r}")
    if tol < 0:
        raise InputError("tol must be nonnegative")
    w = wasserstein(mu, nu, m)
    return Membership(bool(w <= r + tol), float(r - w))


def moment_certificate(nu: DiscreteMeasure, r: float, m: MetricSpec, x0=None) -> BallCertificate:
    """Uniform p-th moment bound (M^(1/p) + r)^p for every member of the ball.

    M is the p-th moment of ``nu`` about ``x0`` (default: its barycenter). The
    bound follows from W_p(mu, delta_x0) <= W_p(nu, delta_x0) + W_p(mu, nu).
    """
    if not r > 0:
        raise InputError(f"radius must be positive, got {r}")
    x0 = nu.barycenter() if x0 is None else as_point(x0, nu.dim)
    M = pth_moment(nu, x0, m)
    bound = (M ** (1.0 / m.p) + r) ** m.p
    return BallCertificate(float(r), M, float(bound), x0, m.p)


def tail_mass_bound(mu: DiscreteMeasure, x0, m: MetricSpec, cert: BallCertificate, eps: float) -> TailBound:
    """Markov/Jensen tail check: mass of ``mu`` beyond C/eps from x0, C = bound^(1/p).

    For every member of the ball the returned tail mass is at most ``eps``.
    """
    if not 0 < eps < 1:
        raise InputError(f"eps must lie in (0, 1), got {eps}")
    x0 = as_point(x0, mu.dim)
    threshold = cert.moment_bound ** (1.0 / m.p) / eps
    d = m.dist(mu.atoms, x0)
    return TailBound(float(threshold), float(np.sum(mu.weights[d > threshold])))


def random_member(
    nu: DiscreteMeasure,
    r: float,
    m: MetricSpec,
    rng: np.random.Generator,
    max_split: int = 3,
    fill: Optional[float] = None,
) -> DiscreteMeasure:
    """Draw a measure inside B_r(nu) by splitting and displacing the atoms of ``nu``.

    The explicit coupling that moves each piece from its parent atom costs
    ``fill * r^p`` (``fill`` uniform in (0, 1] unless given), which bounds
    W_p^p from above. Displacement lengths are heavy tailed so some members
    put a little mass far away.
    """
    pieces, weights, costs = [], [], []
    for y, a in zip(nu.atoms, nu.weights):
        k = int(rng.integers(1, max_split + 1))
        share = rng.dirichlet(np.ones(k)) * a
        u = rng.standard_normal((k, nu.dim))
        nrm = m.norm(u)
        u = np.where(nrm[:, None] > 0, u / np.where(nrm > 0, nrm, 1.0)[:, None], 0.0)
        length = rng.pareto(1.5, size=k) + rng.random(k)
        pieces.append((y, u * length[:, None]))
        weights.append(share)
        costs.append(share * length ** m.p)
    total = float(np.sum(np.concatenate(costs)))
    fill = rng.uniform(1e-3, 1.0) if fill is None else fill
    scale = (fill * r ** m.p / total) ** (1.0 / m.p) if total > 0 else 0.0
    atoms = np.concatenate([y + scale * disp for y, disp in pieces])
    w = np.concatenate(weights)
    w = w / w.sum()
    return DiscreteMeasure(atoms, w).merged()

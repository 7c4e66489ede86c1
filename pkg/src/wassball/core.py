"""Ground-space primitives: points, norm metrics, discrete measures, problem instances."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np

from .errors import InputError

if TYPE_CHECKING:  # pragma: no cover
    from .expr import ObjectiveFn

WEIGHT_SUM_TOL = 1e-12
DEDUP_TOL = 1e-12

METRIC_KINDS = ("euclidean", "qnorm", "weighted")


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def as_point(coords, dim: Optional[int] = None) -> np.ndarray:
    """Validate ``coords`` as a finite 1-d float vector and return a read-only copy."""
    x = np.atleast_1d(np.array(coords, dtype=float))
    if x.ndim != 1 or x.size == 0:
        raise InputError(f"point must be a nonempty 1-d sequence, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InputError("point coordinates must be finite")
    if dim is not None and x.size != dim:
        raise InputError(f"dimension mismatch: expected {dim}, got {x.size}")
    return _frozen(x)


@dataclass(frozen=True)
class MetricSpec:
    """A norm-induced ground metric on R^n together with the transport power ``p``.

    ``kind`` is one of ``euclidean``, ``qnorm`` (uses ``q``) or ``weighted``
    (weighted Euclidean, uses ``weights``).
    """

    kind: str = "euclidean"
    p: float = 1.0
    q: float = 2.0
    weights: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in METRIC_KINDS:
            raise InputError(f"unknown metric kind {self.kind!r}; expected one of {METRIC_KINDS}")
        if not (np.isfinite(self.p) and self.p >= 1):
            raise InputError(f"power p must be >= 1, got {self.p}")
        if self.kind == "qnorm" and not (np.isfinite(self.q) and self.q >= 1):
            raise InputError(f"q-norm needs q >= 1, got {self.q}")
        if self.kind == "weighted":
            if self.weights is None or len(self.weights) == 0:
                raise InputError("weighted metric needs a weight vector")
            w = tuple(float(v) for v in self.weights)
            if not all(np.isfinite(v) and v > 0 for v in w):
                raise InputError("metric weights must be positive and finite")
            object.__setattr__(self, "weights", w)
        elif self.weights is not None:
            raise InputError(f"metric kind {self.kind!r} takes no weights")

    def check_dim(self, dim: int) -> None:
        if self.kind == "weighted" and len(self.weights) != dim:
            raise InputError(f"metric has {len(self.weights)} weights but points have dimension {dim}")

    def norm(self, v: np.ndarray) -> np.ndarray:
        """Norm along the last axis (vectorized)."""
        v = np.asarray(v, dtype=float)
        if self.kind == "euclidean":
            return np.sqrt(np.sum(v * v, axis=-1))
        if self.kind == "weighted":
            w = np.asarray(self.weights)
            return np.sqrt(np.sum(w * v * v, axis=-1))
        a = np.abs(v)
        if self.q == 1:
            return np.sum(a, axis=-1)
        if self.q == 2:
            return np.sqrt(np.sum(a * a, axis=-1))
        # scale by the max entry so large coordinates do not overflow
        m = np.max(a, axis=-1)
        safe = np.where(m > 0, m, 1.0)
        return m * np.sum((a / safe[..., None]) ** self.q, axis=-1) ** (1.0 / self.q)

    def dist(self, a, b) -> np.ndarray:
        return self.norm(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))

    def cost(self, a, b) -> np.ndarray:
        """Transport cost d(a, b)^p, broadcasting over leading axes."""
        d = self.dist(a, b)
        return d if self.p == 1 else d ** self.p

    def pairwise_cost(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """Matrix of d^p(xs[i], ys[j])."""
        return self.cost(xs[:, None, :], ys[None, :, :])


def distance(a, b, m: MetricSpec) -> float:
    """Ground distance between two points."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise InputError(f"dimension mismatch: {a.shape} vs {b.shape}")
    m.check_dim(a.size)
    return float(m.dist(a, b))


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finitely supported probability measure ``sum_i weights[i] * delta(atoms[i])``.

    ``atoms`` has shape (N, n). Arrays are stored read-only so instances can be
    shared freely.
    """

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = np.array(self.atoms, dtype=float)
        if atoms.ndim == 1:
            atoms = atoms[:, None]
        weights = np.array(self.weights, dtype=float).reshape(-1)
        if atoms.ndim != 2 or atoms.shape[0] == 0 or atoms.shape[1] == 0:
            raise InputError(f"atoms must be a nonempty (N, n) array, got shape {atoms.shape}")
        if weights.shape[0] != atoms.shape[0]:
            raise InputError(f"{atoms.shape[0]} atoms but {weights.shape[0]} weights")
        if not np.all(np.isfinite(atoms)):
            raise InputError("atom coordinates must be finite")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise InputError("weights must be finite and nonnegative")
        total = float(np.sum(weights))
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise InputError(f"weights sum to {total!r}, not 1 (tolerance {WEIGHT_SUM_TOL})")
        object.__setattr__(self, "atoms", _frozen(atoms))
        object.__setattr__(self, "weights", _frozen(weights))

    @classmethod
    def build(cls, atoms, weights, renormalize: bool = False, merge: bool = False) -> "DiscreteMeasure":
        """Construct with optional renormalization of weights and merging of coincident atoms."""
        atoms = np.array(atoms, dtype=float)
        if atoms.ndim == 1:
            atoms = atoms[:, None]
        weights = np.array(weights, dtype=float).reshape(-1)
        if renormalize:
            if weights.size == 0 or not np.all(np.isfinite(weights)) or np.any(weights < 0):
                raise InputError("weights must be finite and nonnegative")
            total = weights.sum()
            if total <= 0:
                raise InputError("weights sum to zero")
            weights = weights / total
        mu = cls(atoms, weights)
        return mu.merged() if merge else mu

    @classmethod
    def dirac(cls, x) -> "DiscreteMeasure":
        return cls(np.asarray(x, dtype=float)[None, :], np.ones(1))

    @property
    def size(self) -> int:
        return self.atoms.shape[0]

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    def merged(self, tol: float = DEDUP_TOL, drop_zero: bool = False) -> "DiscreteMeasure":
        """Merge atoms closer than ``tol`` (max-coordinate distance), summing their weights.

        The first atom of each group keeps its position; order of first
        appearance is preserved.
        """
        keep_atoms: list = []
        keep_w: list = []
        for x, w in zip(self.atoms, self.weights):
            if drop_zero and w == 0:
                continue
            for k, z in enumerate(keep_atoms):
                if np.max(np.abs(z - x)) <= tol:
                    keep_w[k] += w
                    break
            else:
                keep_atoms.append(x)
                keep_w.append(float(w))
        if not keep_atoms:
            raise InputError("measure has no atoms with positive weight")
        return DiscreteMeasure(np.array(keep_atoms), np.array(keep_w))

    def barycenter(self) -> np.ndarray:
        return _frozen(self.weights @ self.atoms)

    def to_dict(self) -> dict:
        return {"atoms": self.atoms.tolist(), "weights": self.weights.tolist()}


def pth_moment(mu: DiscreteMeasure, x0, m: MetricSpec) -> float:
    """Sum of w_i * d(atom_i, x0)^p."""
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (mu.dim,):
        raise InputError(f"dimension mismatch: measure has dim {mu.dim}, x0 has shape {x0.shape}")
    m.check_dim(mu.dim)
    return float(np.dot(mu.weights, m.cost(mu.atoms, x0)))


@dataclass(frozen=True)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lo, dtype=float).reshape(-1)
        hi = np.array(self.hi, dtype=float).reshape(-1)
        if lo.shape != hi.shape or lo.size == 0:
            raise InputError("box bounds must be nonempty vectors of equal length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise InputError("box bounds must be finite")
        if np.any(lo >= hi):
            raise InputError("box needs lo < hi in every dimension")
        object.__setattr__(self, "lo", _frozen(lo))
        object.__setattr__(self, "hi", _frozen(hi))

    @property
    def dim(self) -> int:
        return self.lo.size

    @property
    def width(self) -> np.ndarray:
        return self.hi - self.lo

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.minimum(np.maximum(x, self.lo), self.hi)


@dataclass(frozen=True)
class ProblemInstance:
    """Data of the worst-case expectation problem over a Wasserstein ball."""

    reference: DiscreteMeasure
    radius: float
    metric: MetricSpec
    objective: "ObjectiveFn"
    search_box: Box
    settings: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise InputError(f"radius must be positive and finite, got {self.radius}")
        n = self.reference.dim
        self.metric.check_dim(n)
        if self.search_box.dim != n:
            raise InputError(f"search box has dimension {self.search_box.dim}, reference has {n}")
        if self.objective.dim != n:
            raise InputError(f"objective declared for dimension {self.objective.dim}, reference has {n}")
        for y in self.reference.atoms:
            if not self.search_box.contains(y):
                raise InputError(f"reference atom {y.tolist()} lies outside the search box")

    @property
    def dim(self) -> int:
        return self.reference.dim

    @property
    def budget(self) -> float:
        """Transport budget r^p."""
        return float(self.radius ** self.metric.p)

    def with_radius(self, r: float) -> "ProblemInstance":
        return ProblemInstance(self.reference, r, self.metric, self.objective, self.search_box, dict(self.settings))


def check_same_dim(*measures: DiscreteMeasure) -> int:
    dims = {mu.dim for mu in measures}
    if len(dims) != 1:
        raise InputError(f"dimension mismatch between measures: {sorted(dims)}")
    return dims.pop()


def points_array(points: Sequence) -> np.ndarray:
    a = np.array(points, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    return a

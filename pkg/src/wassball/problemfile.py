"""Strict JSON problem files, measure files and the shipped instance collection.

A problem file looks like::

    {
      "format": "wassball-problem/1",
      "name": "optional label",
      "dimension": 1,
      "metric": {"kind": "euclidean", "p": 1},
      "reference": {"atoms": [[0.0]], "weights": [1.0]},
      "radius": 1.0,
      "objective": "x1",
      "search_box": {"lo": [-10], "hi": [10]},
      "solver": {"restarts": 64, "seed": 0, "grid": 65, "gap_tol": 1e-4, "renormalize": false}
    }

Unknown keys anywhere are rejected, as are non-finite numbers.
"""

from __future__ import annotations

import hashlib
import json
import math
from importlib import resources
from typing import Any, Mapping

import numpy as np

from .core import Box, DiscreteMeasure, MetricSpec, ProblemInstance
from .errors import InputError
from .expr import parse

PROBLEM_FORMAT = "wassball-problem/1"
MEASURE_FORMAT = "wassball-measure/1"

SOLVER_DEFAULTS = {"restarts": 64, "seed": 0, "grid": 65, "gap_tol": 1e-4, "renormalize": False}

_TOP_REQUIRED = {"dimension", "metric", "reference", "radius", "objective", "search_box"}
_TOP_OPTIONAL = {"format", "name", "solver"}
_METRIC_KEYS = {"kind", "p", "q", "weights"}


def _reject_constant(name: str):
    raise InputError(f"non-finite number {name} is not allowed")


def loads(text: str) -> Any:
    """json.loads that refuses NaN/Infinity and reports the error position."""
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON at line {exc.lineno} column {exc.colno} (position {exc.pos}): {exc.msg}") from None


def _check_keys(obj: Any, where: str, required: set, optional: set = frozenset()) -> None:
    if not isinstance(obj, Mapping):
        raise InputError(f"{where}: expected an object")
    unknown = set(obj) - required - optional
    if unknown:
        raise InputError(f"{where}: unknown key(s) {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise InputError(f"{where}: missing key(s) {sorted(missing)}")


def _number(v: Any, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise InputError(f"{where}: expected a finite number, got {v!r}")
    return float(v)


def _integer(v: Any, where: str, lo: int = 0) -> int:
    if isinstance(v, bool) or not isinstance(v, int) or v < lo:
        raise InputError(f"{where}: expected an integer >= {lo}, got {v!r}")
    return int(v)


def _vector(v: Any, where: str, n: int) -> list:
    if not isinstance(v, list) or len(v) != n:
        raise InputError(f"{where}: expected a list of {n} numbers")
    return [_number(x, f"{where}[{k}]") for k, x in enumerate(v)]


def _atoms(v: Any, where: str, n: int) -> np.ndarray:
    if not isinstance(v, list) or not v:
        raise InputError(f"{where}: expected a nonempty list of points")
    return np.array([_vector(a, f"{where}[{k}]", n) for k, a in enumerate(v)], dtype=float)


def metric_from_dict(d: Mapping, n: int) -> MetricSpec:
    _check_keys(d, "metric", {"kind", "p"}, _METRIC_KEYS - {"kind", "p"})
    kind = d["kind"]
    if not isinstance(kind, str):
        raise InputError("metric.kind: expected a string")
    if "q" in d and kind != "qnorm":
        raise InputError("metric.q only applies to kind 'qnorm'")
    if "weights" in d and kind != "weighted":
        raise InputError("metric.weights only applies to kind 'weighted'")
    q = _number(d.get("q", 2.0), "metric.q")
    weights = d.get("weights")
    if weights is not None:
        weights = tuple(_vector(weights, "metric.weights", n))
    m = MetricSpec(kind, _number(d["p"], "metric.p"), q, weights)
    m.check_dim(n)
    return m


def metric_to_dict(m: MetricSpec) -> dict:
    out = {"kind": m.kind, "p": m.p}
    if m.kind == "qnorm":
        out["q"] = m.q
    if m.kind == "weighted":
        out["weights"] = list(m.weights)
    return out


def measure_from_dict(d: Mapping, n: int = None, renormalize: bool = False, where: str = "measure") -> DiscreteMeasure:
    _check_keys(d, where, {"atoms", "weights"}, {"format"})
    if "format" in d and d["format"] != MEASURE_FORMAT:
        raise InputError(f"{where}.format: expected {MEASURE_FORMAT!r}")
    if n is None:
        first = d["atoms"][0] if isinstance(d["atoms"], list) and d["atoms"] else None
        if not isinstance(first, list):
            raise InputError(f"{where}.atoms: expected a nonempty list of points")
        n = len(first)
    atoms = _atoms(d["atoms"], f"{where}.atoms", n)
    weights = _vector(d["weights"], f"{where}.weights", atoms.shape[0])
    return DiscreteMeasure.build(atoms, weights, renormalize=renormalize)


def instance_from_dict(d: Mapping) -> ProblemInstance:
    """Validate a decoded problem document and build the instance."""
    _check_keys(d, "problem", _TOP_REQUIRED, _TOP_OPTIONAL)
    if d.get("format", PROBLEM_FORMAT) != PROBLEM_FORMAT:
        raise InputError(f"problem.format: expected {PROBLEM_FORMAT!r}, got {d.get('format')!r}")
    n = _integer(d["dimension"], "dimension", 1)
    settings = dict(SOLVER_DEFAULTS)
    solver = d.get("solver", {})
    _check_keys(solver, "solver", set(), set(SOLVER_DEFAULTS))
    for key in ("restarts", "grid"):
        if key in solver:
            settings[key] = _integer(solver[key], f"solver.{key}", 1 if key == "restarts" else 2)
    if "seed" in solver:
        settings["seed"] = _integer(solver["seed"], "solver.seed", 0)
    if "gap_tol" in solver:
        settings["gap_tol"] = _number(solver["gap_tol"], "solver.gap_tol")
    if "renormalize" in solver:
        if not isinstance(solver["renormalize"], bool):
            raise InputError("solver.renormalize: expected true or false")
        settings["renormalize"] = solver["renormalize"]
    if "name" in d:
        if not isinstance(d["name"], str):
            raise InputError("name: expected a string")
        settings["name"] = d["name"]
    metric = metric_from_dict(d["metric"], n)
    reference = measure_from_dict(d["reference"], n, settings["renormalize"], where="reference")
    _check_keys(d["search_box"], "search_box", {"lo", "hi"})
    box = Box(_vector(d["search_box"]["lo"], "search_box.lo", n), _vector(d["search_box"]["hi"], "search_box.hi", n))
    if not isinstance(d["objective"], str):
        raise InputError("objective: expected an expression string")
    return ProblemInstance(reference, _number(d["radius"], "radius"), metric, parse(d["objective"], n), box, settings)


def instance_to_dict(inst: ProblemInstance) -> dict:
    settings = {k: inst.settings.get(k, v) for k, v in SOLVER_DEFAULTS.items()}
    out = {"format": PROBLEM_FORMAT}
    if "name" in inst.settings:
        out["name"] = inst.settings["name"]
    out.update(
        {
            "dimension": inst.dim,
            "metric": metric_to_dict(inst.metric),
            "reference": inst.reference.to_dict(),
            "radius": inst.radius,
            "objective": inst.objective.source,
            "search_box": {"lo": inst.search_box.lo.tolist(), "hi": inst.search_box.hi.tolist()},
            "solver": settings,
        }
    )
    return out


def digest(doc: Mapping) -> str:
    """sha256 of the canonical JSON encoding."""
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def load_problem(path) -> ProblemInstance:
    with open(path, encoding="utf-8") as fh:
        return instance_from_dict(loads(fh.read()))


def load_measure(path) -> DiscreteMeasure:
    with open(path, encoding="utf-8") as fh:
        return measure_from_dict(loads(fh.read()))


def shipped_instances() -> list:
    """Names of the bundled problem files, sorted."""
    root = resources.files("wassball") / "instances"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_shipped(name: str) -> ProblemInstance:
    root = resources.files("wassball") / "instances"
    res = root / f"{name}.json"
    if not res.is_file():
        raise InputError(f"no shipped instance named {name!r}")
    return instance_from_dict(loads(res.read_text(encoding="utf-8")))

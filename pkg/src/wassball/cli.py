"""Command-line front end.

Exit codes: 0 success or certified, 1 internal failure, 2 input error,
3 likely unbounded, 4 duality gap above tolerance.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import __version__
from .core import DiscreteMeasure, MetricSpec
from .errors import InputError, WassballError
from .finiteness import DIVERGENT, build_divergence_sequence, certify_growth
from .oracle import GridSpec, solve_grid_lp
from .problemfile import (
    digest,
    instance_to_dict,
    load_measure,
    load_problem,
    loads,
    measure_from_dict,
)
from .solver import certify, solve
from .transport import solve_transport

REPORT_FORMAT = "wassball-report/1"

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INPUT = 2
EXIT_UNBOUNDED = 3
EXIT_GAP = 4

ATTAINMENT_FACTOR = 0.9  # second growth probe at 0.9 p


class _Exit(Exception):
    def __init__(self, code: int, summary: str, report: dict):
        super().__init__(summary)
        self.code, self.summary, self.report = code, summary, report


def _report(command: str, seed, started: float, settings: dict, outputs: dict, inst=None) -> dict:
    doc = {
        "format": REPORT_FORMAT,
        "version": __version__,
        "command": command,
        "seed": seed,
        "wall_time": time.perf_counter() - started,
        "settings": settings,
        "outputs": outputs,
    }
    if inst is not None:
        doc["instance"] = instance_to_dict(inst)
        doc["instance_digest"] = digest(doc["instance"])
    return doc


def _inline_measure(text: str, n=None) -> DiscreteMeasure:
    return measure_from_dict(loads(text), n, where="inline measure")


def cmd_distance(args) -> tuple:
    started = time.perf_counter()
    if (args.mu is None) == (args.file_a is None) or (args.nu is None) == (args.file_b is None):
        raise InputError("give two measures: two files, or --mu and --nu")
    mu = load_measure(args.file_a) if args.file_a else _inline_measure(args.mu)
    nu = load_measure(args.file_b) if args.file_b else _inline_measure(args.nu)
    weights = None if args.weights is None else tuple(float(v) for v in args.weights.split(","))
    metric = MetricSpec(args.metric, args.p, args.q, weights)
    plan = solve_transport(mu, nu, metric)
    w = float(plan.cost ** (1.0 / metric.p))
    outputs = {
        "distance": w,
        "cost": float(plan.cost),
        "plan": [[int(i), int(j), float(m)] for i, j, m in plan.triplets()],
        "mu": mu.to_dict(),
        "nu": nu.to_dict(),
    }
    settings = {"metric": {"kind": metric.kind, "p": metric.p, "q": metric.q, "weights": weights}}
    return EXIT_OK, f"W_{metric.p:g} = {w:.12g} (cost {plan.cost:.12g})", _report("distance", None, started, settings, outputs)


def _settings(inst, args) -> dict:
    s = dict(inst.settings)
    for key in ("restarts", "seed", "gap_tol"):
        v = getattr(args, key, None)
        if v is not None:
            s[key] = v
    return s


def cmd_solve(args) -> tuple:
    started = time.perf_counter()
    inst = load_problem(args.problem)
    s = _settings(inst, args)
    s.update(grid_check=bool(args.grid_check), force=bool(args.force))
    if s["gap_tol"] < 0:
        raise InputError("--gap-tol must be >= 0")
    growth = certify_growth(inst, inst.metric.p, seed=s["seed"])
    outputs = {"growth": growth.to_dict()}
    if growth.verdict == DIVERGENT and not args.force:
        rep = _report("solve", s["seed"], started, s, outputs, inst)
        raise _Exit(EXIT_UNBOUNDED, "likely unbounded: objective grows faster than d^p (use --force to solve anyway)", rep)
    report = solve(inst, s["restarts"], s["seed"])
    ok = certify(inst, report, s["gap_tol"], relative=True)
    outputs["solve"] = report.to_dict()
    outputs["certified"] = ok
    summary = f"value {report.primal_value:.10g}  dual {report.dual_value:.10g}  gap {report.gap:.3g}"
    if args.grid_check:
        res = solve_grid_lp(inst, GridSpec.uniform(s["grid"], inst.dim))
        outputs["oracle"] = {"value": res.value, "nonzeros": res.plan.nnz, "iterations": res.iterations, "plan": res.plan.triplets()}
        summary += f"  oracle {res.value:.10g}"
    summary += "  certified" if ok else "  NOT certified"
    return (EXIT_OK if ok else EXIT_GAP), summary, _report("solve", s["seed"], started, s, outputs, inst)


def cmd_certify(args) -> tuple:
    started = time.perf_counter()
    inst = load_problem(args.problem)
    s = _settings(inst, args)
    p = inst.metric.p
    p2 = args.p_probe if args.p_probe is not None else ATTAINMENT_FACTOR * p
    s["p_probe"] = p2
    finite = certify_growth(inst, p, seed=s["seed"])
    attain = certify_growth(inst, p2, seed=s["seed"])
    outputs = {"finiteness": finite.to_dict(), "attainment": attain.to_dict()}
    summary = f"p={p:g}: {finite.verdict} (c~{finite.c_estimate:.4g});  p'={p2:g}: {attain.verdict} (c~{attain.c_estimate:.4g})"
    code = EXIT_UNBOUNDED if finite.verdict == DIVERGENT else EXIT_OK
    return code, summary, _report("certify", s["seed"], started, s, outputs, inst)


def cmd_diverge(args) -> tuple:
    started = time.perf_counter()
    inst = load_problem(args.problem)
    s = _settings(inst, args)
    if args.direction is None:
        u = np.zeros(inst.dim)
        u[0] = 1.0
    else:
        u = [float(v) for v in args.direction.split(",")]
    s.update(direction=list(map(float, u)), K=args.K)
    witnesses = build_divergence_sequence(inst, u, args.K)
    outputs = {"witnesses": [w.to_dict() for w in witnesses]}
    last = witnesses[-1]
    worst = max(w.w_check for w in witnesses)
    summary = f"K={args.K}: objective_K {last.objective_k:.6g}, max W_p {worst:.6g} (radius {inst.radius:g})"
    return EXIT_OK, summary, _report("diverge", s["seed"], started, s, outputs, inst)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wassball", description="Worst-case expectations over Wasserstein balls.")
    ap.add_argument("--version", action="version", version=f"wassball {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def output_flags(p):
        p.add_argument("--json", action="store_true", help="print the full report as JSON on stdout")
        p.add_argument("--report", metavar="PATH", help="write the full report to PATH")

    d = sub.add_parser("distance", help="exact W_p between two discrete measures")
    d.add_argument("file_a", nargs="?")
    d.add_argument("file_b", nargs="?")
    d.add_argument("--mu", help="inline JSON measure {\"atoms\": ..., \"weights\": ...}")
    d.add_argument("--nu", help="inline JSON measure")
    d.add_argument("--p", type=float, default=1.0)
    d.add_argument("--metric", default="euclidean", choices=("euclidean", "qnorm", "weighted"))
    d.add_argument("--q", type=float, default=2.0)
    d.add_argument("--weights", help="comma-separated metric weights")
    output_flags(d)
    d.set_defaults(run=cmd_distance)

    s = sub.add_parser("solve", help="primal search, dual bound and certificate")
    s.add_argument("problem")
    s.add_argument("--restarts", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--gap-tol", dest="gap_tol", type=float, help="relative gap tolerance (default 1e-4)")
    s.add_argument("--grid-check", action="store_true", help="also solve the grid LP oracle")
    s.add_argument("--force", action="store_true", help="solve even with divergence evidence")
    output_flags(s)
    s.set_defaults(run=cmd_solve)

    c = sub.add_parser("certify", help="growth certificates at p and a lower probe")
    c.add_argument("problem")
    c.add_argument("--p-probe", dest="p_probe", type=float, help="second probe exponent (default 0.9 p)")
    c.add_argument("--seed", type=int)
    output_flags(c)
    c.set_defaults(run=cmd_certify)

    v = sub.add_parser("diverge", help="explicit in-ball sequence with growing objective")
    v.add_argument("problem")
    v.add_argument("--direction", help="comma-separated escape direction (default e1)")
    v.add_argument("--K", type=int, default=20)
    output_flags(v)
    v.set_defaults(run=cmd_diverge)
    return ap


def _emit(args, summary: str, report: dict) -> None:
    text = json.dumps(report, indent=2, allow_nan=True)
    if getattr(args, "report", None):
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    if getattr(args, "json", False):
        print(summary, file=sys.stderr)
        print(text)
    else:
        print(summary)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code, summary, report = args.run(args)
    except _Exit as exc:
        _emit(args, exc.summary, exc.report)
        return exc.code
    except (InputError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except WassballError as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    _emit(args, summary, report)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

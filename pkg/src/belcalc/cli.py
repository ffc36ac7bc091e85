"""Command-line front end.

Verbs: ``check``, ``bel``, ``density``, ``oracle-compare``.

Exit codes: 0 success; 1 invalid theory or failed comparison; 2 I/O or
usage problems (unreadable file, malformed history/query); 3 impossible
history (zero weight).  In ``--format json`` mode stdout carries a single
JSON object and nothing else.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .dsl import (
    HistorySyntaxError,
    format_history,
    parse_history,
    parse_query,
    parse_theory,
)
from .engine import (
    CapacityError,
    ImpossibleHistoryError,
    bel,
    build_problem,
    density_grid_csv,
    posterior_density,
)
from .model import BelcalcError
from .oracle import (
    grid_belief,
    grid_filter,
    particle_belief,
    particle_filter,
)
from .quadrature import QuadratureConfig

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IO = 2
EXIT_IMPOSSIBLE = 3


def _load_theory(path: str):
    try:
        with open(path, "r", encoding="utf-8", errors="replace") as fh:
            text = fh.read()
    except OSError as e:
        print(f"error: cannot read {path}: {e}", file=sys.stderr)
        raise SystemExit(EXIT_IO)
    result = parse_theory(text)
    if not result.ok:
        for d in result.diagnostics:
            print(d.render(), file=sys.stderr)
        raise SystemExit(EXIT_INVALID)
    for d in result.diagnostics:
        print(d.render(), file=sys.stderr)
    return result.theory


def _parse_run_inputs(theory, history_text: str, query_text: str):
    try:
        hist = parse_history(history_text, theory)
        query = parse_query(query_text, theory) if query_text is not None else None
        return hist, query
    except HistorySyntaxError as e:
        print(f"error: {e}", file=sys.stderr)
        raise SystemExit(EXIT_IO)


def cmd_check(args) -> int:
    _load_theory(args.theory)
    print("ok")
    return EXIT_OK


def cmd_bel(args) -> int:
    theory = _load_theory(args.theory)
    hist, query = _parse_run_inputs(theory, args.history, args.query)
    cfg = QuadratureConfig()
    strategy = args.strategy
    try:
        if strategy == "particle":
            cloud = particle_filter(theory, hist, n=args.particles, seed=args.seed)
            value = particle_belief(cloud, query)
            result = {
                "belief": value,
                "gamma": None,  # the particle route never forms the normalizer
                "abs_error": 3.0 * (max(value * (1.0 - value), 1e-12) / args.particles) ** 0.5,
                "dimension": len(theory.fluents),
                "evaluations": args.particles,
            }
        else:
            problem = build_problem(theory, hist, query, cfg)
            if strategy == "regress-quad" and problem.quadrature_dimension > cfg.d_max:
                print(
                    f"note: dimension {problem.quadrature_dimension} exceeds "
                    f"{cfg.d_max}; falling back to the sequential grid",
                    file=sys.stderr)
                strategy = "grid"
            r = bel(problem, quad=cfg, strategy=strategy, cells=args.cells)
            for w in r.warnings:
                print(f"warning: {w}", file=sys.stderr)
            result = {
                "belief": r.belief,
                "gamma": r.gamma,
                "abs_error": r.estimated_abs_error,
                "dimension": r.dimension,
                "evaluations": r.evaluations,
            }
    except ImpossibleHistoryError:
        print("error: history has zero weight", file=sys.stderr)
        return EXIT_IMPOSSIBLE
    except CapacityError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO

    if args.format == "json":
        print(json.dumps(result))
    else:
        gamma = result["gamma"]
        print(f"belief       {result['belief']:.10g}")
        print(f"gamma        {gamma:.10g}" if gamma is not None else "gamma        n/a")
        print(f"abs_error    {result['abs_error']:.3g}")
        print(f"dimension    {result['dimension']}")
        print(f"evaluations  {result['evaluations']}")
    return EXIT_OK


def cmd_density(args) -> int:
    theory = _load_theory(args.theory)
    hist, _ = _parse_run_inputs(theory, args.history, None)
    fluent = args.fluent or theory.fluents[0]
    if args.grid_lo is not None and args.grid_hi is not None:
        lo, hi = args.grid_lo, args.grid_hi
    else:
        problem = build_problem(theory, hist, parse_query("true"), QuadratureConfig())
        from .engine import _reachable_boxes  # shared support logic

        hull = _reachable_boxes(theory, problem.ground, QuadratureConfig())
        lo, hi = hull[fluent]
    pts = np.linspace(lo, hi, args.grid_n)
    try:
        grid = posterior_density(theory, hist, fluent, list(pts), cells=args.cells)
    except ImpossibleHistoryError:
        print("error: history has zero weight", file=sys.stderr)
        return EXIT_IMPOSSIBLE
    sys.stdout.write(density_grid_csv(grid))
    return EXIT_OK


def cmd_oracle_compare(args) -> int:
    theory = _load_theory(args.theory)
    hist, query = _parse_run_inputs(theory, args.history, args.query)
    try:
        engine_result = bel(theory, hist, query)
        gb = grid_filter(theory, hist, cells=args.cells)
        grid_value = grid_belief(gb, query)
        cloud = particle_filter(theory, hist, n=args.particles, seed=args.seed)
        particle_value = particle_belief(cloud, query)
    except ImpossibleHistoryError:
        print("error: history has zero weight", file=sys.stderr)
        return EXIT_IMPOSSIBLE
    values = {
        "engine": engine_result.belief,
        "grid": grid_value,
        "particle": particle_value,
    }
    gap = max(abs(a - b) for a in values.values() for b in values.values())
    if args.format == "json":
        print(json.dumps({**values, "max_gap": gap, "tol": args.tol}))
    else:
        print(f"engine    {values['engine']:.10g}")
        print(f"grid      {values['grid']:.10g}")
        print(f"particle  {values['particle']:.10g}")
        print(f"max gap   {gap:.3g} (tol {args.tol:g})")
    if gap > args.tol:
        print("error: oracle disagreement exceeds tolerance", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="belcalc",
        description="Belief queries over basic action theories with noisy "
                    "sensors and effectors.")
    sub = ap.add_subparsers(dest="verb", required=True)

    def common(p, query=True):
        p.add_argument("--theory", required=True, help="path to a .bat theory file")
        p.add_argument("--history", default="",
                       help="e.g. 'fwd(2.0); sonar() = 5.0'")
        if query:
            p.add_argument("--query", required=True, help="e.g. 'h <= 5'")
        p.add_argument("--strategy", default="regress-quad",
                       choices=["regress-quad", "grid", "particle"])
        p.add_argument("--cells", type=int, default=2048)
        p.add_argument("--particles", type=int, default=100000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--tol", type=float, default=5e-3)
        p.add_argument("--format", default="text", choices=["text", "json", "csv"])

    p_check = sub.add_parser("check", help="validate a theory file")
    p_check.add_argument("--theory", required=True)
    p_check.set_defaults(fn=cmd_check)

    p_bel = sub.add_parser("bel", help="compute a degree of belief")
    common(p_bel)
    p_bel.set_defaults(fn=cmd_bel)

    p_density = sub.add_parser("density", help="tabulate a posterior density as CSV")
    common(p_density, query=False)
    p_density.add_argument("--fluent", default=None)
    p_density.add_argument("--grid-lo", type=float, default=None)
    p_density.add_argument("--grid-hi", type=float, default=None)
    p_density.add_argument("--grid-n", type=int, default=256)
    p_density.set_defaults(fn=cmd_density)

    p_cmp = sub.add_parser("oracle-compare",
                           help="engine vs grid filter vs particle filter")
    common(p_cmp)
    p_cmp.set_defaults(fn=cmd_oracle_compare)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK
    except BelcalcError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

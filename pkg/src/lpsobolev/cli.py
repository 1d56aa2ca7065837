"""Command line front end (``lpsobolev`` / ``python -m lpsobolev``).

Exit codes: 0 success, 1 a theorem-backed check failed, 2 invalid input,
3 the solver did not converge.  Errors are reported on stderr as one JSON
object ``{"error": kind, "message": ...}``.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import io
from .errors import InputError, LpSobolevError, NotConverged
from .geometry import lp_surface_measure
from .harness import (
    CHECKS,
    REPORT_HEADER,
    CorpusSpec,
    check_general_affine_sobolev,
    check_minkowski_ineq,
    check_minkowski_problem,
    check_morrey,
    check_moser_trudinger,
    check_normalized_petty,
    check_petty,
    check_polya_szego,
    check_sobolev_body_ineq,
    check_symmetrization_structure,
    check_valuation,
    report_json,
    report_rows,
    run_suite,
    summarize,
)
from .pwa import gradient_measure
from .rearrangement import BALL, convex_symmetrization
from .solver import SolverConfig, solve, solve_normalized
from .sphere import affine_energy, build_quadrature

log = logging.getLogger("lpsobolev")

EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2, 3

ENVIRONMENT = """\
environment overrides:
  LPSOBOLEV_LEVEL          default quadrature level (3)
  LPSOBOLEV_RESIDUAL_TOL   solver residual tolerance (1e-8)
  LPSOBOLEV_GRAD_TOL       solver gradient tolerance (1e-10)
  LPSOBOLEV_MAX_ITERS      solver iteration cap (5000)
"""


def _env(name, cast, default):
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return default
    try:
        return cast(raw)
    except ValueError as exc:
        raise InputError(f"environment variable {name}={raw!r} is invalid") from exc


def _default_level():
    return _env("LPSOBOLEV_LEVEL", int, 3)


def _solver_config(p):
    return SolverConfig(
        p=p,
        max_iters=_env("LPSOBOLEV_MAX_ITERS", int, 5000),
        grad_tol=_env("LPSOBOLEV_GRAD_TOL", float, 1e-10),
        residual_tol=_env("LPSOBOLEV_RESIDUAL_TOL", float, 1e-8),
    )


def _write(text, path):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _dump(data):
    return json.dumps(data, sort_keys=True, indent=1, allow_nan=False) + "\n"


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_solve_minkowski(args):
    mu = io.load(args.measure, "measure")
    if args.normalized:
        P, trace = solve_normalized(mu, cfg=_solver_config(float(mu.dim)))
    else:
        P, trace = solve(mu, _solver_config(args.p))
    _write(io.dumps(P), args.out)
    if args.trace:
        io.trace_csv(trace, args.trace)
    log.info("solved in %d iterations, residual %.3e", trace.iterations, trace.final_residual)
    return EXIT_OK


def cmd_sobolev_body(args):
    f = io.load(args.fn, "function")
    if args.normalized:
        mu = gradient_measure(f, f.dim).scaled(1.0 / f.dim)
        P, trace = solve_normalized(mu, cfg=_solver_config(float(f.dim)))
    else:
        P, trace = solve(gradient_measure(f, args.p), _solver_config(args.p))
    _write(io.dumps(P), args.out)
    if args.trace:
        io.trace_csv(trace, args.trace)
    return EXIT_OK


def _energy_report(f, lam, p, level, mode):
    e = affine_energy(f, lam, p, build_quadrature(f.dim, level), mode=mode)
    finer = affine_energy(f, lam, p, build_quadrature(f.dim, level + 1), mode=mode)
    return {
        "value": e.value,
        "p": e.p,
        "lambda": e.lam,
        "dim": e.dim,
        "level": e.level,
        "constant": e.constant,
        "constant_mode": e.constant_mode,
        "convergence_delta": abs(finer.value - e.value),
    }


def cmd_affine_energy(args):
    f = _load_function_like(args.fn)
    level = _default_level() if args.level is None else args.level
    _write(_dump(_energy_report(f, args.lam, args.p, level, args.constant)), args.out)
    return EXIT_OK


def _load_function_like(path):
    d = io.read_json(path)
    kind = d.get("type") if isinstance(d, dict) else None
    if kind == "radial" or (isinstance(d, dict) and "profile" in d and "simplices" not in d):
        return io.radial_from_dict(d)
    return io.from_dict(d, "function")


def cmd_symmetrize(args):
    f = io.load(args.fn, "function")
    K = BALL if args.body is None else io.load(args.body, "polytope")
    g = convex_symmetrization(f, K, args.grid)
    _write(io.dumps(g), args.out)
    if args.profile:
        io.profile_csv(g.profile, args.profile)
    return EXIT_OK


def cmd_check(args):
    name = args.name
    level = _default_level() if args.level is None else args.level

    def need(value, flag):
        if value is None:
            raise InputError(f"check {name!r} needs {flag}")
        return value

    def quad(dim):
        return build_quadrature(dim, level)

    if name == "minkowski":
        K = io.load(need(args.poly, "--poly"), "polytope")
        L = io.load(need(args.poly2, "--poly2"), "polytope")
        result = check_minkowski_ineq(K, L, need(args.p, "--p"))
    elif name in ("petty", "normalized-petty"):
        K = io.load(need(args.poly, "--poly"), "polytope")
        if name == "petty":
            result = check_petty(K, need(args.p, "--p"), args.lam, quad(K.dim))
        else:
            result = check_normalized_petty(K, args.lam, quad(K.dim))
    elif name == "minkowski-problem":
        K = io.load(need(args.poly, "--poly"), "polytope")
        p = need(args.p, "--p")
        result = check_minkowski_problem(lp_surface_measure(K, p), p, reference=K)
    else:
        f = io.load(need(args.fn, "--fn"), "function")
        if name == "sobolev-body":
            result = check_sobolev_body_ineq(f, need(args.p, "--p"))
        elif name == "affine-sobolev":
            result = check_general_affine_sobolev(f, need(args.p, "--p"), args.lam, quad(f.dim))
        elif name == "polya-szego":
            result = check_polya_szego(f, need(args.p, "--p"), args.lam, quad(f.dim))
        elif name == "morrey":
            result = check_morrey(f, need(args.p, "--p"), args.lam, quad(f.dim))
        elif name == "moser-trudinger":
            result = check_moser_trudinger(f, args.lam, quad(f.dim))
        elif name == "valuation":
            g = io.load(need(args.fn2, "--fn2"), "function")
            result = check_valuation(f, g, need(args.p, "--p"))
        else:  # symmetrization-structure
            K = io.load(need(args.poly, "--poly"), "polytope")
            result = check_symmetrization_structure(f, K, need(args.p, "--p"))
    _write(_dump(result.to_dict()), args.out)
    return EXIT_CHECK if result.violation else EXIT_OK


def load_suite_spec(path=None):
    """Corpus specifications from a suite file (default: the shipped one)."""
    if path is None:
        text = resources.files("lpsobolev.data").joinpath("default_suite.json").read_text()
        data = json.loads(text)
    else:
        data = io.read_json(path)
    if isinstance(data, dict) and "corpora" in data:
        data = data["corpora"]
    if isinstance(data, dict):
        data = [data]
    try:
        return [CorpusSpec.from_dict(d) for d in data]
    except (TypeError, ValueError) as exc:
        raise InputError(f"invalid suite specification: {exc}") from exc


def cmd_suite(args):
    specs = load_suite_spec(args.spec)
    checks = args.checks.split(",") if args.checks else None
    results = []
    for spec in specs:
        log.info("corpus %s: %d items, %s", spec.name or spec.generator, spec.count, spec.dim)
        for r in run_suite(spec, checks, jobs=args.jobs):
            r.extras.setdefault("corpus", spec.name or spec.generator)
            results.append(r)
    results.sort(key=lambda r: (r.check, r.digest))
    _write(report_json(results, timings=args.timings), args.out)
    if args.csv:
        io.write_csv(report_rows(results), REPORT_HEADER, args.csv)
    summary = summarize(results)
    log.info("%d results, %d passed, %d violations", summary["total"], summary["passed"], summary["violations"])
    return EXIT_CHECK if summary["violations"] else EXIT_OK


def cmd_export_plot(args):
    if args.kind == "ratios":
        data = io.read_json(args.input)
        rows = []
        by = {}
        for r in data.get("results", []):
            if r.get("ratio") is not None:
                by.setdefault(r["check"], []).append(r["ratio"])
        for name in sorted(by):
            counts, edges = np.histogram(np.array(by[name]), bins=args.bins)
            rows += [(name, float(edges[i]), float(edges[i + 1]), int(c)) for i, c in enumerate(counts)]
        text = io.write_csv(rows, ["check", "bin_lo", "bin_hi", "count"])
    elif args.kind == "profile":
        g = io.load(args.input, "radial")
        text = io.profile_csv(g.profile)
    else:  # trace: re-solve the stored measure and emit the iteration log
        mu = io.load(args.input, "measure")
        _, trace = solve(mu, _solver_config(args.p)) if args.p else solve_normalized(mu)
        text = io.trace_csv(trace)
    _write(text, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _probability(text):
    v = float(text)
    if not 0 <= v <= 1:
        raise argparse.ArgumentTypeError("must lie in [0, 1]")
    return v


def _exponent(text):
    v = float(text)
    if not v > 1:
        raise argparse.ArgumentTypeError("must exceed 1")
    return v


def build_parser():
    epilog = "artifact schemas (JSON):\n" + io.SCHEMAS + "\n" + ENVIRONMENT
    parser = argparse.ArgumentParser(
        prog="lpsobolev",
        description="Discrete L_p Minkowski problems and affine Sobolev inequality checks.",
        epilog=epilog,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_, description=help_, epilog=epilog,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.set_defaults(func=fn)
        return p

    p = add("solve-minkowski", cmd_solve_minkowski, "polytope with a prescribed L_p surface measure")
    p.add_argument("--measure", required=True, help="measure JSON")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--p", type=_exponent, help="exponent p (p != n)")
    g.add_argument("--normalized", action="store_true", help="solve S_n(P)/|P| = mu")
    p.add_argument("--out", help="polytope JSON (default stdout)")
    p.add_argument("--trace", help="write the iteration log as CSV")

    p = add("sobolev-body", cmd_sobolev_body, "optimal Sobolev body of a piecewise-affine function")
    p.add_argument("--fn", required=True, help="function JSON")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--p", type=_exponent)
    g.add_argument("--normalized", action="store_true", help="volume-normalized body (p = n)")
    p.add_argument("--out")
    p.add_argument("--trace")

    p = add("affine-energy", cmd_affine_energy, "affine L_p energy of a function")
    p.add_argument("--fn", required=True, help="function or radial-function JSON")
    p.add_argument("--lambda", dest="lam", type=_probability, default=0.5)
    p.add_argument("--p", type=_exponent, required=True)
    p.add_argument("--level", type=int, help="quadrature level (default $LPSOBOLEV_LEVEL or 3)")
    p.add_argument("--constant", choices=("calibrated", "closed-form", "raw"), default="calibrated")
    p.add_argument("--out")

    p = add("symmetrize", cmd_symmetrize, "convex symmetrization f^K (ball by default)")
    p.add_argument("--fn", required=True)
    p.add_argument("--body", help="polytope JSON for K (omit for the Euclidean ball)")
    p.add_argument("--grid", type=int, default=1024, help="uniform levels in the profile")
    p.add_argument("--out")
    p.add_argument("--profile", help="also write the profile as CSV")

    p = add("check", cmd_check, "run one inequality check on given inputs")
    p.add_argument("--name", required=True, choices=CHECKS)
    p.add_argument("--fn")
    p.add_argument("--fn2")
    p.add_argument("--poly")
    p.add_argument("--poly2")
    p.add_argument("--p", type=_exponent)
    p.add_argument("--lambda", dest="lam", type=_probability, default=0.5)
    p.add_argument("--level", type=int)
    p.add_argument("--out")

    p = add("suite", cmd_suite, "run a seeded verification suite")
    p.add_argument("--spec", help="suite JSON (default: the shipped suite)")
    p.add_argument("--checks", help="comma-separated subset of checks")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="JSON report (default stdout)")
    p.add_argument("--csv", help="flat CSV report")
    p.add_argument("--timings", action="store_true", help="include runtimes in the JSON report")

    p = add("export-plot", cmd_export_plot, "plot-ready CSV (ratio histograms, profiles, solver traces)")
    p.add_argument("--kind", choices=("ratios", "profile", "trace"), required=True)
    p.add_argument("--input", required=True, help="suite report, radial JSON or measure JSON")
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--p", type=_exponent, help="exponent for --kind trace (omit: normalized)")
    p.add_argument("--out")
    return parser


def _fail(kind, message, code):
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return code


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except NotConverged as exc:
        return _fail(exc.kind, str(exc), EXIT_SOLVER)
    except LpSobolevError as exc:
        return _fail(exc.kind, str(exc), EXIT_INPUT)
    except (ValueError, OSError) as exc:
        return _fail("input", str(exc), EXIT_INPUT)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

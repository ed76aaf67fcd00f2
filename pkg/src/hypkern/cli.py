"""Command-line front end.

Exit codes: 0 success or VALID, 1 I/O, schema or usage error, 2 INVALID or
domain error, 3 MARGINAL, 4 property-suite failure.
"""
from __future__ import annotations

import argparse
import json
import sys

from hypkern import io
from hypkern.deform import (
    ProofPathError,
    power_kernel,
    power_proof_path,
    rigidity_witness,
    second_order_extrapolate,
)
from hypkern.embed import EmbeddingError, gns_embed
from hypkern.kernels import Status, validate_cht
from hypkern.numcore import DEFAULT_TOL, DomainError
from hypkern.suites import SUITES, report_dict, run_suites
from hypkern.trees import exp_violation_search, free_product_kernel, tree_kernel

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_MARGINAL, EXIT_SUITE = 0, 1, 2, 3, 4
_VERDICT_EXIT = {Status.VALID: EXIT_OK, Status.INVALID: EXIT_INVALID, Status.MARGINAL: EXIT_MARGINAL}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which would collide with INVALID
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_IO)


# --------------------------------------------------------------------------
# output helpers
# --------------------------------------------------------------------------

def _emit(args, text):
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)


def _emit_report(args, report, render_text):
    _emit(args, io.dumps(report) if args.format == "json" else render_text(report))


def _fmt(x):
    return f"{x:.6e}" if isinstance(x, float) else str(x)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def _parse_mode(mode, n):
    if mode == "all":
        return None
    if mode.startswith("one:"):
        try:
            i = int(mode[4:])
        except ValueError:
            raise UsageError(f"bad --mode {mode!r}") from None
        if not 0 <= i < n:
            raise UsageError(f"base {i} out of range for {n} points")
        return i
    raise UsageError(f"--mode must be 'all' or 'one:<i>', got {mode!r}")


def _validation_text(rep):
    lines = [f"file: {rep['file']}", f"verdict: {rep['verdict']}",
             f"cocycle residual: {_fmt(rep['cocycle_residual'])}"]
    for b, r in rep["per_base"].items():
        lines.append(f"  base {b}: {r['verdict']:8s} min_eig {_fmt(r['min_eig'])}  max_eig {_fmt(r['max_eig'])}")
    if "witness" in rep:
        w = rep["witness"]
        coeffs = ", ".join(f"{re:+.4f}{im:+.4f}i" for re, im in w["coefficients"])
        lines.append(f"witness at base {w['base']} ({w['label']}): [{coeffs}]")
    if "cocycle_witness" in rep:
        lines.append(f"cocycle fails on quadruple {rep['cocycle_witness']}")
    return "\n".join(lines) + "\n"


def cmd_validate(args):
    K = io.read_kernel(args.kernel)
    base = _parse_mode(args.mode, K.n)
    rep = validate_cht(K, base=base, tol=args.tol)
    d = {"file": args.kernel, "mode": args.mode, "tol": args.tol, **rep.to_dict()}
    if rep.witness is not None:
        d["witness"]["label"] = K.labels[rep.witness[0]]
    _emit_report(args, d, _validation_text)
    return _VERDICT_EXIT[rep.verdict]


def cmd_embed(args):
    K = io.read_kernel(args.kernel)
    if not 0 <= args.base < K.n:
        raise UsageError(f"base {args.base} out of range for {K.n} points")
    try:
        E = gns_embed(K, args.base, args.tol)
    except EmbeddingError as e:
        print(f"embed: {e}", file=sys.stderr)
        return EXIT_INVALID
    _emit(args, io.dumps(io.embedding_to_dict(E)))
    print(f"embedded {K.n} points in {E.space.field.value}H^{E.space.n}; "
          f"round-trip residuals beta {E.beta_residual:.2e}, alpha {E.alpha_residual:.2e}", file=sys.stderr)
    return EXIT_OK


def cmd_power(args):
    if args.trace and not 0.0 < args.t < 1.0:
        raise UsageError("--trace needs 0 < t < 1 (the series route is only defined there)")
    K = io.read_kernel(args.kernel)
    try:
        Kt = power_kernel(K, args.t)
    except DomainError as e:
        print(f"power: {e}", file=sys.stderr)
        return EXIT_INVALID
    if args.trace:
        try:
            tr = power_proof_path(K, args.t, args.base, args.tol, check=False)
        except ProofPathError as e:
            print(f"power: {e}", file=sys.stderr)
            return EXIT_INVALID
        with open(args.trace, "w", encoding="utf-8") as fh:
            fh.write(io.dumps(tr.to_dict()))
        print(f"proof-path residual {tr.residual:.3e} ({tr.series_terms} series terms)", file=sys.stderr)
    _emit(args, io.canonical_kernel_bytes(Kt).decode("utf-8"))
    return EXIT_OK


def _parse_grid(text):
    try:
        grid = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad --eps-grid {text!r}") from None
    if not grid or any(not e > 0 for e in grid):
        raise UsageError("--eps-grid needs positive values")
    return sorted(grid, reverse=True)


def _witness_text(rep):
    lines = [f"t = {rep['t']}, s = {rep['s']}",
             f"{'eps':>10s}  {'R(eps)+1':>14s}  {'verdict':>8s}  {'2(R+1)/eps^2':>14s}"]
    for r in rep["rows"]:
        lines.append(f"{r['eps']:10.3e}  {r['R_plus_one']:14.6e}  {r['verdict']:>8s}  {r['second_order']:14.6e}")
    x = rep["extrapolated"]
    if x is not None:
        lines.append(f"extrapolated R''(0) = {x['estimate']:.6f} (eps {x['eps'][0]:g}, {x['eps'][1]:g}); "
                     f"3(t^2 - s^2) = {x['target']:.6f}; relative deviation {x['relative_deviation']:.3%}")
    if "exp_search" in rep:
        e = rep["exp_search"]
        lines.append(f"lambda = {e['lambda']}: " + (
            f"violation found, min margin {e['min_margin']:.3e}" if e["found"] else "no violation found (inconclusive)"))
    return "\n".join(lines) + "\n"


def cmd_witness(args):
    grid = _parse_grid(args.eps_grid)
    rows = []
    for eps in grid:
        w = rigidity_witness(args.t, args.s, eps, args.tol)
        rows.append({"eps": eps, "R": w.R_value, "R_plus_one": w.R_plus_one,
                     "verdict": w.matrix_verdict.verdict.value, "min_eig": w.matrix_verdict.min_eig,
                     "second_order": w.second_order})
    target = 3.0 * (args.t ** 2 - args.s ** 2)
    extra = None
    if len(grid) >= 2:
        fine, coarse = grid[-1], grid[-2]
        est = second_order_extrapolate(args.t, args.s, coarse, fine)
        dev = abs(est - target) / abs(target) if target else abs(est)
        extra = {"eps": [coarse, fine], "estimate": est, "target": target, "relative_deviation": dev}
    rep = {"t": args.t, "s": args.s, "rows": rows, "extrapolated": extra}
    if args.exp_lambda is not None:
        found = exp_violation_search(args.exp_lambda, args.seed)
        rep["exp_search"] = {"lambda": args.exp_lambda, "found": found is not None,
                             "min_margin": found[1].min_margin if found else None}
    _emit_report(args, rep, _witness_text)
    return EXIT_OK


def cmd_tree(args):
    T = io.tree_from_dict(io.read_json(args.tree, "tree"))
    try:
        K = tree_kernel(T, args.lam)
    except DomainError as e:
        print(f"tree: {e}", file=sys.stderr)
        return EXIT_INVALID
    _emit(args, io.canonical_kernel_bytes(K).decode("utf-8"))
    return EXIT_OK


def cmd_glue(args):
    spec = io.glue_spec_from_dict(io.read_json(args.spec, "glue"))
    try:
        K = free_product_kernel(spec, rng=args.seed)
    except DomainError as e:
        print(f"glue: {e}", file=sys.stderr)
        return EXIT_INVALID
    except (ValueError, KeyError) as e:
        raise io.SchemaError(f"glueing spec: {e}") from None
    _emit(args, io.canonical_kernel_bytes(K).decode("utf-8"))
    return EXIT_OK


def _parse_sizes(text):
    if not text:
        return {}
    text = text.strip()
    try:
        if "=" not in text:
            out = {name: int(text) for name in SUITES}
        else:
            out = {}
            for part in text.split(","):
                name, value = part.split("=")
                out[name.strip()] = int(value)
    except ValueError:
        raise UsageError(f"bad --sizes {text!r}; use N or name=N,...") from None
    unknown = set(out) - set(SUITES)
    if unknown:
        raise UsageError(f"unknown suites in --sizes: {sorted(unknown)}")
    if any(v < 2 for v in out.values()):
        raise UsageError("suite sizes must be >= 2")
    return out


def _suite_text(rep):
    lines = [f"master seed {rep['seed']}; per-suite seeds: {rep['seed_rule']}", f"tol {rep['tol']:g}"]
    for s in rep["suites"]:
        status = "PASS" if s["passed"] else "FAIL"
        t = f"  {s['seconds']:.2f}s" if "seconds" in s else ""
        lines.append(f"{status} {s['name']:10s} checks {s['checks']:5d}  failures {s['failures']:3d}  "
                     f"marginal {s['marginal']:3d}  escalations {s['escalations']:3d}{t}")
        for c in s["counterexamples"]:
            lines.append("    counterexample: " + json.dumps(c))
        for c in s["marginal_cases"]:
            lines.append("    warning (MARGINAL): " + json.dumps(c))
        for n in s["notes"]:
            lines.append(f"    note: {n}")
    lines.append("all suites passed" if rep["passed"] else "SUITE FAILURE")
    return "\n".join(lines) + "\n"


def cmd_suite(args):
    names = [n.strip() for n in args.suites.split(",")] if args.suites else None
    if names:
        unknown = [n for n in names if n not in SUITES]
        if unknown:
            raise UsageError(f"unknown suites {unknown}; available: {', '.join(sorted(SUITES))}")
    results = run_suites(names, args.seed, _parse_sizes(args.sizes), args.tol, args.jobs)
    rep = report_dict(results, args.seed, args.tol, timing=not args.no_timing)
    _emit_report(args, rep, _suite_text)
    return EXIT_OK if rep["passed"] else EXIT_SUITE


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def _seed(text):
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _tol(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("tol must be positive")
    return v


def _global_flags(p, suppress):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--tol", type=_tol, default=d(DEFAULT_TOL), help="PSD tolerance (default 1e-9)")
    p.add_argument("--seed", type=_seed, default=d(0), help="master seed (default 0)")
    p.add_argument("--format", choices=("json", "text"), default=d("text"), help="report format")
    p.add_argument("-o", "--output", default=d(None), help="output path (default stdout)")


def build_parser():
    p = _Parser(prog="hypkern", description="Kernels of real and complex hyperbolic type.")
    _global_flags(p, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("validate", parents=[common], help="validate a kernel file")
    s.add_argument("kernel")
    s.add_argument("--mode", default="all", help="'all' or 'one:<i>'")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("embed", parents=[common], help="explicit hyperbolic embedding of a kernel")
    s.add_argument("kernel")
    s.add_argument("--base", type=int, default=0)
    s.set_defaults(func=cmd_embed)

    s = sub.add_parser("power", parents=[common], help="power deformation (beta^t, t alpha)")
    s.add_argument("kernel")
    s.add_argument("--t", type=float, required=True)
    s.add_argument("--trace", metavar="FILE", help="write the proof-path trace to FILE")
    s.add_argument("--base", type=int, default=0, help="base point of the trace")
    s.set_defaults(func=cmd_power)

    s = sub.add_parser("witness", parents=[common], help="four-point rigidity witness table")
    s.add_argument("--t", type=float, required=True)
    s.add_argument("--s", type=float, required=True)
    s.add_argument("--eps-grid", default="1e-1,1e-2,1e-3")
    s.add_argument("--exp-lambda", type=float, default=None,
                   help="also run the exploratory search for a lambda**d violation at this lambda")
    s.set_defaults(func=cmd_witness)

    s = sub.add_parser("tree", parents=[common], help="tree kernel lambda**d from a tree file")
    s.add_argument("tree")
    s.add_argument("--lambda", dest="lam", type=float, required=True)
    s.set_defaults(func=cmd_tree)

    s = sub.add_parser("glue", parents=[common], help="free-product kernel from a glueing spec")
    s.add_argument("spec")
    s.set_defaults(func=cmd_glue)

    s = sub.add_parser("suite", parents=[common], help="run the randomized property suites")
    s.add_argument("--suites", default=None, help=f"comma list from: {', '.join(sorted(SUITES))}")
    s.add_argument("--sizes", default=None, help="N for every suite, or name=N,...")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--no-timing", action="store_true", help="omit timings for byte-stable reports")
    s.set_defaults(func=cmd_suite)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (io.SchemaError, UsageError) as e:
        print(f"hypkern {args.command}: {e}", file=sys.stderr)
        return EXIT_IO
    except OSError as e:
        print(f"hypkern {args.command}: {e.strerror or e}: {e.filename or ''}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

"""``hyperlab`` batch command line.

Exit status: 0 every check holds, 1 some check fails, 2 usage error,
3 unreadable or malformed input, 4 exact-bias budget exceeded.
"""
from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import boolean_fourier as bf
from . import design_bias as db
from . import io
from . import pauli
from . import sphere_moments as sm
from . import suites
from . import xor_games as xg

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("HYPERLAB_SEED")
    if env is None:
        return 0
    try:
        return int(env, 0)
    except ValueError:
        raise UsageError(f"HYPERLAB_SEED must be an integer, got {env!r}") from None


def _config(args) -> suites.SuiteConfig:
    return suites.SuiteConfig(
        seed=_seed(args), count=getattr(args, "count", None),
        budget=getattr(args, "budget", xg.DEFAULT_BUDGET), tolerance=args.tolerance,
        out=Path(args.out), jobs=max(1, args.jobs), timings=getattr(args, "timings", False),
        povm=getattr(args, "povm", None))


def cmd_suite(args, out) -> int:
    if suites.unknown_suite(args.name):
        raise UsageError(f"unknown suite {args.name!r}; choose from {', '.join(suites.SUITES + ('all',))}")
    cfg = _config(args)
    result = suites.run_suite(args.name, cfg)
    csv_path, json_path = suites.write_reports(result, cfg)
    fails = [r for r in result.records if not r.holds]
    print(f"{args.name}: {len(result.records)} checks, {len(fails)} failed", file=out)
    for name, status in sorted(result.statuses.items()):
        print(f"{name}: {status}", file=out)
    for r in fails[:20]:
        print(f"FAIL {r.suite} {r.id} lhs={r.lhs!r} rhs={r.rhs!r} margin={r.margin!r}", file=out)
    print(f"wrote {csv_path} and {json_path}", file=out)
    return EXIT_OK if result.all_hold else EXIT_FAIL


def describe(kind: str, obj) -> list[str]:
    if kind == "povm":
        order = db.design_order(obj) if obj.rank_one else None
        head = "rank-one POVM" if obj.rank_one else "POVM"
        lines = [f"{head}, dim {obj.dim}, {len(obj.operators)} elements"
                 + (f", verified t-design order: {order}" if obj.rank_one else "")]
        lines.append(f"completeness deviation: {obj.completeness_deviation:.3e}")
        if obj.rank_one:
            for t in range(1, 5):
                lines.append(f"t={t}: design deviation {db.design_deviation(obj, t):.3e}")
        return lines
    if kind == "game":
        uniform = bool(np.allclose(obj.pi, 1 / obj.pi.size, atol=1e-12, rtol=0))
        return [f"XOR game: k={obj.k}, n={obj.n}, " + ("uniform π" if uniform else "non-uniform π"),
                f"exact-bias cost: {xg.exact_visits(obj.k, obj.n)} tensor-element visits"]
    if kind == "form":
        mags = np.abs(obj.coeffs)
        const = bool(np.max(np.abs(mags - mags.flat[0])) <= 1e-12)
        return [f"multilinear form: k={obj.k}, n={obj.n}",
                f"l1 norm {mags.sum():.12g}, constant magnitude: {'yes' if const else 'no'}"]
    if kind == "function":
        e = bf.fourier_transform(obj)
        return [f"boolean function: n={obj.arity}, degree {bf.degree(e)}",
                f"mean {e.coefficients[0]:.12g}, variance {bf.variance(e):.12g}, "
                f"l2 norm {bf.lp_norm(obj, 2):.12g}"]
    if kind == "operator":
        e = pauli.pauli_decompose(obj)
        return [f"Hermitian operator: {obj.n_qubits} qubits, {len(e.coefficients)} Pauli terms, "
                f"locality {pauli.locality(e)}",
                f"normalized 2-norm {pauli.schatten_norm(obj, 2):.12g}, "
                f"operator norm {pauli.schatten_norm(obj, math.inf):.12g}"]
    if kind == "state":
        return [f"state vector: dim {len(obj)}, norm {np.linalg.norm(obj):.12g}"]
    if kind == "delta":
        source = "raw Hermitian matrix" if obj.raw else f"p={obj.p:.12g}"
        return [f"state difference: dims {list(obj.dims)}, {source}",
                f"trace {np.trace(obj.delta).real:.12g}, trace norm {db.trace_norm(obj):.12g}, "
                f"two_k norm {sm.two_k_norm(obj):.12g}"]
    raise AssertionError(kind)


def cmd_describe(args, out) -> int:
    kind, obj = io.load(args.file)
    for line in describe(kind, obj):
        print(line, file=out)
    return EXIT_OK


def cmd_bias(args, out) -> int:
    _, g = io.load(args.file, "game")
    exact = not args.search
    try:
        beta, witness = xg.bias_exact(g, args.budget) if exact else (None, None)
    except xg.BudgetExceeded as e:
        if args.exact:
            raise
        print(f"note: {e}; falling back to local search", file=sys.stderr)
        exact = False
    if not exact:
        beta, witness = xg.bias_local_search(g, args.restarts, _seed(args))
    c = xg.bh_constant(g.k).value
    bh = xg.bh_norm(g, xg.bh_exponent(g.k))
    lower = g.n ** (-(g.k - 1) / 2) / c
    tol = args.tolerance
    bh_ok = bh <= c * beta + (xg.BH_TOL if tol is None else tol)
    low_ok = lower <= beta + (xg.LOWER_TOL if tol is None else tol)
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["game", "beta", "bh_norm", "C_k", "lower_bound", "holds"])
    w.writerow([Path(args.file).stem, repr(beta), repr(bh), repr(c), repr(lower), int(bh_ok and low_ok)])
    if not exact:
        print("# beta is a lower bound only (local search)", file=out)
    print("# witness: " + " | ".join(" ".join("+" if v > 0 else "-" for v in row) for row in witness.signs),
          file=out)
    return EXIT_OK if bh_ok and low_ok else EXIT_FAIL


def cmd_design_check(args, out) -> int:
    _, m = io.load(args.file, "povm")
    if not m.rank_one:
        raise UsageError("design check needs a rank-one POVM")
    tol = db.DESIGN_TOL if args.tolerance is None else args.tolerance
    ok = True
    for t in range(1, args.t + 1):
        dev = db.design_deviation(m, t)
        holds = dev <= tol
        ok = holds if t == args.t else ok
        print(f"t={t}: deviation {dev:.3e} {'holds' if holds else 'fails'}", file=out)
    print(f"{args.t}-design: {'yes' if ok else 'no'}", file=out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_tail(args, out) -> int:
    _, m = io.load(args.file, "operator")
    sp = pauli.spectrum(m)
    two = pauli.schatten_norm(m, 2, sp)
    if args.normalize and two > 0:
        m = pauli.HermitianOperator(m.n_qubits, m.entries / two)
        sp = pauli.spectrum(m)
    k = pauli.locality(pauli.pauli_decompose(m))
    try:
        reports = [pauli.check_tail_bound_spectrum(sp, k, t) for t in args.t_grid]
    except ValueError as e:
        raise UsageError(str(e)) from None
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["t", "fraction", "bound", "holds"])
    ok = True
    for t, r in zip(args.t_grid, reports):
        holds = r.lhs <= r.rhs + (args.tolerance or 0.0)
        ok &= holds
        w.writerow([repr(t), repr(r.lhs), repr(r.rhs), int(holds)])
    return EXIT_OK if ok else EXIT_FAIL


def cmd_moments(args, out) -> int:
    _, d = io.load(args.file, "delta")
    if d.k == 1:
        value = sm.haar_moment(d, args.t)
    else:
        value = sm.product_haar_moment(d, args.t)
    print(f"t={args.t} Haar moment: {value!r}", file=out)
    ok = True
    if args.t == 2 and d.k == 1:
        closed = sm.second_moment_closed_form(d)
        print(f"closed form: {closed!r}", file=out)
        ok = abs(closed - value) <= (args.tolerance or 1e-12)
    if args.t == 4:
        r = sm.moment_ratio_check(d, 4) if d.k == 1 else sm.product_moment_ratio_check(d)
        print(f"fourth/second moment ratio: lhs {r.lhs!r} rhs {r.rhs!r} holds {r.holds}", file=out)
        ok = r.lhs <= r.rhs + (r.tolerance if args.tolerance is None else args.tolerance)
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=lambda s: int(s, 0), default=None,
                        help="base seed (default: $HYPERLAB_SEED, else 0)")
    common.add_argument("--out", default="reports", help="report directory")
    common.add_argument("--tolerance", type=float, default=None, help="override check tolerances")
    common.add_argument("--jobs", type=int, default=1, help="worker processes")

    p = argparse.ArgumentParser(prog="hyperlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("suite", parents=[common], help="run a check suite")
    s.add_argument("name", help="boolean, pauli, moments, design, xor or all")
    s.add_argument("--count", type=int, default=None, help="cap on every random ensemble")
    s.add_argument("--budget", type=int, default=xg.DEFAULT_BUDGET, help="exact-bias visit budget")
    s.add_argument("--povm", default=None, help="POVM file for the design suite")
    s.add_argument("--timings", action="store_true", help="fill the ms column (breaks byte-identical reports)")
    s.set_defaults(func=cmd_suite)

    s = sub.add_parser("describe", parents=[common], help="summarize an input file")
    s.add_argument("file")
    s.set_defaults(func=cmd_describe)

    s = sub.add_parser("bias", parents=[common], help="bias and inequality checks for an XOR game")
    s.add_argument("file")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--exact", action="store_true", help="exact only; fail if over budget")
    g.add_argument("--search", action="store_true", help="local search lower bound only")
    s.add_argument("--restarts", type=int, default=10)
    s.add_argument("--budget", type=int, default=xg.DEFAULT_BUDGET)
    s.set_defaults(func=cmd_bias)

    s = sub.add_parser("design-check", parents=[common], help="verify a POVM as a t-design")
    s.add_argument("file")
    s.add_argument("--t", type=int, required=True, choices=range(1, 5))
    s.set_defaults(func=cmd_design_check)

    s = sub.add_parser("tail", parents=[common], help="spectral tail fractions against the bound")
    s.add_argument("file")
    s.add_argument("--t-grid", type=float, nargs="+", required=True)
    s.add_argument("--normalize", action="store_true", help="rescale to unit normalized 2-norm first")
    s.set_defaults(func=cmd_tail)

    s = sub.add_parser("moments", parents=[common], help="Haar moments of a state difference")
    s.add_argument("file")
    s.add_argument("--t", type=int, required=True, choices=(2, 4))
    s.set_defaults(func=cmd_moments)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args, out)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except xg.BudgetExceeded as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except (io.InputError, OSError) as e:
        print(f"error: {args.file if hasattr(args, 'file') else ''}: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface.

Verbs: ``reconcile``, ``simulate``, ``estimate-cov`` and ``curves``.

Exit codes: 0 success, 1 unreadable or malformed input, 2 numerical
failure (singular covariance, zero denominators, non-convergence),
3 no market equilibrium, 64 usage error.
"""

import argparse
import sys
from dataclasses import replace

import numpy as np

from . import io
from .covariance import SCHEMES, estimate_w
from .errors import (
    ConvergenceError,
    CurveReconcileError,
    DegenerateSeriesError,
    DivisionError,
    InsufficientDataError,
    InvalidArgumentError,
    NoEquilibriumError,
    SingularMatrixError,
)
from .hierarchy import summation_matrix
from .market_curves import bin_volumes, build_step_curve, intersect, make_price_classes, PriceClassGrid
from .reconcilers import METHODS, OPTIMAL_METHODS, build_mapping, reconcile, reconcile_in_representation
from .simulation import SimConfig, TABLE_BOTTOM, TABLE_N, run_grid, rmse_table

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_NUMERIC = 2
EXIT_NO_EQUILIBRIUM = 3
EXIT_USAGE = 64

_HISTORY_METHODS = ("tdar", "tdra", "adar", "adra")
_RESIDUAL_METHODS = tuple(m for m in OPTIMAL_METHODS if m not in ("opols", "oplambda"))


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _method_list(text):
    tokens = [t.strip() for t in text.split(",") if t.strip()]
    bad = [t for t in tokens if t not in METHODS]
    if bad or not tokens:
        raise argparse.ArgumentTypeError(f"unknown method(s) {bad}; choose from {', '.join(METHODS)}")
    return tuple(tokens)


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be positive: {v}")
    return v


def build_parser():
    p = _Parser(prog="curve-reconcile", description="Reconcile forecasts of aggregated curves.")
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    r = sub.add_parser("reconcile", help="reconcile a base forecast vector")
    r.add_argument("forecast", help="CSV with header level,value ordered a_n..a_2, b_1..b_n")
    r.add_argument("--method", required=True, choices=METHODS)
    r.add_argument("--residuals", help="in-sample residual panel (needed by the estimated op* methods)")
    r.add_argument("--history", help="panel of observed hierarchy values (needed by ar/ra methods)")
    r.add_argument("--k", type=int, default=1,
                   help="representation in which the forecast file and panels are laid out (op* only)")
    r.add_argument("--rho", type=float, default=0.1, help="graphical lasso penalty")
    r.add_argument("--center", action="store_true", help="demean residuals before estimating W")

    s = sub.add_parser("simulate", help="Monte-Carlo RMSE table")
    s.add_argument("--n", type=_positive_int, nargs="+", default=list(TABLE_BOTTOM), help="bottom sizes")
    s.add_argument("--N", type=_positive_int, nargs="+", default=list(TABLE_N), help="history lengths")
    s.add_argument("--phi", type=float, default=0.7)
    s.add_argument("--reps", type=_positive_int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--cov", choices=("id", "corr"), default="id")
    s.add_argument("--transform", choices=("none", "square"), default="none")
    s.add_argument("--methods", type=_method_list, default=METHODS, help="comma-separated method tokens")
    s.add_argument("--rho", type=float, default=0.1)
    s.add_argument("--filtered", action="store_true", help="drop replications with |p_fo,1| > 50")
    s.add_argument("--threads", type=int, default=None, help="worker processes (0 = all cores)")
    s.add_argument("--debug-dump", metavar="PATH", help="write simulated targets to PATH")

    e = sub.add_parser("estimate-cov", help="estimate the error covariance W")
    e.add_argument("residuals", help="residual panel CSV")
    e.add_argument("--scheme", required=True, choices=SCHEMES)
    e.add_argument("--rho", type=float, default=0.1)
    e.add_argument("--center", action="store_true")

    c = sub.add_parser("curves", help="market curve tools")
    c.add_argument("action", choices=("aggregate", "classes", "bin", "intersect"))
    c.add_argument("bids", help="CSV with header side,price,volume")
    c.add_argument("--side", choices=("supply", "demand"))
    c.add_argument("--m", type=int, help="number of equidistant volume steps")
    c.add_argument("--grid", help="boundary CSV for bin")
    return p


def _hierarchy_size(y):
    return (y.size + 1) // 2


def _panel(path, width, what):
    labels, data = io.read_panel(path)
    if data.shape[1] != width:
        raise io.ParseError(f"{path}: {what} panel has {data.shape[1]} columns, expected {width}")
    return data


def cmd_reconcile(args, out):
    labels, y_hat = io.read_forecast(args.forecast)
    n = _hierarchy_size(y_hat)
    m = y_hat.size
    method = args.method
    if method in _RESIDUAL_METHODS and not args.residuals:
        raise UsageError(f"--residuals is required for {method}")
    if method in _HISTORY_METHODS and not args.history:
        raise UsageError(f"--history is required for {method}")
    if args.k != 1 and method not in OPTIMAL_METHODS:
        raise UsageError("--k applies to op* methods only")
    if not 1 <= args.k <= n:
        raise UsageError(f"--k must lie in 1..{n}")
    residuals = _panel(args.residuals, m, "residual") if args.residuals else None
    history = _panel(args.history, m, "history") if args.history else None

    if args.k == 1:
        S = summation_matrix(n)
        P = build_mapping(method, S, y_hat=y_hat, residuals=residuals, history=history,
                          rho=args.rho, center=args.center)
        y_tilde = reconcile(P, S, y_hat).y_tilde
    else:
        S_k = summation_matrix(n, args.k)
        W_k = estimate_w(method, S=S_k, residuals=residuals, rho=args.rho, center=args.center).W
        y_tilde, _ = reconcile_in_representation(y_hat, args.k, W_k, method)
        y_tilde = y_tilde.y_tilde
    io.write_forecast(out, labels, y_tilde)


def cmd_simulate(args, out):
    try:
        base = SimConfig(
            N=args.N[0], n=args.n[0], phi=args.phi,
            error_cov="identity" if args.cov == "id" else "correlated",
            transform=args.transform, replications=args.reps, seed=args.seed,
            methods=args.methods, rho=args.rho,
        )
        for n in args.n:
            for N in args.N:
                replace(base, n=n, N=N)  # validate every cell before any work
    except InvalidArgumentError as exc:
        raise UsageError(str(exc)) from None
    results = run_grid(base, args.n, args.N, workers=args.threads)
    header, rows = rmse_table(results, filtered=args.filtered)
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join([row[0]] + [io.fmt(v) for v in row[1:]]) + "\n")
    for (n, N), res in results.items():
        failed = {k: v for k, v in res.failures.items() if v}
        note = f"n={n} N={N}: outliers={res.outlier_count}"
        if failed:
            note += " failures=" + ",".join(f"{k}:{v}" for k, v in failed.items())
        print(note, file=sys.stderr)
    if args.debug_dump:
        with open(args.debug_dump, "w") as fh:
            fh.write("n,N,replication,level,value\n")
            for (n, N), res in results.items():
                labels = io.level_labels(n)
                for r, row in enumerate(res.targets):
                    for lab, v in zip(labels, row):
                        fh.write(f"{n},{N},{r},{lab},{io.fmt(v)}\n")


def cmd_estimate_cov(args, out):
    labels, E = io.read_panel(args.residuals)
    m = E.shape[1]
    if m < 3 or m % 2 == 0:
        raise io.ParseError(f"{args.residuals}: need an odd number (>= 3) of level columns, got {m}")
    S = summation_matrix(_hierarchy_size(np.empty(m)))
    est = estimate_w(args.scheme, S=S, residuals=E, rho=args.rho, center=args.center)
    if est.shrinkage is not None:
        print(f"shrinkage={io.fmt(est.shrinkage)}", file=sys.stderr)
    io.write_matrix(out, labels, est.W)


def _pick_side(ladders, side, path):
    if side is None:
        if len(ladders) != 1:
            raise UsageError("--side is required when the file holds both sides")
        side = next(iter(ladders))
    if side not in ladders:
        raise io.ParseError(f"{path}: no {side} bids")
    return ladders[side]


def cmd_curves(args, out):
    ladders = io.read_bids(args.bids)
    if args.action == "intersect":
        if set(ladders) != {"supply", "demand"}:
            raise io.ParseError(f"{args.bids}: intersect needs both supply and demand bids")
        price, volume = intersect(build_step_curve(ladders["supply"]), build_step_curve(ladders["demand"]))
        out.write("price,volume\n")
        out.write(f"{io.fmt(price)},{io.fmt(volume)}\n")
        return
    bids = _pick_side(ladders, args.side, args.bids)
    curve = build_step_curve(bids)
    if args.action == "aggregate":
        io.write_curve(out, curve)
    elif args.action == "classes":
        if args.m is None:
            raise UsageError("classes needs --m")
        io.write_grid(out, make_price_classes(curve, args.m))
    else:
        if (args.grid is None) == (args.m is None):
            raise UsageError("bin needs exactly one of --grid or --m")
        if args.grid:
            grid = PriceClassGrid(bids.side, io.read_grid(args.grid))
        else:
            grid = make_price_classes(curve, args.m)
        io.write_series(out, bin_volumes(bids, grid).values)


_COMMANDS = {
    "reconcile": cmd_reconcile,
    "simulate": cmd_simulate,
    "estimate-cov": cmd_estimate_cov,
    "curves": cmd_curves,
}


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _COMMANDS[args.verb](args, out)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"curve-reconcile: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except io.ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except NoEquilibriumError as exc:
        print(f"no equilibrium: {exc}", file=sys.stderr)
        return EXIT_NO_EQUILIBRIUM
    except SingularMatrixError as exc:
        print(f"singular covariance: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DivisionError, ConvergenceError, DegenerateSeriesError, InsufficientDataError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except CurveReconcileError as exc:
        # remaining domain errors come from input values the parser accepted
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_PARSE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

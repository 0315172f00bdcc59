"""Command-line front end.

Exit codes: 0 success (flagged diagnostics included), 2 input error,
3 numerical failure.
"""

import argparse
import math
import sys

import numpy as np

from . import __version__, borel, coeffs, io, kernels, lamperti
from .exceptions import AllZero, InputError, NumericalError, PoleOnContour

EXIT_OK, EXIT_INPUT, EXIT_NUMERICAL = 0, 2, 3


def _floats(text, name, count=None):
    try:
        vals = [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise InputError(f"--{name}: cannot parse {text!r} as numbers") from None
    if count is not None and len(vals) != count:
        raise InputError(f"--{name} expects {count} numbers")
    return vals


def _pairs(text, name):
    out = []
    for item in text.split(","):
        parts = item.split(":")
        if len(parts) != 2:
            raise InputError(f"--{name}: expected x:y pairs separated by commas, got {item!r}")
        out.append(tuple(_floats(" ".join(parts), name, 2)))
    return out


def _times(text):
    ts = _floats(text, "t")
    if not ts or any(not t > 0 for t in ts):
        raise InputError("--t must be a list of positive times")
    return ts


def _orders(text):
    if text is None:
        return None
    vals = _floats(text, "orders", 2)
    if any(v < 0 or v != int(v) for v in vals):
        raise InputError("--orders expects two nonnegative integers m,n")
    return int(vals[0]), int(vals[1])


def _need_model(args):
    if args.model is None:
        raise InputError(f"{args.command} needs --model (a TOML file or one of "
                         f"{', '.join(io.BUILTIN_MODELS)})")
    return io.load_model(args.model)


def _params(args, skip=("func", "quiet", "out")):
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _gevrey_record(values, window):
    try:
        est = coeffs.gevrey_fit(values, window)
    except AllZero as exc:
        return {"window": list(window), "status": "all_zero", "detail": str(exc)}
    except InputError as exc:
        return {"window": list(window), "status": "invalid_window", "detail": str(exc)}
    return {"window": list(est.fit_window), "status": "ok", "K": est.K, "kappa": est.kappa,
            "residual": est.residual, "slope": est.slope, "n_points": est.n_points,
            "unbounded": est.unbounded}


def _default_windows(r_max):
    lo = max(1, r_max // 2)
    return [(lo, r_max)] if r_max - lo >= 2 else []


# ---------------------------------------------------------------------------
def cmd_coeffs(args):
    model, raw = _need_model(args)
    if args.r_max < 1:
        raise InputError("--r-max must be >= 1")
    table = kernels.model_table(model, args.y, args.r_max, degree=args.degree,
                                method=args.method)
    x = args.y if args.x is None else args.x
    vals = table.values(x)
    windows = [tuple(int(v) for v in _floats(w, "window", 2)) for w in args.window] \
        or _default_windows(table.r_max)
    fits = [_gevrey_record(vals, w) for w in windows]
    digest = io.config_digest(_params(args), [raw])
    if args.format == "csv":
        rows = [(r, x, table.y, float(v)) for r, v in enumerate(vals)]
        notes = [f"potential_degree {table.potential_degree}",
                 f"potential_error {table.potential.error!r}"]
        notes += [f"gevrey {f}" for f in fits]
        return io.render_csv(["r", "x", "y", "a_r"], rows, digest, notes)
    return io.render_json("coefficients", {
        "table": table.to_dict(), "x": x, "values": [float(v) for v in vals], "gevrey": fits,
    }, digest)


def _borel_record(series, t, orders, sweep):
    rec = {"t": t}
    try:
        res = borel.borel_sum(series, t, orders, retry=orders is None)
    except PoleOnContour as exc:
        rec.update(value=None, flagged=True, reason=str(exc))
        return rec
    rec.update(value=res.value, quad_error=res.quadrature_error,
               poles=[complex(p) for p in res.poles], clearance=res.pole_clearance,
               order=list(res.order), nodes=res.nodes, trusted=res.trusted,
               flagged=not res.trusted)
    if sweep:
        st = borel.stability_sweep(series, t, orders)
        rec.update(stability_spread=st.spread, stable=st.stable)
        rec["flagged"] = rec["flagged"] or not st.stable
    return rec


def cmd_borel_sum(args):
    values, raw = io.read_series(args.series)
    series = borel.FormalSeries(values)
    orders = _orders(args.orders)
    records = [_borel_record(series, t, orders, args.sweep) for t in _times(args.t)]
    digest = io.config_digest(_params(args), [raw])
    if args.format == "csv":
        rows = [(r["t"], r.get("value"), r.get("quad_error"), r.get("clearance"),
                 int(r["flagged"])) for r in records]
        return io.render_csv(["t", "value", "quad_error", "clearance", "flagged"], rows, digest,
                             [f"laguerre_rtol {borel.QUADRATURE_RTOL!r}"])
    return io.render_json("borel_sum", {"records": records}, digest)


def cmd_validate(args):
    model, raw = _need_model(args)
    points = _pairs(args.points, "points")
    t, s = args.t, args.s
    if not (t > 0 and s > 0):
        raise InputError("--t and --s must be positive")
    cache = kernels.TableCache(model, args.r_max)
    rows = []
    pde_rows = []
    for x, y in points:
        est = kernels.assemble_k(model, cache.table(y), t, x, y, "borel")
        diag = est.diagnostics
        rows.append((t, x, y, est.method, est.value, diag.quadrature_error, diag.pole_clearance))
    if args.pde:
        for x0 in sorted({x for x, _ in points}):
            sol = kernels.solve_pde_forward(model, t, x0, L=args.pde_L, h=1 / args.pde_n,
                                            dt=args.pde_dt)
            for x, y in points:
                if x == x0:
                    rows.append((t, x, y, "pde", float(sol(y)), "", ""))
            if args.pde_out:
                pde_rows.extend((x0, float(z), float(v)) for z, v in zip(sol.grid, sol.values))
    report = kernels.consistency_suite(model, t, s, points, cache=cache, r=args.r)
    summary = {
        "chapman_kolmogorov": report.chapman_kolmogorov,
        "mass": report.mass,
        "detailed_balance": report.detailed_balance,
        "heat_order_min": report.min_heat_order,
        "heat_orders": [[x, y, o] for (x, y), o in report.heat_orders.items()],
        "r": report.r,
        "fallbacks": report.fallbacks,
    }
    digest = io.config_digest(_params(args), [raw])
    if pde_rows:
        io.emit(io.render_csv(["x0", "x", "density"], pde_rows, digest,
                              [f"t {t!r}", f"h {1 / args.pde_n!r}", f"dt {args.pde_dt!r}"]),
                args.pde_out)
    if args.format == "csv":
        notes = [f"{k} {v!r}" for k, v in summary.items() if not isinstance(v, list)]
        return io.render_csv(["t", "x", "y", "method", "value", "diag_quad_error",
                              "diag_clearance"], rows, digest, notes)
    table = [dict(zip(["t", "x", "y", "method", "value", "diag_quad_error", "diag_clearance"], r))
             for r in rows]
    return io.render_json("validate", {"consistency": summary, "kernels": table}, digest)


def cmd_lamperti(args):
    lo, hi = _floats(args.interval, "interval", 2)
    dc = lamperti.DiffusionCoefficient(args.sigma, args.s0)
    lmap = lamperti.build_map(dc, (lo, hi))
    s = np.linspace(lo, hi, args.n)
    x = lmap.gamma(s)
    digest = io.config_digest(_params(args))
    if args.report:
        rep = lamperti.check_hypotheses(args.beta, dc)
        io.emit(io.render_json("lamperti_report", {"sigma": args.sigma, "beta": args.beta,
                                                    "flags": rep.to_dict(),
                                                    "all_passed": rep.all_passed}, digest),
                args.report)
    if args.format == "json":
        return io.render_json("lamperti_map", {"s": s.tolist(), "x": x.tolist(),
                                                "image": list(lmap.image)}, digest)
    return io.render_csv(["s", "x"], zip(s.tolist(), x.tolist()), digest,
                         [f"sigma {args.sigma}", f"s0 {args.s0!r}"])


def cmd_gevrey(args):
    inputs = []
    if args.series:
        values, raw = io.read_series(args.series)
        inputs.append(raw)
    else:
        model, raw = _need_model(args)
        inputs.append(raw)
        table = kernels.model_table(model, args.y, args.r_max)
        values = table.values(args.y if args.x is None else args.x)
    windows = [tuple(int(v) for v in _floats(w, "window", 2)) for w in args.window] \
        or _default_windows(len(values) - 1)
    fits = [_gevrey_record(values, w) for w in windows]
    digest = io.config_digest(_params(args), inputs)
    if args.format == "csv":
        rows = [(f["window"][0], f["window"][1], f["status"], f.get("K", ""),
                 f.get("kappa", ""), f.get("residual", "")) for f in fits]
        return io.render_csv(["lo", "hi", "status", "K", "kappa", "residual"], rows, digest)
    return io.render_json("gevrey", {"fits": fits}, digest)


# ---------------------------------------------------------------------------
def _common(parser, suppress):
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--model", default=default(None),
                        help="model TOML file or built-in name")
    parser.add_argument("--out", default=default(None), help="output path (default stdout)")
    parser.add_argument("--format", choices=("json", "csv"), default=default(None),
                        help="output format (default: csv for lamperti, json otherwise)")
    parser.add_argument("--seed", type=int, default=default(0),
                        help="reserved; every computation is deterministic")
    parser.add_argument("--quiet", action="store_true", default=default(False))


def build_parser():
    parser = argparse.ArgumentParser(prog="borelheat", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"borelheat {__version__}")
    _common(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _common(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("coeffs", parents=[common], help="expansion coefficient table")
    p.add_argument("--y", type=float, default=0.0, help="base point")
    p.add_argument("--x", type=float, default=None, help="evaluation point (default y)")
    p.add_argument("--r-max", type=int, default=10)
    p.add_argument("--degree", type=int, default=40)
    p.add_argument("--method", choices=("auto", "taylor", "chebyshev"), default="auto")
    p.add_argument("--window", action="append", default=[], help="Gevrey window lo,hi")
    p.set_defaults(func=cmd_coeffs)

    p = sub.add_parser("borel-sum", parents=[common], help="Borel-Pade-Laplace sums of a series")
    p.add_argument("--series", required=True, help="file of 'index value' lines")
    p.add_argument("--t", required=True, help="comma-separated positive times")
    p.add_argument("--orders", default=None,
                   help="Pade orders m,n (no retry when given); a terminating series a_0..a_k "
                        "is reproduced exactly with k,0")
    p.add_argument("--sweep", action="store_true", help="add the adjacent-order stability sweep")
    p.set_defaults(func=cmd_borel_sum)

    p = sub.add_parser("validate", parents=[common], help="semigroup checks and PDE comparison")
    p.add_argument("--t", type=float, default=0.1)
    p.add_argument("--s", type=float, default=0.1)
    p.add_argument("--points", default="0:0,1:0", help="x:y pairs")
    p.add_argument("--r", type=int, default=8, help="truncation order of the heat residual check")
    p.add_argument("--r-max", type=int, default=None)
    p.add_argument("--pde", action="store_true", help="add Crank-Nicolson reference values")
    p.add_argument("--pde-L", type=float, default=12.0)
    p.add_argument("--pde-n", type=int, default=512, help="grid points per unit length")
    p.add_argument("--pde-dt", type=float, default=1e-4)
    p.add_argument("--pde-out", default=None, help="CSV path for the PDE densities")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("lamperti", parents=[common], help="Lamperti map and hypothesis report")
    p.add_argument("--sigma", required=True, help="noise amplitude expression in x")
    p.add_argument("--beta", default="0", help="drift expression in x")
    p.add_argument("--s0", type=float, default=0.0)
    p.add_argument("--interval", default="-5,5",
                   help="lo,hi (write --interval=-1,1 when lo is negative)")
    p.add_argument("--n", type=int, default=101, help="number of map samples")
    p.add_argument("--report", default=None, help="JSON path for the hypothesis report")
    p.set_defaults(func=cmd_lamperti)

    p = sub.add_parser("gevrey", parents=[common], help="Gevrey-1 fits of coefficients")
    p.add_argument("--series", default=None, help="series file (else --model)")
    p.add_argument("--y", type=float, default=0.0)
    p.add_argument("--x", type=float, default=None)
    p.add_argument("--r-max", type=int, default=12)
    p.add_argument("--window", action="append", default=[], help="window lo,hi")
    p.set_defaults(func=cmd_gevrey)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = "csv" if args.command == "lamperti" else "json"
    try:
        text = args.func(args)
        leftover = io.emit(text, args.out)
    except InputError as exc:
        print(f"borelheat: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"borelheat: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, ValueError) as exc:
        print(f"borelheat: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if leftover is not None:
        sys.stdout.write(leftover)
    elif not args.quiet:
        print(f"borelheat: wrote {args.out}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

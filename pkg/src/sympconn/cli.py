"""Command-line front end.

    sympconn [--spec PATH | --family NAME --params JSON] [--out PATH] [--format csv|json]
             [--jobs N] [--seed N] [--tol NAME=VALUE ...] COMMAND [options]

Commands: eval, verify, geodesic, energy, sweep.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .connection import (ChartConnection, DomainError, epsilon_sing, hop_k_closed_form,
                         moment_k, sdast_ricci)
from .connection import tau as tau_fn
from .connection import _d, hop_jets, moment_k_jets, nabla_ricci_jets, rho_jets, ricci_jets
from .connection import sdast_oneform_jets, sdast_ricci_from_nabla
from .families import FAMILY_PARAMS, FamilyError, make_family
from .geometry import GeodesicError, GeodesicState, geodesic_integrate, t_function
from .jet import JetDomainError
from .metric import MetricError
from .quadrature import QuadratureError, Region, Rule, energy
from .spec import SpecError, load_connection, load_metric, read_spec
from .verify import SUITES, report, run_suite

QUANTITIES = ("ric", "nabla_ric", "rho", "K", "tau", "hopK", "sdast_ric", "sdast_rho",
              "sigma", "T")
SWEEP_QUANTITIES = ("energy", "tau", "tau_std", "max_sdast_ric", "max_hop_k", "max_abs_K")

_S3 = ("xxx", "xxy", "xyy", "yyy")
COLUMNS = {
    "ric": ["ric_xx", "ric_xy", "ric_yy"],
    "nabla_ric": [f"nabla_ric_{i}_{jk}" for i in "xy" for jk in ("xx", "xy", "yy")],
    "rho": ["rho_x", "rho_y"],
    "K": ["K"],
    "tau": ["tau"],
    "hopK": [f"hopK_{c}" for c in _S3],
    "sdast_ric": [f"sdast_ric_{c}" for c in _S3],
    "sdast_rho": ["sdast_rho_xx", "sdast_rho_xy", "sdast_rho_yy"],
    "sigma": ["sigma_x", "sigma_y"],
    "T": ["T"],
}


class CliError(Exception):
    pass


# formatting -----------------------------------------------------------------
def fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    v = float(v) + 0.0   # no negative zero in output
    return "nan" if math.isnan(v) else format(v, ".17g")


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, str) or v is None:
        return v
    v = float(v)
    return None if not math.isfinite(v) else v


def render_table(columns, rows, form):
    if form == "json":
        return json.dumps([{c: _json_value(v) for c, v in zip(columns, r)} for r in rows],
                          indent=1) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# parsing helpers -------------------------------------------------------------
def parse_floats(text, n=None, what="value"):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise CliError(f"cannot parse {what} {text!r}") from None
    if n is not None and len(vals) != n:
        raise CliError(f"{what} needs {n} comma-separated numbers, got {len(vals)}")
    return vals


def parse_tols(items):
    out = {}
    for item in items or []:
        name, sep, val = item.partition("=")
        if not sep:
            raise CliError(f"--tol expects NAME=VALUE, got {item!r}")
        try:
            v = float(val)
        except ValueError:
            raise CliError(f"--tol {name}: {val!r} is not a number") from None
        if not v > 0:
            raise CliError(f"--tol {name}: tolerances must be positive")
        out[name] = v
    return out


def parse_values(text):
    """``a:b:n`` (n points, inclusive) or a comma list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise CliError(f"range {text!r} must be START:STOP:COUNT")
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
        if n < 1:
            raise CliError("range count must be positive")
        return list(np.linspace(a, b, n))
    return parse_floats(text, what="parameter list")


def connection_from_args(args) -> ChartConnection:
    if args.spec and args.family:
        raise CliError("use either --spec or --family, not both")
    if args.spec:
        return load_connection(read_spec(args.spec))
    if args.family:
        try:
            params = json.loads(args.params or "{}")
        except json.JSONDecodeError as e:
            raise CliError(f"--params is not valid JSON: {e}") from None
        return make_family(args.family, params)
    raise CliError("a connection is required: pass --spec PATH or --family NAME")


def points_from_args(args, conn):
    if args.points:
        pts = [parse_floats(p, 2, "point") for p in args.points.split(";") if p.strip()]
        x, y = np.array(pts, dtype=float).T
        return x, y
    if args.grid:
        x0, x1, nx, y0, y1, ny = parse_floats(args.grid, 6, "grid")
        if int(nx) < 1 or int(ny) < 1:
            raise CliError("grid sizes must be positive")
        X, Y = np.meshgrid(np.linspace(x0, x1, int(nx)), np.linspace(y0, y1, int(ny)),
                           indexing="ij")
        return X.ravel(), Y.ravel()
    return conn.domain.sample(args.random, np.random.default_rng(args.seed))


def default_region(conn, args=None):
    if args is not None and args.region:
        x0, x1, y0, y1 = parse_floats(args.region, 4, "region")
        periodic = (bool(args.periodic_x), bool(args.periodic_y))
        if args.margins:
            e1, e2 = parse_floats(args.margins, 2, "margins")
            return Region(x0, x1, y0, y1, periodic=periodic, margins=(e1, e2))
        return Region(x0, x1, y0, y1, periodic=periodic)
    d = conn.domain
    if all(math.isfinite(v) for v in d.x + d.y):
        return Region(d.x[0], d.x[1], d.y[0], d.y[1], periodic=tuple(d.periodic))
    x0, x1, y0, y1 = d.sample_box()
    return Region(x0, x1, y0, y1)


def rules_from_args(args, region):
    rx, ry = region.default_rules()
    if args.nx:
        rx = Rule(rx.kind, args.nx)
    if args.ny:
        ry = Rule(ry.kind, args.ny)
    return (rx, ry)


# eval -----------------------------------------------------------------------
def _v(j):
    return np.asarray(j.value, dtype=float)


def eval_block(conn, x, y, quantities):
    """Values for points already known to lie in the domain."""
    F = conn.jets((x, y), 6, check=False)
    K = moment_k_jets(*F)
    rx, ry = rho_jets(*F)
    tv = _v(K * K - rx * _d(K, 0, 1) + ry * _d(K, 1, 0))
    Kv = _v(K)
    gap = tv - Kv * Kv
    near = np.abs(gap) < epsilon_sing(tv)
    cols = {}
    if "ric" in quantities:
        cols["ric"] = [_v(c) for c in ricci_jets(*F)]
    N = None
    if "nabla_ric" in quantities or "sdast_ric" in quantities:
        N = nabla_ricci_jets(*F)
    if "nabla_ric" in quantities:
        cols["nabla_ric"] = [_v(N[(i, j, k)]) for i in (0, 1) for j, k in ((0, 0), (0, 1), (1, 1))]
    if "rho" in quantities:
        cols["rho"] = [_v(rx), _v(ry)]
    if "K" in quantities:
        cols["K"] = [Kv]
    if "tau" in quantities:
        cols["tau"] = [tv]
    if "hopK" in quantities:
        cols["hopK"] = [_v(c) for c in hop_jets(*F, K)]
    if "sdast_ric" in quantities:
        cols["sdast_ric"] = [_v(c) for c in sdast_ricci_from_nabla(N)]
    if "sdast_rho" in quantities:
        cols["sdast_rho"] = [_v(c) for c in sdast_oneform_jets(*F, (rx, ry))]
    safe = np.where(near, np.nan, gap)
    if "sigma" in quantities:
        with np.errstate(all="ignore"):
            cols["sigma"] = [_v(rx) / safe, _v(ry) / safe]
    if "T" in quantities:
        T = np.full_like(Kv, np.nan)
        for i in range(Kv.size):
            if not near.flat[i]:
                with np.errstate(all="ignore"):
                    T.flat[i] = t_function(Kv.flat[i], tv.flat[i])
        cols["T"] = [T]
    return cols, near


def _eval_chunk(payload):
    conn, x, y, quantities = payload
    cols, near = eval_block(conn, x, y, quantities)
    return {k: [np.asarray(c) for c in v] for k, v in cols.items()}, near


def run_eval(conn, x, y, quantities, jobs=1):
    unknown = [q for q in quantities if q not in QUANTITIES]
    if unknown:
        raise CliError(f"unknown quantity {unknown[0]!r}; choose from {', '.join(QUANTITIES)}")
    n = x.size
    ok = np.asarray(conn.domain.contains(x, y), dtype=bool)
    idx = np.flatnonzero(ok)
    columns = ["x", "y"] + [c for q in quantities for c in COLUMNS[q]] + ["in_domain", "near_singular"]
    data = {c: np.full(n, np.nan) for c in columns[2:-2]}
    near_all = np.zeros(n, dtype=bool)
    evaluable = np.zeros(n, dtype=bool)
    if idx.size:
        chunks = np.array_split(idx, max(1, min(jobs, idx.size)))
        payloads = [(conn, x[c], y[c], tuple(quantities)) for c in chunks]
        if jobs > 1 and len(payloads) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_eval_chunk_safe, payloads))
        else:
            results = [_eval_chunk_safe(p) for p in payloads]
        for c, res in zip(chunks, results):
            if res is None:
                continue
            cols, near = res
            for q, vals in cols.items():
                for name, v in zip(COLUMNS[q], vals):
                    data[name][c] = v
            near_all[c] = near
            evaluable[c] = True
    rows = []
    for i in range(n):
        rows.append([x[i], y[i]] + [data[c][i] for c in columns[2:-2]]
                    + [bool(evaluable[i]), bool(near_all[i])])
    return columns, rows


def _eval_chunk_safe(payload):
    conn, x, y, quantities = payload
    try:
        return _eval_chunk(payload)
    except (JetDomainError, DomainError, ValueError):
        if x.size == 1:
            return None
        # isolate the offending rows
        parts = [_eval_chunk_safe((conn, x[i:i + 1], y[i:i + 1], quantities))
                 for i in range(x.size)]
        if all(p is None for p in parts):
            return None
        out, near = {}, np.zeros(x.size, dtype=bool)
        keys = next(p for p in parts if p is not None)[0].keys()
        for k in keys:
            out[k] = [np.array([p[0][k][m].item() if p is not None else np.nan for p in parts])
                      for m in range(len(COLUMNS[k]))]
        for i, p in enumerate(parts):
            near[i] = bool(p[1].item()) if p is not None else False
        return out, near


def cmd_eval(args):
    conn = connection_from_args(args)
    x, y = points_from_args(args, conn)
    quantities = [q.strip() for q in args.quantities.split(",") if q.strip()]
    if not quantities:
        raise CliError("no quantities requested")
    columns, rows = run_eval(conn, x, y, quantities, args.jobs)
    emit(render_table(columns, rows, args.format), args.out)
    return 0


# verify ---------------------------------------------------------------------
def cmd_verify(args):
    metric = None
    if args.suite == "metric" and args.spec:
        spec = read_spec(args.spec)
        if spec.get("type") != "metric":
            raise CliError("the metric suite takes a metric spec")
        metric = load_metric(spec)
    checks = run_suite(args.suite, seed=args.seed, tol_overrides=parse_tols(args.tol),
                       metric=metric)
    rep = report(args.suite, checks)
    if args.format == "csv":
        text = render_table(["name", "residual", "tol", "passed", "note"],
                            [[c.name, c.residual, c.tol, c.passed, c.note] for c in checks], "csv")
    else:
        text = json.dumps(rep, indent=1) + "\n"
    emit(text, args.out)
    return 0 if rep["passed"] else 1


# geodesic ---------------------------------------------------------------------
def cmd_geodesic(args):
    conn = connection_from_args(args)
    init = GeodesicState(*parse_floats(args.init, 4, "--init"))
    tols = parse_tols(args.tol)
    extra = set(tols) - {"rtol", "atol"}
    if extra:
        raise CliError(f"geodesic accepts --tol rtol=... and atol=..., not {sorted(extra)}")
    traj = geodesic_integrate(conn, init, args.t_max, n_out=args.n_out,
                              rtol=tols.get("rtol", 1e-10), atol=tols.get("atol", 1e-12))
    if args.format == "json":
        text = json.dumps({"status": traj.status, "rows": [
            dict(zip(("t", "x", "y", "xdot", "ydot", "rho_gammadot"), map(_json_value, r)))
            for r in traj.rows()]}, indent=1) + "\n"
    else:
        text = traj.to_csv()
    emit(text, args.out)
    if not traj.completed:
        print(f"geodesic stopped early: {traj.status} at t = {traj.t[-1]:.17g}", file=sys.stderr)
    return 0


# energy ---------------------------------------------------------------------
def cmd_energy(args):
    conn = connection_from_args(args)
    region = default_region(conn, args)
    value = energy(conn, region, rules_from_args(args, region))
    if args.format == "json":
        text = json.dumps({"energy": value}) + "\n"
    else:
        text = "energy\n" + fmt(value) + "\n"
    emit(text, args.out)
    return 0


# sweep ------------------------------------------------------------------------
def sweep_quantity(conn, quantity, samples, seed, region=None):
    if quantity == "energy":
        region = region or default_region(conn)
        return energy(conn, region)
    x, y = conn.domain.sample(samples, np.random.default_rng(seed))
    if quantity == "tau":
        return float(np.mean(tau_fn(conn, (x, y))))
    if quantity == "tau_std":
        return float(np.std(tau_fn(conn, (x, y))))
    if quantity == "max_sdast_ric":
        return float(np.max(np.abs(sdast_ricci(conn, (x, y)).comps)))
    if quantity == "max_hop_k":
        return float(np.max(np.abs(hop_k_closed_form(conn, (x, y)).comps)))
    if quantity == "max_abs_K":
        return float(np.max(np.abs(moment_k(conn, (x, y)))))
    raise CliError(f"unknown sweep quantity {quantity!r}; choose from {', '.join(SWEEP_QUANTITIES)}")


def _sweep_one(payload):
    family, params, quantity, samples, seed, region = payload
    return sweep_quantity(make_family(family, params), quantity, samples, seed, region)


def cmd_sweep(args):
    family = args.family
    if not family:
        raise CliError("sweep needs --family")
    if args.quantity not in SWEEP_QUANTITIES:
        raise CliError(f"unknown sweep quantity {args.quantity!r}; "
                       f"choose from {', '.join(SWEEP_QUANTITIES)}")
    try:
        fixed = json.loads(args.params or "{}")
    except json.JSONDecodeError as e:
        raise CliError(f"--params is not valid JSON: {e}") from None
    names, values = [], []
    for item in args.param or []:
        name, sep, text = item.partition("=")
        if not sep:
            raise CliError(f"--param expects NAME=VALUES, got {item!r}")
        names.append(name)
        values.append(parse_values(text))
    if not names:
        raise CliError("sweep needs at least one --param NAME=VALUES")
    region = None
    if args.region:
        region = default_region(None, args)
    combos = list(itertools.product(*values))
    payloads = [(family, {**fixed, **dict(zip(names, c))}, args.quantity, args.samples,
                 args.seed, region) for c in combos]
    if args.jobs > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_one, payloads))
    else:
        results = [_sweep_one(p) for p in payloads]
    rows = [list(c) + [r] for c, r in zip(combos, results)]
    emit(render_table(names + [args.quantity], rows, args.format), args.out)
    return 0


# parser ---------------------------------------------------------------------
def _globals(p, suppress):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--spec", default=d(None), help="connection spec JSON file")
    p.add_argument("--family", default=d(None),
                   help=f"named family instead of a spec ({', '.join(FAMILY_PARAMS)})")
    p.add_argument("--params", default=d(None), help="family parameters as JSON")
    p.add_argument("--out", default=d(None), help="output file (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=d("csv"))
    p.add_argument("--jobs", type=int, default=d(1))
    p.add_argument("--seed", type=int, default=d(0))
    p.add_argument("--tol", action="append", default=d(None), metavar="NAME=VALUE")


def build_parser():
    parser = argparse.ArgumentParser(prog="sympconn",
                                     description="Symplectic connections on surface charts.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _globals(parser, False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="curvature quantities at points")
    _globals(p, True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--points", help="'x,y;x,y;...'")
    g.add_argument("--grid", help="X0,X1,NX,Y0,Y1,NY")
    g.add_argument("--random", type=int, default=10, help="random domain points (seeded)")
    p.add_argument("--quantities", default="K,rho,tau", help=f"comma list from {','.join(QUANTITIES)}")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("verify", help="run a verification suite")
    _globals(p, True)
    p.add_argument("suite", choices=SUITES)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("geodesic", help="integrate a geodesic, CSV trajectory")
    _globals(p, True)
    p.add_argument("--init", required=True, help="x,y,xdot,ydot")
    p.add_argument("--t-max", type=float, required=True)
    p.add_argument("--n-out", type=int, default=101)
    p.set_defaults(func=cmd_geodesic)

    for name, fn, hlp in (("energy", cmd_energy, "integral of K^2 over a region"),
                          ("sweep", cmd_sweep, "scalar quantity over a family parameter grid")):
        p = sub.add_parser(name, help=hlp)
        _globals(p, True)
        p.add_argument("--region", help="X0,X1,Y0,Y1 (default: the chart domain)")
        p.add_argument("--periodic-x", action="store_true")
        p.add_argument("--periodic-y", action="store_true")
        p.add_argument("--margins", help="E1,E2 trimmed off the x ends")
        p.set_defaults(func=fn)
        if name == "energy":
            p.add_argument("--nx", type=int, help="nodes along x")
            p.add_argument("--ny", type=int, help="nodes along y")
        else:
            p.add_argument("--param", action="append", metavar="NAME=A:B:N|v1,v2")
            p.add_argument("--quantity", default="energy", help=", ".join(SWEEP_QUANTITIES))
            p.add_argument("--samples", type=int, default=50)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "verify" and "--format" not in (argv if argv is not None else sys.argv):
        args.format = "json"
    if args.jobs < 1:
        parser.error("--jobs must be at least 1")
    try:
        return args.func(args)
    except (CliError, SpecError, FamilyError, GeodesicError, QuadratureError,
            MetricError, DomainError, JetDomainError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

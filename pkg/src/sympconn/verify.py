"""Verification suites behind ``sympconn verify``.

Each suite returns a list of :class:`Check`; a check passes when its
residual is at most its tolerance.  Tolerances can be overridden by name.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import expr as ex
from . import operators as op
from .connection import (ChartConnection, Domain, _d, hop_k_closed_form,
                         moment_k, moment_k_jets, nabla_ricci, rho, rho_jets,
                         sdast_ricci, tau)
from .families import (SPHERE_KILLING_CUBE, bourgeois_cahen, busemann,
                        cube_of_exact, cubic_differential, harmonic_deformation,
                        killing_cube_data, quartic, random_polynomial_connection,
                        sphere_family)
from .geometry import rho_sharp_flow, structure_probe
from .metric import (MetricChart, MetricError, builtin_metric, calibrate_star_sign,
                     kahler_moment_residual, levi_civita, rho_holomorphic_residual)
from .quadrature import Region, Rule, energy, grid, integrate, pairing_values, second_variation
from .tensor2d import SymCov

SUITES = ("core", "families", "operators", "metric", "structure")


@dataclass
class Check:
    name: str
    residual: float
    tol: float
    note: str = ""

    @property
    def passed(self):
        return bool(np.isfinite(self.residual) and self.residual <= self.tol)

    def to_json(self):
        d = asdict(self)
        d["residual"] = float(self.residual) if np.isfinite(self.residual) else None
        d["passed"] = self.passed
        return d


def _max(a):
    return float(np.max(np.abs(np.asarray(a, dtype=float))))


def _rel(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))


# core ------------------------------------------------------------------------
def d_rho_residual(conn, at):
    """``|d rho + 2 K Omega| / (1 + |K|)`` from the closed forms."""
    F = conn.jets(at, 4)
    rx, ry = rho_jets(*F)
    K = moment_k_jets(*F)
    r = np.asarray((_d(ry, 1, 0) - _d(rx, 0, 1) + 2.0 * K).value, dtype=float)
    return float(np.max(np.abs(r) / (1.0 + np.abs(np.asarray(K.value, dtype=float)))))


def pipeline_residuals(conn, at):
    """Closed forms against the generic operator route, relative."""
    gen = op.generic_curvature(conn, at)
    nr = nabla_ricci(conn, at)
    return {
        "rho_vs_2_delta_ric": _rel(rho(conn, at).comps, gen["rho"].comps),
        "k_vs_delta_rho": _rel(moment_k(conn, at), gen["K"]),
        "hop_k_vs_generic": _rel(hop_k_closed_form(conn, at).comps, gen["hop_k"].comps),
        "nabla_ric_vs_generic": max(_rel(nr[k], gen["nabla_ricci"][k]) for k in nr),
    }


def suite_core(seed=0, n_conn=10, n_points=100):
    rng = np.random.default_rng(seed)
    worst = {}
    for _ in range(n_conn):
        conn = random_polynomial_connection(rng, 4)
        x, y = conn.domain.sample(n_points, rng)
        vals = {"d_rho_plus_2K_omega": d_rho_residual(conn, (x, y))}
        vals.update(pipeline_residuals(conn, (x[:20], y[:20])))
        ids = op.identity_residuals(conn, (x[:10], y[:10]),
                                    ("x*y", "1+x^2", "y^3-x", "x*y^2"), "x^2*y-y")
        vals.update({f"identity_{k}": v for k, v in ids.items()})
        for k, v in vals.items():
            worst[k] = max(worst.get(k, 0.0), v)
    tols = {"d_rho_plus_2K_omega": 1e-9}
    return [Check(k, v, tols.get(k, 1e-8)) for k, v in worst.items()]


# families -----------------------------------------------------------------------
def sphere_energy_rel(t, rule=None):
    E = energy(sphere_family(t), Region.periodic_rectangle(-1.0, 1.0, 0.0, 2 * math.pi), rule)
    exact = 3 * math.pi * t * t
    return abs(E - exact) / exact if exact else abs(E)


def suite_families(seed=0, n_points=50):
    rng = np.random.default_rng(seed)
    out = []
    a, p, q, t0 = 0.3, 0.5, 0.7, -1.0
    bc = bourgeois_cahen(a, p, q, t0)
    x, y = bc.domain.sample(n_points, rng)
    out.append(Check("bc_K_equals_x_plus_a", _max(moment_k(bc, (x, y)) - x - a), 1e-10))
    out.append(Check("bc_hop_k", _max(hop_k_closed_form(bc, (x, y)).comps), 1e-8))
    tv = tau(bc, (x, y))
    out.append(Check("bc_tau_std", float(np.std(tv)) / (1 + abs(float(np.mean(tv)))), 1e-8))
    # the single component (x, y, y) of 9 delta* Ric is tau - q
    s9 = 9.0 * sdast_ricci(bc, (x, y)).comps
    out.append(Check("bc_9_sdast_ric_xyy_minus_tau_minus_q",
                     _max(s9[2] - (t0 - q)) + _max(s9[[0, 1, 3]]), 1e-8))
    pref = bourgeois_cahen(a, p, t0, t0)
    out.append(Check("bc_preferred_at_q_equals_tau", _max(sdast_ricci(pref, (x, y)).comps), 1e-10))
    out.append(Check("bc_preferred_rho", _max(rho(pref, (x, y)).comps[1] - (t0 - (x + a) ** 2))
                     + _max(rho(pref, (x, y)).comps[0]), 1e-9))

    qc = quartic(0.2, 0.3, -0.1, 0.5)
    x, y = qc.domain.sample(n_points, rng)
    out.append(Check("quartic_hop_k", _max(hop_k_closed_form(qc, (x, y)).comps), 1e-9))
    out.append(Check("quartic_K_equals_x_plus_a", _max(moment_k(qc, (x, y)) - x - 0.2), 1e-10))

    sp = sphere_family(1.0)
    x, y = sp.domain.sample(n_points, rng)
    out.append(Check("sphere_rho_t1", _max(rho(sp, (x, y)).comps[1] - 0.5 * (1 - 3 * x * x))
                     + _max(rho(sp, (x, y)).comps[0]), 1e-9))
    _, nu = killing_cube_data(sphere_family(0.0), ("0", "1-x^2"), (x, y))
    out.append(Check("sphere_nu_equals_4", _max(nu - 4.0), 1e-10))
    out.append(Check("sphere_hop_k", _max(hop_k_closed_form(sp, (x, y), dps=40).comps), 1e-7))
    out.append(Check("sphere_jacobi_killing_cube",
                     _max(op.jacobi(sp, SPHERE_KILLING_CUBE, (x, y), dps=40).comps), 1e-7))
    tv = tau(sp, (x, y))
    out.append(Check("sphere_tau_t1", _max(tv - 0.75), 1e-8))
    for t in (0.0, 0.5, 1.0):
        out.append(Check(f"sphere_energy_t{t}", sphere_energy_rel(t), 1e-6))

    cube = cube_of_exact("x*y+x^3")
    x, y = cube.domain.sample(n_points, rng)
    r = rho(cube, (x, y)).comps
    # Hs(f) = -1 and U = x^2 u'' - 2x(y + u'): rho = 12 Hs df - 2 dU
    out.append(Check("cube_rho_12Hs_df_minus_2dU",
                     _max(r[0] - (-12 * (y + 3 * x * x) + 4 * y)) + _max(r[1] - (-12 * x + 4 * x)), 1e-8))
    out.append(Check("cube_K", _max(moment_k(cube, (x, y))), 1e-9))

    bu = busemann()
    x, y = bu.domain.sample(n_points, rng)
    r = rho(bu, (x, y)).comps
    out.append(Check("busemann_rho_minus_12w2_dw", _max(r[0]) + _max(r[1] + 12 * y * y), 1e-8))
    out.append(Check("busemann_K", _max(moment_k(bu, (x, y))), 1e-9))

    hm = harmonic_deformation("hyperbolic", "1", "0")
    r = rho(hm, (x, y)).comps
    out.append(Check("harmonic_rho_12du", _max(r[0] - 12.0) + _max(r[1]), 1e-8))
    out.append(Check("harmonic_K", _max(moment_k(hm, (x, y))), 1e-9))
    return out


# operators -----------------------------------------------------------------------
TWO_PI = 2 * math.pi
TRIG_CONN = ChartConnection(
    "0.3*sin(x)*cos(y)+0.1", "0.2*cos(x+y)", "0.25*sin(2*y)-0.1*cos(x)", "0.15*sin(x-y)",
    Domain(x=(0.0, TWO_PI), y=(0.0, TWO_PI), periodic=(True, True),
           box=(0.0, TWO_PI, 0.0, TWO_PI)), name="trig")
TORUS = Region(0.0, TWO_PI, 0.0, TWO_PI, periodic=(True, True))
TRAP64 = Rule("trapezoid", 64)
TEST_F, TEST_G = "sin(x)+0.5*cos(2*y)", "cos(x)*sin(y)"
TEST_PI = ("sin(y)", "0.5*cos(x)", "sin(x+y)", "0.3*cos(2*x)")
TEST_PI2 = ("cos(x)", "sin(2*y)", "0.2", "sin(x)*cos(y)")
TEST_ONEFORM = ("cos(y)+sin(2*x)", "sin(x)*cos(y)")


def _partial(f, i, j):
    for _ in range(i):
        f = ex.diff(f, "x")
    for _ in range(j):
        f = ex.diff(f, "y")
    return f


def sampled(components, X, Y):
    return SymCov(np.array([np.broadcast_to(ex.eval_jet(ex.as_expr(c), (X, Y), 0).value, X.shape)
                            for c in components]))


def adjointness_residuals(conn=TRIG_CONN, region=TORUS, rule=TRAP64):
    X, Y, _ = grid(region, rule)
    P = sampled(TEST_PI, X, Y)
    f = ex.compile_expr(ex.parse(TEST_F))
    out = {}
    lhs = pairing_values(op.hop(conn, TEST_F, (X, Y)), P, region, rule)
    rhs = integrate(lambda x, y: f(x, y) * op.hop_adjoint(conn, TEST_PI, (x, y)), region, rule)
    out["adjoint_H"] = abs(lhs - rhs) / abs(lhs)
    lhs = pairing_values(op.lop(conn, TEST_ONEFORM, (X, Y)), P, region, rule)
    rhs = pairing_values(sampled(TEST_ONEFORM, X, Y), op.lop_adjoint(conn, TEST_PI, (X, Y)),
                         region, rule)
    out["adjoint_L"] = abs(lhs - rhs) / abs(lhs)
    lhs = pairing_values(op.hop(conn, TEST_F, (X, Y)), op.hop(conn, TEST_G, (X, Y)), region, rule)
    pb = ex.sub(ex.mul(ex.diff(ex.parse(TEST_F), "x"), ex.diff(ex.parse(TEST_G), "y")),
                ex.mul(ex.diff(ex.parse(TEST_F), "y"), ex.diff(ex.parse(TEST_G), "x")))
    pbf = ex.compile_expr(pb)
    rhs = integrate(lambda x, y: pbf(x, y) * moment_k(conn, (x, y)), region, rule)
    out["adjoint_HH_bracket_K"] = abs(lhs - rhs) / abs(lhs)
    return out


def variation_residuals(conn, P, at, ts=(-0.2, -0.1, 0.1, 0.2)):
    """Coefficients of rho(nabla + tP), K(nabla + tP) against cubic interpolation."""
    ts = np.asarray(ts, dtype=float)
    V = np.vander(ts, 4, increasing=True)
    rv = np.array([rho(conn.deformed(P, t), at).comps for t in ts])
    kv = np.array([moment_k(conn.deformed(P, t), at) for t in ts])
    cr = np.linalg.solve(V, rv.reshape(4, -1)).reshape(rv.shape)
    ck = np.linalg.solve(V, kv.reshape(4, -1)).reshape(kv.shape)
    r = op.variation_rho(conn, P, at)
    k = op.variation_k(conn, P, at)
    return (max(_rel(r[n].comps, cr[n]) for n in range(4)),
            max(_rel(k[n], ck[n]) for n in range(4)))


def second_variation_residual(conn=TRIG_CONN, P=TEST_PI, region=TORUS, rule=TRAP64):
    """Relative gap between the Hessian formula and ``d^2/dt^2 E`` from an exact degree-6 fit."""
    sv = second_variation(conn, P, P, region, rule)
    ts = np.linspace(-0.3, 0.3, 7)
    Es = [energy(conn.deformed(P, t), region, rule) for t in ts]
    c = np.polynomial.polynomial.polyfit(ts, Es, 6)
    return abs(sv - 2 * c[2]) / abs(2 * c[2]), sv, 2 * c[2]


def suite_operators(seed=0, n_points=20):
    rng = np.random.default_rng(seed)
    out = [Check(k, v, 1e-9) for k, v in adjointness_residuals().items()]
    worst_r = worst_k = 0.0
    for _ in range(3):
        conn = random_polynomial_connection(rng, 3)
        P = tuple(ex.unparse(f) for f in random_polynomial_connection(rng, 2).fields)
        at = conn.domain.sample(n_points, rng)
        r, k = variation_residuals(conn, P, at)
        worst_r, worst_k = max(worst_r, r), max(worst_k, k)
    out.append(Check("variation_rho_coefficients", worst_r, 1e-9))
    out.append(Check("variation_k_coefficients", worst_k, 1e-9))
    out.append(Check("second_variation_vs_fit", second_variation_residual()[0], 1e-6))
    X, Y, _ = grid(TORUS, TRAP64)
    jab = pairing_values(op.jacobi(TRIG_CONN, TEST_PI, (X, Y)), sampled(TEST_PI2, X, Y), TORUS, TRAP64)
    half = 0.5 * second_variation(TRIG_CONN, TEST_PI, TEST_PI2, TORUS, TRAP64)
    out.append(Check("jacobi_pairing_vs_half_second_variation", abs(jab - half) / abs(half), 1e-6))
    flat = ChartConnection("0", "0", "0", "0", TRIG_CONN.domain, "flat")
    # at the flat connection H(f) is the third derivative of f, and the
    # second variation along it is 2 <{f, K}, {f, K}> = 0
    f = ex.parse(TEST_F)
    d3 = tuple(ex.unparse(_partial(f, 3 - j, j)) for j in range(4))
    sv = second_variation(flat, d3, d3, TORUS, TRAP64)
    out.append(Check("flat_hamiltonian_second_variation", abs(sv), 1e-8))
    return out


# metric -------------------------------------------------------------------------
CALIBRATION_METRIC = MetricChart("exp(0.1*sin(x)*sin(y))", "0", "exp(-0.1*sin(x)*sin(y))",
                                 Domain(box=(-2.0, 2.0, -2.0, 2.0)), name="calibration")


def suite_metric(seed=0, metric: MetricChart | None = None, n_points=50):
    rng = np.random.default_rng(seed)
    out = []
    m = metric or CALIBRATION_METRIC
    try:
        x, y = m.domain.sample(n_points, rng)
        out.append(Check(f"kahler_2K_equals_laplacian_R[{m.name}]",
                         _max(kahler_moment_residual(m, (x, y))), 1e-7))
    except MetricError as e:
        out.append(Check(f"kahler_2K_equals_laplacian_R[{m.name}]", math.inf, 1e-7, str(e)))
        return out
    if metric is not None:
        return out
    for name in ("sphere", "hyperbolic", "flat"):
        bm = builtin_metric(name)
        lc = levi_civita(bm)
        x, y = bm.domain.sample(n_points, rng)
        out.append(Check(f"levi_civita_K_rho[{name}]",
                         _max(moment_k(lc, (x, y))) + _max(rho(lc, (x, y)).comps), 1e-10))
    sign, res = calibrate_star_sign()
    out.append(Check("star_sign_calibration", res[sign], 1e-9, f"sign {sign:+g}"))
    flat = builtin_metric("flat")
    for label, phi in (("z", ("x", "y")), ("z^2", ("x^2-y^2", "2*x*y"))):
        P = cubic_differential(flat, *phi)
        conn = levi_civita(flat).deformed(P)
        x, y = flat.domain.sample(n_points, rng)
        out.append(Check(f"rho_holomorphic_cubic[{label}]",
                         _max(rho_holomorphic_residual(flat, conn, P, (x, y))), 1e-7))
    return out


# structure --------------------------------------------------------------------
def structure_targets():
    return [
        ("bc_preferred", bourgeois_cahen(0.0, 0.3, -1.0, -1.0)),
        ("bc_critical", bourgeois_cahen(0.0, 0.3, 0.7, -1.0)),
        ("sphere_t1", sphere_family(1.0)),
        ("quartic", quartic(0.1, 0.2, 0.3, 0.4)),
    ]


def structure_points(conn, n, rng, gap=0.1):
    """``n`` points with ``|tau - K^2| > gap``."""
    xs, ys = conn.domain.sample(20 * n, rng)
    tv = tau(conn, (xs, ys))
    K = moment_k(conn, (xs, ys))
    keep = np.abs(tv - K * K) > gap
    return xs[keep][:n], ys[keep][:n]


def structure_residuals(conn, n=6, rng=None, flow_time=0.3):
    rng = rng or np.random.default_rng(0)
    xs, ys = structure_points(conn, n, rng)
    worst = dict(dsigma=0.0, dK_wedge_sigma=0.0, gauss_k=0.0, dT_dt=0.0)
    for x, y in zip(xs, ys):
        pr = structure_probe(conn, (x, y))
        worst["dsigma"] = max(worst["dsigma"], pr.dsigma_residual)
        worst["dK_wedge_sigma"] = max(worst["dK_wedge_sigma"], pr.dK_wedge_sigma_minus_Omega)
        worst["gauss_k"] = max(worst["gauss_k"], pr.gauss_curvature_of_k)
        t, T = rho_sharp_flow(conn, (x, y), flow_time, n_out=7, tau_value=pr.tau)
        worst["dT_dt"] = max(worst["dT_dt"], _max(np.diff(T) / np.diff(t) - 1.0))
    return worst


def suite_structure(seed=0, n_points=6):
    rng = np.random.default_rng(seed)
    tols = dict(dsigma=1e-7, dK_wedge_sigma=1e-7, gauss_k=1e-5, dT_dt=1e-6)
    out = []
    for label, conn in structure_targets():
        for k, v in structure_residuals(conn, n_points, rng).items():
            out.append(Check(f"{label}_{k}", v, tols[k]))
    return out


def run_suite(name, seed=0, tol_overrides=None, metric=None):
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    fn = {"core": suite_core, "families": suite_families, "operators": suite_operators,
          "metric": suite_metric, "structure": suite_structure}[name]
    checks = fn(seed=seed, metric=metric) if name == "metric" else fn(seed=seed)
    for c in checks:
        if tol_overrides and c.name in tol_overrides:
            c.tol = float(tol_overrides[c.name])
    return checks


def report(name, checks):
    return {"suite": name, "passed": all(c.passed for c in checks),
            "checks": [c.to_json() for c in checks]}

"""Closed-form families of critical symplectic connections.

Every constructor returns a :class:`ChartConnection` whose fields are
expression trees, so a family member can be written back out as a
``chart`` connection spec.
"""
from __future__ import annotations

import math

import numpy as np

from . import expr as ex
from .connection import ChartConnection, Domain
from .expr import as_expr, diff
from .metric import MetricChart, builtin_metric, levi_civita


class FamilyError(ValueError):
    pass


def _p(v):
    v = float(v)
    if not math.isfinite(v):
        raise FamilyError(f"parameter must be finite, got {v!r}")
    return f"({v!r})"


def bourgeois_cahen(a=0.0, p=0.0, q=0.0, tau=-1.0) -> ChartConnection:
    """``B = D = 0``, ``A = s/(tau - s^2)``, ``C = -(tau - s^2)(s^2 + p s + q)/6``, ``s = x + a``.

    Critical with ``K = x + a`` and ``rho = (tau - s^2) dy``; preferred iff
    ``q = tau``.  For ``tau < 0`` it is defined on the whole plane.
    """
    s = f"(x+{_p(a)})"
    u = f"({_p(tau)}-{s}^2)"
    A = ex.parse(f"{s}/{u}")
    C = ex.parse(f"-{u}*({s}^2+{_p(p)}*{s}+{_p(q)})/6")
    if tau < 0:
        dom = Domain(box=(-2.0, 2.0, -2.0, 2.0))
    else:
        dom = Domain(exclusions=((ex.parse(u), 1e-8 * (1 + abs(tau))),),
                     box=(-2.0, 2.0, -2.0, 2.0))
    return ChartConnection(A, ex.ZERO, C, ex.ZERO, dom,
                           name=f"bourgeois-cahen(a={a},p={p},q={q},tau={tau})")


def quartic(a=0.0, b=0.0, c=0.0, d=0.0) -> ChartConnection:
    """``A = B = D = 0``, ``C = x^4/24 + a x^3/6 + b x^2/2 + c x + d``; flat-type, ``K = x + a``."""
    C = ex.parse(f"x^4/24+{_p(a)}*x^3/6+{_p(b)}*x^2/2+{_p(c)}*x+{_p(d)}")
    return ChartConnection(ex.ZERO, ex.ZERO, C, ex.ZERO, Domain(box=(-2.0, 2.0, -2.0, 2.0)),
                           name=f"quartic(a={a},b={b},c={c},d={d})")


def sphere_family(t=1.0) -> ChartConnection:
    """Round-sphere Levi-Civita connection plus ``t`` times the Killing cube.

    ``A = x/(1-x^2)``, ``C = x(1-x^2) + (t/4)(1-x^2)^2`` on ``|x| < 1``, y periodic.
    """
    A = ex.parse("x/(1-x^2)")
    C = ex.parse(f"x*(1-x^2)+{_p(t)}/4*(1-x^2)^2")
    dom = builtin_metric("sphere").domain
    return ChartConnection(A, ex.ZERO, C, ex.ZERO, dom, name=f"sphere(t={t})")


SPHERE_KILLING_CUBE = ("0", "0", "0", "(1-x^2)^2/4")


def cube_of_exact(f, domain=None) -> ChartConnection:
    """Flat connection deformed by ``df (x) df (x) df``."""
    f = as_expr(f)
    fx, fy = diff(f, "x"), diff(f, "y")
    sq = ex.mul
    A = sq(sq(fx, fx), fy)
    B = ex.neg(sq(sq(fx, fx), fx))
    C = sq(sq(fy, fy), fy)
    D = ex.neg(sq(fx, sq(fy, fy)))
    return ChartConnection(A, B, C, D, domain or Domain(box=(-1.0, 1.0, -1.0, 1.0)),
                           name=f"cube({ex.unparse(f)})")


def hessian_determinant(f):
    f = as_expr(f)
    fxx, fxy, fyy = diff(diff(f, "x"), "x"), diff(diff(f, "x"), "y"), diff(diff(f, "y"), "y")
    return ex.sub(ex.mul(fxx, fyy), ex.mul(fxy, fxy))


def u_of_f(f):
    """``f_x^2 f_yy - 2 f_x f_y f_xy + f_y^2 f_xx``."""
    f = as_expr(f)
    fx, fy = diff(f, "x"), diff(f, "y")
    fxx, fxy, fyy = diff(fx, "x"), diff(fx, "y"), diff(fy, "y")
    return ex.total([ex.mul(ex.mul(fx, fx), fyy),
                     ex.mul(-2.0, ex.mul(ex.mul(fx, fy), fxy)),
                     ex.mul(ex.mul(fy, fy), fxx)])


def busemann() -> ChartConnection:
    """Hyperbolic Levi-Civita connection in (u, w), w < 0, deformed by ``d(-w)^3``.

    Only ``C`` changes, by ``-1``.
    """
    base = levi_civita(builtin_metric("hyperbolic"))
    return base.deformed(("0", "0", "0", "-1"), name="busemann")


def _metric(metric):
    if isinstance(metric, MetricChart):
        return metric
    return builtin_metric(str(metric))


def _max_abs(node, x, y):
    return float(np.max(np.abs(ex.eval_jet(node, (x, y), 0).value)))


def harmonic_deformation(metric, Xu, Xw, tol=1e-8) -> ChartConnection:
    """Levi-Civita connection plus ``Pi_ijk = 3 X_(i g_jk)`` for a harmonic one-form X."""
    m = _metric(metric)
    Xu, Xw = as_expr(Xu), as_expr(Xw)
    x, y = m.domain.sample(20, np.random.default_rng(0))
    closed = ex.sub(diff(Xw, "x"), diff(Xu, "y"))
    # det g = 1, so the codifferential is d_i(g^ij X_j)
    vx = ex.sub(ex.mul(m.g22, Xu), ex.mul(m.g12, Xw))
    vy = ex.sub(ex.mul(m.g11, Xw), ex.mul(m.g12, Xu))
    coclosed = ex.add(diff(vx, "x"), diff(vy, "y"))
    res = max(_max_abs(closed, x, y), _max_abs(coclosed, x, y))
    if res > tol:
        raise FamilyError(f"one-form is not harmonic for this metric (residual {res:.3e})")
    g11, g12, g22 = m.g11, m.g12, m.g22
    mul = ex.mul
    pi = (mul(3.0, mul(Xu, g11)),
          ex.add(mul(2.0, mul(Xu, g12)), mul(Xw, g11)),
          ex.add(mul(Xu, g22), mul(2.0, mul(Xw, g12))),
          mul(3.0, mul(Xw, g22)))
    return levi_civita(m).deformed(pi, name=f"harmonic({m.name})")


def harmonic_pi(metric, Xu, Xw):
    m = _metric(metric)
    Xu, Xw = as_expr(Xu), as_expr(Xw)
    mul = ex.mul
    return (mul(3.0, mul(Xu, m.g11)),
            ex.add(mul(2.0, mul(Xu, m.g12)), mul(Xw, m.g11)),
            ex.add(mul(Xu, m.g22), mul(2.0, mul(Xw, m.g12))),
            mul(3.0, mul(Xw, m.g22)))


def cubic_differential(metric, phi_re, phi_im, tol=1e-8):
    """Chart components of ``Re(phi dz^3)`` with z an isothermal coordinate.

    For the builtin hyperbolic chart ``z = u + i v`` with ``v = -1/w``; for the
    builtin sphere chart ``z = artanh(x) + i y``; otherwise the chart
    coordinates are taken to be isothermal.
    """
    m = _metric(metric)
    re, im = as_expr(phi_re), as_expr(phi_im)
    xs, ys = np.random.default_rng(0).uniform(-0.8, 0.8, (2, 20))
    cr = max(_max_abs(ex.sub(diff(re, "x"), diff(im, "y")), xs, ys),
             _max_abs(ex.add(diff(re, "y"), diff(im, "x")), xs, ys))
    if cr > tol:
        raise FamilyError("phi is not holomorphic (Cauchy-Riemann residual "
                          f"{cr:.3e})")
    comps = [re, ex.neg(im), ex.neg(re), im]
    if m.name == "hyperbolic":
        sub = {"y": ex.parse("-1/y")}
        jac = ex.parse("1/y^2")       # d v / d w
        comps = [ex.mul(ex.substitute(c, sub), ex.power(jac, float(n)))
                 for n, c in enumerate(comps)]
    elif m.name == "sphere":
        sub = {"x": ex.parse("0.5*log((1+x)/(1-x))")}
        jac = ex.parse("1/(1-x^2)")   # d s / d x
        comps = [ex.mul(ex.substitute(c, sub), ex.power(jac, float(3 - n)))
                 for n, c in enumerate(comps)]
    return tuple(comps)


def cubic_diff_deformation(metric, phi_re, phi_im) -> ChartConnection:
    """Levi-Civita connection plus the real part of a holomorphic cubic differential."""
    m = _metric(metric)
    return levi_civita(m).deformed(cubic_differential(m, phi_re, phi_im),
                                   name=f"cubic-diff({m.name})")


def random_polynomial_connection(rng, degree=4, box=(-1.0, 1.0, -1.0, 1.0)):
    """A, B, C, D random polynomials of total degree ``degree``, coefficients in [-1, 1]."""
    fields = []
    for _ in range(4):
        terms = []
        for i in range(degree + 1):
            for j in range(degree + 1 - i):
                c = rng.uniform(-1.0, 1.0)
                terms.append(ex.mul(c, ex.mul(ex.power(ex.Var("x"), float(i)),
                                              ex.power(ex.Var("y"), float(j)))))
        fields.append(ex.total(terms))
    return ChartConnection(*fields, domain=Domain(box=box), name="random-polynomial")


def killing_cube_data(base: ChartConnection, Z, at):
    """``gamma = D_p Z^p`` and ``nu = gamma^2 + 4 Z^a Z^b R_ab`` for a one-form Z."""
    from .operators import _frame, delta, field_jets, ricci_generic, tensor_product
    from .tensor2d import pairing_full
    at, G = _frame(base, at, 1)
    z = field_jets(Z, at, 1)
    gam = delta(G, z)[()]
    R = ricci_generic(G)
    nu = gam * gam + 4.0 * pairing_full(R, tensor_product(z, z))
    return np.asarray(gam.value), np.asarray(nu.value)


FAMILY_PARAMS = {
    "bourgeois-cahen": ("a", "p", "q", "tau"),
    "quartic": ("a", "b", "c", "d"),
    "sphere": ("t",),
    "cube": ("f",),
    "busemann": (),
    "harmonic": ("metric", "Xu", "Xw"),
    "cubic-diff": ("metric", "phi_re", "phi_im"),
}


def make_family(name: str, params: dict) -> ChartConnection:
    if name not in FAMILY_PARAMS:
        raise FamilyError(f"unknown family {name!r}; known: {sorted(FAMILY_PARAMS)}")
    allowed = FAMILY_PARAMS[name]
    extra = set(params) - set(allowed)
    if extra:
        raise FamilyError(f"unknown parameters for {name}: {sorted(extra)}")
    if name == "bourgeois-cahen":
        return bourgeois_cahen(**{k: float(v) for k, v in params.items()})
    if name == "quartic":
        return quartic(**{k: float(v) for k, v in params.items()})
    if name == "sphere":
        return sphere_family(float(params.get("t", 1.0)))
    if name == "cube":
        return cube_of_exact(params["f"])
    if name == "busemann":
        return busemann()
    if name == "harmonic":
        return harmonic_deformation(params.get("metric", "hyperbolic"),
                                    params.get("Xu", "1"), params.get("Xw", "0"))
    return cubic_diff_deformation(params.get("metric", "flat"),
                                  params["phi_re"], params["phi_im"])

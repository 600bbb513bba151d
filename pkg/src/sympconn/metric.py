"""Riemannian metrics of unit determinant on a chart.

A metric with ``det g = 1`` has ``dx ^ dy`` as its volume form, so its
Levi-Civita connection is symplectic.  Curvature here is computed from the
metric jets directly (Brioschi's formula), which keeps it independent of
the connection formulas.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .connection import ChartConnection, Domain, _at, moment_k_jets, rho_jets
from .expr import Expr, as_expr, eval_jet

# Sign s in (*a)_i = s J_i^p a_p; fixed by calibrate_star_sign().
STAR_SIGN = -1.0


class MetricError(ValueError):
    pass


class VolumeNotParallel(MetricError):
    pass


@dataclass(frozen=True)
class MetricChart:
    g11: Expr
    g12: Expr
    g22: Expr
    domain: Domain = field(default_factory=Domain)
    name: str = "metric"

    def __post_init__(self):
        for k in ("g11", "g12", "g22"):
            object.__setattr__(self, k, as_expr(getattr(self, k)))

    def jets(self, at, order):
        return tuple(eval_jet(g, at, order) for g in (self.g11, self.g12, self.g22))

    def det_residual(self, n=50, seed=0):
        x, y = self.domain.sample(n, np.random.default_rng(seed))
        E, F, G = self.jets((x, y), 0)
        return float(np.max(np.abs(np.asarray((E * G - F * F - 1.0).value))))

    def to_spec(self):
        return {"type": "metric", "g11": ex.unparse(self.g11),
                "g12": ex.unparse(self.g12), "g22": ex.unparse(self.g22),
                "domain": self.domain.to_json()}


def builtin_metric(name: str) -> MetricChart:
    """``sphere``: (1-x^2)^-1 dx^2 + (1-x^2) dy^2 with y periodic.

    ``hyperbolic``: w^2 du^2 + w^-2 dw^2 on w < 0, chart variables (u, w) = (x, y).
    ``flat``: dx^2 + dy^2.
    """
    if name == "sphere":
        return MetricChart("1/(1-x^2)", "0", "1-x^2",
                           Domain(x=(-1.0, 1.0), y=(0.0, 2 * math.pi),
                                  periodic=(False, True),
                                  box=(-0.99, 0.99, 0.0, 2 * math.pi)),
                           name="sphere")
    if name == "hyperbolic":
        return MetricChart("y^2", "0", "1/y^2",
                           Domain(y=(-math.inf, 0.0), box=(-1.0, 1.0, -2.0, -0.5)),
                           name="hyperbolic")
    if name == "flat":
        return MetricChart("1", "0", "1", Domain(box=(-1.0, 1.0, -1.0, 1.0)), name="flat")
    raise MetricError(f"unknown builtin metric {name!r}")


# jet-level geometry ---------------------------------------------------------------
def _inverse(E, F, G):
    det = E * G - F * F
    inv = 1.0 / det
    return G * inv, -F * inv, E * inv


def christoffel_jets(E, F, G):
    """Levi-Civita ``Gam[k][i][j]`` with the true inverse metric."""
    g = ((E, F), (F, G))
    gi11, gi12, gi22 = _inverse(E, F, G)
    gi = ((gi11, gi12), (gi12, gi22))
    dg = [[[g[a][b].derivative(*((1, 0) if c == 0 else (0, 1))) for c in (0, 1)]
           for b in (0, 1)] for a in (0, 1)]   # dg[a][b][c] = d_c g_ab
    out = [[[None, None], [None, None]], [[None, None], [None, None]]]
    for k in (0, 1):
        for i in (0, 1):
            for j in (0, 1):
                v = 0.0
                for l in (0, 1):
                    v = v + gi[k][l] * (dg[j][l][i] + dg[i][l][j] - dg[i][j][l])
                out[k][i][j] = 0.5 * v
    return out


def gauss_curvature_jets(E, F, G):
    """Brioschi's formula for the Gauss curvature."""
    Eu, Ev = E.derivative(1, 0), E.derivative(0, 1)
    Fu, Fv = F.derivative(1, 0), F.derivative(0, 1)
    Gu, Gv = G.derivative(1, 0), G.derivative(0, 1)
    Evv, Fuv, Guu = E.derivative(0, 2), F.derivative(1, 1), G.derivative(2, 0)

    def det3(m):
        return (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))

    m1 = [[-0.5 * Evv + Fuv - 0.5 * Guu, 0.5 * Eu, Fu - 0.5 * Ev],
          [Fv - 0.5 * Gu, E, F],
          [0.5 * Gv, F, G]]
    m2 = [[0.0 * E, 0.5 * Ev, 0.5 * Gu],
          [0.5 * Ev, E, F],
          [0.5 * Gu, F, G]]
    w = E * G - F * F
    return (det3(m1) - det3(m2)) * (1.0 / (w * w))


def laplacian_jets(E, F, G, f):
    """``g^ij (d_i d_j f - Gam^k_ij d_k f)``."""
    gi11, gi12, gi22 = _inverse(E, F, G)
    gi = ((gi11, gi12), (gi12, gi22))
    Gam = christoffel_jets(E, F, G)
    df = (f.derivative(1, 0), f.derivative(0, 1))
    hess = ((f.derivative(2, 0), f.derivative(1, 1)), (f.derivative(1, 1), f.derivative(0, 2)))
    v = 0.0
    for i in (0, 1):
        for j in (0, 1):
            v = v + gi[i][j] * (hess[i][j] - Gam[0][i][j] * df[0] - Gam[1][i][j] * df[1])
    return v


def complex_structure_jets(E, F, G):
    """``J[i][p] = J_i^p`` with ``g_ij = -J_i^p Omega_pj``."""
    return ((-F, E), (-G, F))


def hodge_star_jets(E, F, G, a, sign=None):
    s = STAR_SIGN if sign is None else sign
    J = complex_structure_jets(E, F, G)
    return tuple(s * (J[i][0] * a[0] + J[i][1] * a[1]) for i in (0, 1))


def cubic_norm_jets(E, F, G, P):
    """``|P|^2_g`` for a symmetric 3-tensor given as a full dict."""
    gi11, gi12, gi22 = _inverse(E, F, G)
    gi = ((gi11, gi12), (gi12, gi22))
    idx = [(i, j, k) for i in (0, 1) for j in (0, 1) for k in (0, 1)]
    v = 0.0
    for a in idx:
        for b in idx:
            v = v + gi[a[0]][b[0]] * gi[a[1]][b[1]] * gi[a[2]][b[2]] * P[a] * P[b]
    return v


# public functions -------------------------------------------------------------------
def levi_civita(metric: MetricChart, n_check=30, tol=1e-10, seed=0) -> ChartConnection:
    """Levi-Civita connection as a symplectic connection (A, B, C, D).

    Raises :class:`VolumeNotParallel` when ``dx ^ dy`` is not parallel,
    i.e. the determinant is not identically one.
    """
    g = ((metric.g11, metric.g12), (metric.g12, metric.g22))
    gi = ((metric.g22, ex.neg(metric.g12)), (ex.neg(metric.g12), metric.g11))
    var = ("x", "y")

    def gam(k, i, j):
        terms = []
        for l in (0, 1):
            inner = ex.sub(ex.add(ex.diff(g[j][l], var[i]), ex.diff(g[i][l], var[j])),
                           ex.diff(g[i][j], var[l]))
            terms.append(ex.mul(gi[k][l], inner))
        return ex.mul(0.5, ex.total(terms))

    conn = ChartConnection(A=gam(0, 0, 0), B=gam(1, 0, 0), C=gam(0, 1, 1),
                           D=gam(1, 1, 1), domain=metric.domain,
                           name=f"levi-civita({metric.name})")
    x, y = metric.domain.sample(n_check, np.random.default_rng(seed))
    E, F, G = metric.jets((x, y), 1)
    true = christoffel_jets(E, F, G)
    A, B, C, D = conn.jets((x, y), 0)
    checks = [true[0][0][0] - A, true[1][0][0] - B, true[0][1][1] - C, true[1][1][1] - D,
              true[0][0][1] + D, true[1][0][1] + A]
    res = max(float(np.max(np.abs(np.asarray(c.value)))) for c in checks)
    if res > tol:
        raise VolumeNotParallel(
            f"volume not parallel: Levi-Civita connection of {metric.name} does not "
            f"preserve dx^dy (residual {res:.3e}); the metric must have det g = 1")
    return conn


def scalar_curvature(metric: MetricChart, at):
    x, y = _at(at)
    return np.asarray((2.0 * gauss_curvature_jets(*metric.jets((x, y), 2))).value)


def laplacian(metric: MetricChart, f, at):
    x, y = _at(at)
    E, F, G = metric.jets((x, y), 2)
    return np.asarray(laplacian_jets(E, F, G, eval_jet(as_expr(f), (x, y), 2)).value)


def kahler_moment_residual(metric: MetricChart, at, conn=None):
    """``|2 K(D) - Laplacian(R_g)|`` for the Levi-Civita connection D."""
    x, y = _at(at)
    conn = conn or levi_civita(metric)
    K = np.asarray(moment_k_jets(*conn.jets((x, y), 3)).value)
    E, F, G = metric.jets((x, y), 4)
    Rg = 2.0 * gauss_curvature_jets(E, F, G)
    lap = np.asarray(laplacian_jets(E, F, G, Rg).value)
    return np.abs(2.0 * K - lap)


def hodge_star_oneform(metric: MetricChart, a, at, sign=None):
    """Hodge star of a one-form given by values ``(a_x, a_y)``."""
    x, y = _at(at)
    E, F, G = metric.jets((x, y), 0)
    return np.array([np.asarray(v.value if hasattr(v, "value") else v)
                     for v in hodge_star_jets(E, F, G, a, sign)])


def calibrate_star_sign(metric=None, conn=None, n=50, seed=0):
    """Pick the sign for which ``rho(D) = -*dR_g`` holds for a Kaehler metric.

    Returns ``(sign, residuals)`` where ``residuals`` maps each candidate
    sign to the maximal residual over ``n`` random points.
    """
    if metric is None:
        metric = MetricChart("exp(0.1*sin(x)*sin(y))", "0", "exp(-0.1*sin(x)*sin(y))",
                             Domain(box=(-2.0, 2.0, -2.0, 2.0)), name="calibration")
    conn = conn or levi_civita(metric)
    x, y = metric.domain.sample(n, np.random.default_rng(seed))
    rx, ry = rho_jets(*conn.jets((x, y), 2))
    E, F, G = metric.jets((x, y), 3)
    Rg = 2.0 * gauss_curvature_jets(E, F, G)
    dR = (Rg.derivative(1, 0), Rg.derivative(0, 1))
    E0, F0, G0 = (j.truncate(0) for j in (E, F, G))
    res = {}
    for s in (1.0, -1.0):
        st = hodge_star_jets(E0, F0, G0, dR, sign=s)
        res[s] = max(float(np.max(np.abs(np.asarray((r + t).value))))
                     for r, t in zip((rx, ry), st))
    best = min(res, key=res.get)
    return best, res


def cubic_norm(metric: MetricChart, P, at):
    from .operators import field_jets
    x, y = _at(at)
    return np.asarray(cubic_norm_jets(*metric.jets((x, y), 0),
                                      field_jets(P, (x, y), 0)).value)


def holomorphicity_residual(metric: MetricChart, P, at):
    """Max of the g-trace and the g-divergence of a symmetric 3-tensor."""
    from .operators import field_jets
    x, y = _at(at)
    E, F, G = metric.jets((x, y), 1)
    gi11, gi12, gi22 = _inverse(E, F, G)
    gi = ((gi11, gi12), (gi12, gi22))
    T = field_jets(P, (x, y), 1)
    Gam = christoffel_jets(E, F, G)
    tr = []
    for k in (0, 1):
        v = 0.0
        for i in (0, 1):
            for j in (0, 1):
                v = v + gi[i][j] * T[(i, j, k)]
        tr.append(v)
    div = []
    for j in (0, 1):
        for k in (0, 1):
            v = 0.0
            for a in (0, 1):
                for i in (0, 1):
                    d = T[(i, j, k)].derivative(*((1, 0) if a == 0 else (0, 1)))
                    for p in (0, 1):
                        d = d - Gam[p][a][i] * T[(p, j, k)] - Gam[p][a][j] * T[(i, p, k)] \
                            - Gam[p][a][k] * T[(i, j, p)]
                    v = v + gi[i][a] * d
            div.append(v)
    return max(float(np.max(np.abs(np.asarray(t.value)))) for t in tr + div)


def rho_holomorphic_residual(metric: MetricChart, conn: ChartConnection, P, at):
    """``|rho(nabla) - *d(|P|^2_g - R_g)|`` for ``nabla = D + P``."""
    from .operators import field_jets
    x, y = _at(at)
    rx, ry = rho_jets(*conn.jets((x, y), 2))
    E, F, G = metric.jets((x, y), 3)
    q = cubic_norm_jets(E, F, G, field_jets(P, (x, y), 1)) - 2.0 * gauss_curvature_jets(E, F, G)
    dq = (q.derivative(1, 0), q.derivative(0, 1))
    st = hodge_star_jets(*(j.truncate(0) for j in (E, F, G)), dq)
    return np.maximum(np.abs(np.asarray((rx - st[0]).value)),
                      np.abs(np.asarray((ry - st[1]).value)))

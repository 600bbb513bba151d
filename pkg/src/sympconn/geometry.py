"""Geodesics and the structure of critical connections.

Geodesics solve::

    x'' + A x'^2 - 2 D x' y' + C y'^2 = 0
    y'' + B x'^2 - 2 A x' y' + D y'^2 = 0

On a critical connection with conserved constant ``tau`` the one-form
``sigma = rho / (tau - K^2)`` is closed, ``dK ^ sigma = Omega``, and with
``dT = dK / (tau - K^2)`` the metric ``k = dT^2 + sigma^2`` is flat.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, solve_ivp

from . import expr as ex
from .connection import (ChartConnection, _at, _d, epsilon_sing, hop_jets,
                         hop_k_closed_form,
                         moment_k_jets, rho, rho_jets)
from .jet import Jet2, jet_apply
from .metric import gauss_curvature_jets
from .tensor2d import SymCov

RTOL, ATOL, FIRST_STEP, MAX_STEP = 1e-10, 1e-12, 1e-3, 0.1
BLOWUP = 1e150
CRITICAL_TOL = 1e-6


class GeodesicError(ValueError):
    pass


class DegeneratePoint(ValueError):
    pass


@dataclass(frozen=True)
class GeodesicState:
    x: float
    y: float
    xdot: float
    ydot: float
    t: float = 0.0

    def __post_init__(self):
        for v in (self.x, self.y, self.xdot, self.ydot, self.t):
            if not math.isfinite(v):
                raise GeodesicError("initial state must be finite")


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    xdot: np.ndarray
    ydot: np.ndarray
    status: str          # "completed", "domain-exit", "blow-up" or "step-collapse"
    message: str = ""
    rho_gammadot: np.ndarray | None = None

    @property
    def completed(self):
        return self.status == "completed"

    def rows(self):
        rg = self.rho_gammadot if self.rho_gammadot is not None else np.full_like(self.t, np.nan)
        return list(zip(self.t, self.x, self.y, self.xdot, self.ydot, rg))

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "x", "y", "xdot", "ydot", "rho_gammadot"])
        for row in self.rows():
            w.writerow([format(float(v), ".17g") for v in row])
        return buf.getvalue()


def _rhs(conn):
    A, B, C, D = conn.compiled("math")

    def f(t, s):
        x, y, u, v = s
        a, b, c, d = A(x, y), B(x, y), C(x, y), D(x, y)
        return [u, v,
                -(a * u * u - 2.0 * d * u * v + c * v * v),
                -(b * u * u - 2.0 * a * u * v + d * v * v)]
    return f


def _events(conn):
    dom = conn.domain
    bounds = []
    if not dom.periodic[0]:
        bounds += [(0, dom.x[0], 1.0), (0, dom.x[1], -1.0)]
    if not dom.periodic[1]:
        bounds += [(1, dom.y[0], 1.0), (1, dom.y[1], -1.0)]
    excl = [(ex.compile_expr(e, "math"), eps) for e, eps in dom.exclusions]

    def inside(t, s):
        m = math.inf
        for axis, b, sgn in bounds:
            if math.isfinite(b):
                m = min(m, sgn * (s[axis] - b))
        for f, eps in excl:
            m = min(m, abs(f(s[0], s[1])) - eps)
        return m if math.isfinite(m) else 1.0
    inside.terminal = True
    inside.direction = -1

    def blowup(t, s):
        return BLOWUP - max(abs(v) for v in s)
    blowup.terminal = True
    blowup.direction = -1
    return [inside, blowup]


def geodesic_integrate(conn: ChartConnection, init: GeodesicState, t_max: float,
                       n_out: int = 1001, rtol=RTOL, atol=ATOL,
                       first_step=FIRST_STEP, max_step=MAX_STEP,
                       with_rho=True) -> Trajectory:
    """Integrate a geodesic with an embedded Runge-Kutta 8(5,3) pair.

    Stops early with a tagged status on leaving the domain, on state
    blow-up or when the step size collapses.
    """
    if not isinstance(init, GeodesicState):
        init = GeodesicState(*init)
    if not conn.domain.contains(init.x, init.y):
        raise GeodesicError(f"initial point ({init.x}, {init.y}) is outside the domain")
    if not (t_max > init.t):
        raise GeodesicError("t_max must exceed the initial time")
    if rtol < 1e-14 or atol <= 0:
        raise GeodesicError("tolerance unachievable in double precision")
    t_eval = np.linspace(init.t, t_max, max(int(n_out), 2))
    sol = solve_ivp(_rhs(conn), (init.t, t_max), [init.x, init.y, init.xdot, init.ydot],
                    method="DOP853", t_eval=t_eval, events=_events(conn),
                    rtol=rtol, atol=atol, first_step=first_step, max_step=max_step)
    if sol.status == 1:
        status = "domain-exit" if len(sol.t_events[0]) else "blow-up"
    elif sol.status == -1:
        status = "step-collapse"
    else:
        status = "completed"
    x, y, u, v = sol.y
    traj = Trajectory(sol.t, x, y, u, v, status, sol.message)
    if with_rho and len(sol.t):
        r = rho(conn, (x, y))
        traj.rho_gammadot = r.comps[0] * u + r.comps[1] * v
    return traj


def _integrate_one(args):
    conn, init, t_max, kw = args
    return geodesic_integrate(conn, init, t_max, **kw)


def integrate_many(conn, inits, t_max, jobs=1, **kw):
    """Independent trajectories, optionally across worker processes; order preserved."""
    work = [(conn, s, t_max, kw) for s in inits]
    if jobs <= 1:
        return [_integrate_one(w) for w in work]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_integrate_one, work))


def conserved_rho_along(conn: ChartConnection, traj: Trajectory) -> float:
    """``max |rho(gamma') - rho(gamma')(0)|`` along the trajectory."""
    rg = traj.rho_gammadot
    if rg is None:
        r = rho(conn, (traj.x, traj.y))
        rg = r.comps[0] * traj.xdot + r.comps[1] * traj.ydot
    return float(np.max(np.abs(rg - rg[0])))


def bc_first_integral(traj: Trajectory, tau=-1.0, a=0.0):
    """``(tau - (x+a)^2) y'``, constant along every geodesic of the BC family."""
    s = traj.x + a
    return (tau - s * s) * traj.ydot


def bc_energy_drift(traj: Trajectory, tau=-1.0, p=0.0, q=0.0, a=0.0) -> float:
    """Drift of ``u'^2 + g(u)`` where ``x + a = sqrt(-tau) sinh u``.

    ``u'' = f(u) = -(r^2/6)(-tau sinh^2 u + p sqrt(-tau) sinh u + q) / (sqrt(-tau) cosh u)^3``
    and ``g(u) = -2 int_0^u f``.
    """
    if tau >= 0:
        raise GeodesicError("the hyperbolic substitution needs tau < 0")
    s = math.sqrt(-tau)
    r = float(bc_first_integral(traj, tau, a)[0])
    u = np.arcsinh((traj.x + a) / s)
    udot = traj.xdot / (s * np.cosh(u))

    def f(w):
        sh = math.sinh(w)
        return -(r * r / 6.0) * (-tau * sh * sh + p * s * sh + q) / (s * math.cosh(w)) ** 3

    g = np.array([-2.0 * quad(f, 0.0, w, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
                  for w in u])
    E = udot ** 2 + g
    return float(np.max(np.abs(E - E[0])))


# structure theory --------------------------------------------------------------
@dataclass(frozen=True)
class StructureProbe:
    point: tuple
    tau: float
    K: float
    sigma: SymCov
    dsigma_residual: float
    dK_wedge_sigma_minus_Omega: float
    k_metric: np.ndarray
    gauss_curvature_of_k: float
    T_value: float


def t_function(K, tau):
    """``T`` with ``dT = dK / (tau - K^2)``, on jets or numbers.

    ``tau > 0``: ``artanh(K/sqrt(tau))/sqrt(tau)`` inside ``K^2 < tau``,
    ``arcoth`` outside; ``tau < 0``: ``arccot(K/sqrt|tau|)/sqrt|tau|``;
    ``tau = 0``: ``1/K``.
    """
    if tau > 0:
        s = math.sqrt(tau)
        # both branches equal log|(s + K)/(s - K)| / (2 s)
        ratio = (s + K) / (s - K)
        if isinstance(K, Jet2):
            sign = np.sign(np.asarray(ratio.value, dtype=float))
            return jet_apply("log", ratio * sign) * (0.5 / s)
        return np.log(np.abs(ratio)) / (2 * s)
    if tau < 0:
        s = math.sqrt(-tau)
        if isinstance(K, Jet2):
            return (jet_apply("atan", K * (1.0 / s)) * -1.0 + math.pi / 2) * (1.0 / s)
        return (math.pi / 2 - np.arctan(K / s)) / s
    return 1.0 / K


def _scalar(v):
    return float(np.ravel(np.asarray(v, dtype=float))[0])


def structure_probe(conn: ChartConnection, at, tau_value=None,
                    critical_tol=CRITICAL_TOL) -> StructureProbe:
    """sigma, its residuals, T and the curvature of ``k`` at one point."""
    x, y = _at(at)
    if x.size != 1:
        raise ValueError("structure_probe takes a single point")
    F = conn.jets((x, y), 6)
    K = moment_k_jets(*F)
    hk = hop_jets(*F, K)
    crit = max(abs(_scalar(c.value)) for c in hk)
    if crit > critical_tol:
        # separate roundoff in the sixth derivatives from genuine non-criticality
        crit = float(np.max(np.abs(hop_k_closed_form(conn, (x, y), dps=40).comps)))
    if crit > critical_tol:
        raise DegeneratePoint(f"connection is not critical here (|H(K)| = {crit:.3e})")
    rx, ry = rho_jets(*F)
    if tau_value is None:
        tau_value = _scalar((K * K - rx * _d(K, 0, 1) + ry * _d(K, 1, 0)).value)
    gap = tau_value - K * K
    if abs(_scalar(gap.value)) <= _scalar(epsilon_sing(tau_value)):
        raise DegeneratePoint(f"degenerate point: |tau - K^2| = {abs(_scalar(gap.value)):.3e}")
    inv = jet_apply("reciprocal", gap)
    sx, sy = rx * inv, ry * inv
    dsig = _d(sy, 1, 0) - _d(sx, 0, 1)
    wedge = _d(K, 1, 0) * sy - _d(K, 0, 1) * sx - 1.0
    T = t_function(K, tau_value)
    Tx, Ty = _d(T, 1, 0), _d(T, 0, 1)
    E, Fm, G = Tx * Tx + sx * sx, Tx * Ty + sx * sy, Ty * Ty + sy * sy
    kg = gauss_curvature_jets(E, Fm, G)
    return StructureProbe(
        point=(_scalar(x), _scalar(y)), tau=float(tau_value), K=_scalar(K.value),
        sigma=SymCov(np.array([_scalar(sx.value), _scalar(sy.value)])),
        dsigma_residual=abs(_scalar(dsig.value)),
        dK_wedge_sigma_minus_Omega=abs(_scalar(wedge.value)),
        k_metric=np.array([[_scalar(E.value), _scalar(Fm.value)],
                           [_scalar(Fm.value), _scalar(G.value)]]),
        gauss_curvature_of_k=abs(_scalar(kg.value)),
        T_value=_scalar(T.value))


def rho_sharp_flow(conn: ChartConnection, start, t_max=1.0, n_out=21, tau_value=None):
    """Integrate ``p' = rho^sharp = (rho_y, -rho_x)`` and sample ``T`` along it.

    Returns ``(t, T(t))``, shorter than requested if the flow escapes; on a
    critical connection ``T(t) = t + T(0)``.
    """
    from .connection import moment_k
    x0, y0 = float(start[0]), float(start[1])
    if tau_value is None:
        from .connection import tau as tau_fn
        tau_value = float(tau_fn(conn, (x0, y0)))

    def f(t, s):
        # trial stages may step past the chart edge; the exit event ends the run
        rx, ry = rho_jets(*conn.jets((np.array(s[0]), np.array(s[1])), 2, check=False))
        return [float(ry.value), -float(rx.value)]

    ts = np.linspace(0.0, t_max, n_out)
    sol = solve_ivp(f, (0.0, t_max), [x0, y0], method="DOP853", t_eval=ts,
                    events=_events(conn)[:1], rtol=1e-12, atol=1e-13, max_step=MAX_STEP)
    if len(sol.t) < 2:
        raise GeodesicError(f"rho-sharp flow failed: {sol.message}")
    # the flow may leave the chart in finite time; keep what was solved
    K = moment_k(conn, (sol.y[0], sol.y[1]))
    return sol.t, t_function(np.asarray(K, dtype=float), tau_value)


__all__ = [
    "GeodesicState", "Trajectory", "GeodesicError", "DegeneratePoint",
    "geodesic_integrate", "integrate_many", "conserved_rho_along",
    "bc_first_integral", "bc_energy_drift", "StructureProbe", "structure_probe",
    "t_function", "rho_sharp_flow",
]

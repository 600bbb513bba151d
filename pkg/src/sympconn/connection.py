"""Symplectic connections on a chart and their closed-form curvature.

A connection ``nabla = d + Pi`` preserving ``dx ^ dy`` is fixed by four
functions::

    Pi(X, X) = A X + B Y,   Pi(X, Y) = -D X - A Y,   Pi(Y, Y) = C X + D Y

with ``X = d/dx`` and ``Y = d/dy``.  The totally symmetric tensor
``Pi(U, V, W) = Omega(Pi(U, V), W)`` has components
``(xxx, xxy, xyy, yyy) = (-B, A, -D, C)``.

The functions here evaluate explicit component formulas in A, B, C, D and
their partials.  They are deliberately independent of the generic tensor
calculus in :mod:`sympconn.operators`, which serves as a second route.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from . import expr as ex
from .expr import Expr, as_expr, eval_jet
from .jet import Jet2, as_array
from .tensor2d import SymCov

INF = math.inf


class DomainError(ValueError):
    """A point lies outside a chart or on an excluded locus."""


@dataclass(frozen=True)
class Domain:
    """Coordinate rectangle with optional periodic axes and excluded loci.

    ``exclusions`` is a tuple of ``(expr, eps)``; points with
    ``|expr| < eps`` are excluded.  ``box`` is a finite rectangle used for
    random sampling when the rectangle itself is unbounded.
    """

    x: tuple = (-INF, INF)
    y: tuple = (-INF, INF)
    periodic: tuple = (False, False)
    exclusions: tuple = ()
    box: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "exclusions",
                           tuple((as_expr(e), float(eps)) for e, eps in self.exclusions))

    def sample_box(self):
        if self.box is not None:
            return self.box
        x0, x1 = self.x
        y0, y1 = self.y
        return (max(x0, -1.0), min(x1, 1.0), max(y0, -1.0), min(y1, 1.0))

    def contains(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        ok = np.isfinite(x) & np.isfinite(y)
        if not self.periodic[0]:
            ok &= (x > self.x[0]) & (x < self.x[1])
        if not self.periodic[1]:
            ok &= (y > self.y[0]) & (y < self.y[1])
        for e, eps in self.exclusions:
            with np.errstate(all="ignore"):
                v = ex.compile_expr(e)(x, y)
            ok &= np.abs(v) >= eps
        return ok

    def check(self, x, y):
        ok = self.contains(x, y)
        if not np.all(ok):
            xb, yb = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
            i = np.flatnonzero(~np.ravel(ok))[0]
            raise DomainError(
                f"point ({np.ravel(xb)[i]!r}, {np.ravel(yb)[i]!r}) is outside the "
                "chart domain or on an excluded locus")

    def sample(self, n, rng):
        """``n`` uniformly random admissible points from the sampling box."""
        x0, x1, y0, y1 = self.sample_box()
        xs, ys = [], []
        got = 0
        for _ in range(1000):
            x = rng.uniform(x0, x1, 4 * n)
            y = rng.uniform(y0, y1, 4 * n)
            ok = self.contains(x, y)
            xs.append(x[ok])
            ys.append(y[ok])
            got += int(ok.sum())
            if got >= n:
                break
        else:
            raise DomainError("could not sample admissible points")
        return np.concatenate(xs)[:n], np.concatenate(ys)[:n]

    def to_json(self):
        def num(v):
            return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")
        out = {"x": [num(v) for v in self.x], "y": [num(v) for v in self.y],
               "periodic": list(self.periodic)}
        if self.exclusions:
            out["exclusions"] = [[ex.unparse(e), eps] for e, eps in self.exclusions]
        if self.box is not None:
            out["box"] = list(self.box)
        return out

    @classmethod
    def from_json(cls, d):
        def num(v):
            return float(v) if not isinstance(v, str) else float(v.replace("inf", "Infinity"))
        return cls(x=tuple(num(v) for v in d.get("x", ["-inf", "inf"])),
                   y=tuple(num(v) for v in d.get("y", ["-inf", "inf"])),
                   periodic=tuple(bool(v) for v in d.get("periodic", [False, False])),
                   exclusions=tuple((as_expr(e), float(eps))
                                    for e, eps in d.get("exclusions", [])),
                   box=tuple(d["box"]) if "box" in d else None)


@dataclass(frozen=True)
class ChartConnection:
    """Symplectic connection on a chart given by expressions A, B, C, D."""

    A: Expr
    B: Expr
    C: Expr
    D: Expr
    domain: Domain = field(default_factory=Domain)
    name: str = "chart"

    def __post_init__(self):
        for k in "ABCD":
            object.__setattr__(self, k, as_expr(getattr(self, k)))

    @property
    def fields(self):
        return (self.A, self.B, self.C, self.D)

    def jets(self, at, order, check=True):
        """Jets of A, B, C, D at the points ``at = (x, y)``."""
        if check:
            self.domain.check(*at)
        return tuple(eval_jet(f, at, order) for f in self.fields)

    def compiled(self, lib="math"):
        return tuple(ex.compile_expr(f, lib) for f in self.fields)

    def deformed(self, pi, t=1.0, name=None):
        """``nabla + t Pi`` for ``Pi = (xxx, xxy, xyy, yyy)`` expressions."""
        pxxx, pxxy, pxyy, pyyy = (as_expr(p) for p in pi)
        t = float(t)
        return ChartConnection(
            A=ex.add(self.A, ex.mul(t, pxxy)),
            B=ex.sub(self.B, ex.mul(t, pxxx)),
            C=ex.add(self.C, ex.mul(t, pyyy)),
            D=ex.sub(self.D, ex.mul(t, pxyy)),
            domain=self.domain, name=name or f"{self.name}+deformation")

    def to_spec(self):
        return {"type": "chart", "A": ex.unparse(self.A), "B": ex.unparse(self.B),
                "C": ex.unparse(self.C), "D": ex.unparse(self.D),
                "domain": self.domain.to_json()}


def christoffel_from_abcd(A, B, C, D):
    """``G[k][i][j]`` with ``nabla_i d_j = G^k_ij d_k``."""
    return (((A, -D), (-D, C)),
            ((B, -A), (-A, D)))


def pi_flat_from_abcd(A, B, C, D):
    return (-B, A, -D, C)


# closed-form quantities on jets ---------------------------------------------
# Each function takes the jets (A, B, C, D) and returns jets whose order is
# the input order minus the number of derivatives consumed.

def _d(j, dx, dy):
    return j.derivative(dx, dy)


def ricci_jets(A, B, C, D):
    Rxx = _d(A, 1, 0) + _d(B, 0, 1) + 2 * (B * D - A * A)
    Ryy = _d(C, 1, 0) + _d(D, 0, 1) + 2 * (A * C - D * D)
    Rxy = -_d(A, 0, 1) - _d(D, 1, 0) + A * D - B * C
    return Rxx, Rxy, Ryy


def nabla_ricci_jets(A, B, C, D):
    """``N[(i, j, k)] = (nabla_i Ric)_jk`` for all index triples."""
    Ax, Ay = _d(A, 1, 0), _d(A, 0, 1)
    Bx, By = _d(B, 1, 0), _d(B, 0, 1)
    Cx, Cy = _d(C, 1, 0), _d(C, 0, 1)
    Dx, Dy = _d(D, 1, 0), _d(D, 0, 1)
    BD_A2 = B * D - A * A
    AC_D2 = A * C - D * D
    AD_BC = A * D - B * C
    e1 = Ax + By
    e2 = Ay + Dx
    e3 = Cx + Dy
    xxx = (_d(A, 2, 0) + _d(B, 1, 1) + 2 * _d(BD_A2, 1, 0) - 2 * A * e1 + 2 * B * e2
           - 6 * A * B * D + 4 * A * A * A + 2 * B * B * C)
    yyy = (_d(C, 1, 1) + _d(D, 0, 2) + 2 * _d(AC_D2, 0, 1) + 2 * C * e2 - 2 * D * e3
           - 6 * A * C * D + 4 * D * D * D + 2 * B * C * C)
    xxy = (-_d(A, 1, 1) - _d(D, 2, 0) + _d(AD_BC, 1, 0) - B * e3 + D * e1
           + 4 * B * D * D - 2 * A * A * D - 2 * A * B * C)
    yxx = (_d(A, 1, 1) + _d(B, 0, 2) + 2 * _d(BD_A2, 0, 1) + 2 * D * e1 - 2 * A * e2
           + 4 * B * D * D - 2 * A * A * D - 2 * A * B * C)
    xyy = (_d(C, 2, 0) + _d(D, 1, 1) + 2 * _d(AC_D2, 1, 0) - 2 * D * e2 + 2 * A * e3
           + 4 * A * A * C - 2 * A * D * D - 2 * B * C * D)
    yxy = (-_d(A, 0, 2) - _d(D, 1, 1) + _d(AD_BC, 0, 1) + A * e3 - C * e1
           + 4 * A * A * C - 2 * A * D * D - 2 * B * C * D)
    return {(0, 0, 0): xxx, (0, 0, 1): xxy, (0, 1, 0): xxy, (0, 1, 1): xyy,
            (1, 0, 0): yxx, (1, 0, 1): yxy, (1, 1, 0): yxy, (1, 1, 1): yyy}


def rho_jets(A, B, C, D):
    """Ricci one-form; the bracketed expressions are ``-rho/2``."""
    AD_BC = A * D - B * C
    hx = (-2 * _d(A, 1, 1) - _d(B, 0, 2) - _d(D, 2, 0) + _d(AD_BC, 1, 0)
          + 3 * _d(A * A - B * D, 0, 1) + 2 * A * _d(D, 1, 0) - D * _d(A, 1, 0)
          - B * _d(C, 1, 0))
    hy = (2 * _d(D, 1, 1) + _d(A, 0, 2) + _d(C, 2, 0) + 3 * _d(A * C - D * D, 1, 0)
          - _d(AD_BC, 0, 1) - 2 * D * _d(A, 0, 1) + A * _d(D, 0, 1) + C * _d(B, 0, 1))
    return -2 * hx, -2 * hy


def moment_k_jets(A, B, C, D):
    """Moment-map curvature ``K``; consumes three derivatives."""
    Ax, Ay = _d(A, 1, 0), _d(A, 0, 1)
    Dx, Dy = _d(D, 1, 0), _d(D, 0, 1)
    return (3 * _d(A, 1, 2) + 3 * _d(D, 2, 1) + _d(B, 0, 3) + _d(C, 3, 0)
            - _d(B, 1, 0) * _d(C, 0, 1) + _d(B, 0, 1) * _d(C, 1, 0)
            + 3 * (Ax * Dy - Ay * Dx)
            + 3 * _d(A * C - D * D, 2, 0) + 3 * _d(B * D - A * A, 0, 2)
            - 3 * _d(A * D - B * C, 1, 1))


def hop_jets(A, B, C, D, K):
    """``H(K)`` components ``(xxx, xxy, xyy, yyy)`` from jets of K."""
    Kx, Ky = _d(K, 1, 0), _d(K, 0, 1)
    Kxx, Kxy, Kyy = _d(K, 2, 0), _d(K, 1, 1), _d(K, 0, 2)
    P = _d(K, 3, 0) - 3 * A * Kxx - 3 * B * Kxy + Kx * _d(B, 0, 1) - _d(B, 1, 0) * Ky
    Q = _d(K, 0, 3) - 3 * D * Kyy - 3 * C * Kxy + Ky * _d(C, 1, 0) - _d(C, 0, 1) * Kx
    U = (_d(K, 2, 1) + 2 * D * Kxx - B * Kyy + A * Kxy + _d(A, 1, 0) * Ky
         - _d(A, 0, 1) * Kx)
    V = (_d(K, 1, 2) + 2 * A * Kyy - C * Kxx + D * Kxy + _d(D, 0, 1) * Kx
         - _d(D, 1, 0) * Ky)
    return -P, -U, -V, -Q


def hessian_k_jets(A, B, C, D, K):
    """``nabla dK`` components ``(xx, xy, yy)``."""
    Kx, Ky = _d(K, 1, 0), _d(K, 0, 1)
    return (_d(K, 2, 0) - A * Kx - B * Ky,
            _d(K, 1, 1) + D * Kx + A * Ky,
            _d(K, 0, 2) - C * Kx - D * Ky)


def sdast_ricci_from_nabla(N):
    """``-nabla_(i R_jk)`` from the full covariant derivative of Ricci."""
    return (-N[(0, 0, 0)],
            -(2 * N[(0, 0, 1)] + N[(1, 0, 0)]) * (1.0 / 3.0),
            -(2 * N[(1, 0, 1)] + N[(0, 1, 1)]) * (1.0 / 3.0),
            -N[(1, 1, 1)])


def sdast_ricci_x_only_jets(A, B, C, D):
    """``sdast Ric`` for fields depending on ``x`` alone.

    The four brackets are the symmetric-monomial coefficients of
    ``-sdast Ric``.  Only valid when all y-derivatives vanish.
    """
    Ax, Bx, Cx, Dx = (_d(F, 1, 0) for F in (A, B, C, D))
    cxxx = (_d(A, 2, 0) + 2 * Bx * D + 4 * B * Dx - 3 * _d(A * A, 1, 0) + 4 * A * A * A
            - 6 * A * B * D + 2 * B * B * C)
    cyyy = 2 * C * Dx - 2 * Cx * D - 6 * A * C * D + 2 * B * C * C + 4 * D * D * D
    cxxy = (-2 * _d(D, 2, 0) + 6 * Ax * D - 4 * B * Cx - 2 * Bx * C - 6 * A * B * C
            + 12 * B * D * D - 6 * A * A * D)
    cxyy = (_d(C, 2, 0) + 6 * A * Cx - 3 * _d(D * D, 1, 0) + 12 * A * A * C
            - 6 * A * D * D - 6 * B * C * D)
    return -cxxx, -cxxy * (1.0 / 3.0), -cxyy * (1.0 / 3.0), -cyyy


def sdast_oneform_jets(A, B, C, D, a):
    """``-nabla_(i a_j)`` for a one-form given by jets ``(a_x, a_y)``."""
    ax, ay = a
    xx = _d(ax, 1, 0) - A * ax - B * ay
    yy = _d(ay, 0, 1) - C * ax - D * ay
    xy = 0.5 * (_d(ax, 0, 1) + _d(ay, 1, 0)) + D * ax + A * ay
    return -xx, -xy, -yy


# point-valued wrappers --------------------------------------------------------
def _vals(*jets):
    return np.array([np.asarray(j.value) for j in jets])


def _at(at):
    x, y = np.broadcast_arrays(as_array(at[0]), as_array(at[1]))
    if x.dtype != y.dtype:
        x, y = x.astype(object), y.astype(object)
    return x, y


def ricci(conn: ChartConnection, at) -> SymCov:
    return SymCov(_vals(*ricci_jets(*conn.jets(_at(at), 1))))


def nabla_ricci(conn: ChartConnection, at) -> dict:
    """Full ``(nabla_i Ric)_jk`` as a dict of arrays keyed by index triples."""
    N = nabla_ricci_jets(*conn.jets(_at(at), 2))
    return {k: np.asarray(v.value) for k, v in N.items()}


def rho(conn: ChartConnection, at) -> SymCov:
    return SymCov(_vals(*rho_jets(*conn.jets(_at(at), 2))))


def moment_k(conn: ChartConnection, at):
    return np.asarray(moment_k_jets(*conn.jets(_at(at), 3)).value)


_to_mpf = np.frompyfunc(mpmath.mpf, 1, 1)


def mp_points(at):
    """Points as object arrays of mpmath numbers at the working precision."""
    x, y = np.broadcast_arrays(np.asarray(at[0], dtype=float), np.asarray(at[1], dtype=float))
    return (np.array(_to_mpf(x), dtype=object).reshape(x.shape),
            np.array(_to_mpf(y), dtype=object).reshape(y.shape))


def hop_k_closed_form(conn: ChartConnection, at, dps=None) -> SymCov:
    """``H(K)``; ``dps`` evaluates the sixth-order jets with that many digits.

    Near the poles of the sphere chart the sixth derivatives of the fields
    are large enough that double precision loses the cancellation.
    """
    if dps:
        with mpmath.workdps(dps):
            out = hop_k_closed_form(conn, mp_points(at))
        return SymCov(np.asarray(out.comps, dtype=float))
    F = conn.jets(_at(at), 6)
    K = moment_k_jets(*F)
    return SymCov(_vals(*hop_jets(*F, K)))


def hessian_k(conn: ChartConnection, at) -> SymCov:
    F = conn.jets(_at(at), 5)
    return SymCov(_vals(*hessian_k_jets(*F, moment_k_jets(*F))))


def tau_jets(F):
    K = moment_k_jets(*F)
    rx, ry = rho_jets(*F)
    return K * K - rx * _d(K, 0, 1) + ry * _d(K, 1, 0)


def tau(conn: ChartConnection, at):
    """``K^2 + rho(H_K)``; constant on a critical connection."""
    return np.asarray(tau_jets(conn.jets(_at(at), 4)).value)


def sdast_ricci(conn: ChartConnection, at) -> SymCov:
    N = nabla_ricci_jets(*conn.jets(_at(at), 2))
    return SymCov(_vals(*sdast_ricci_from_nabla(N)))


def sdast_ricci_x_only(conn: ChartConnection, at) -> SymCov:
    return SymCov(_vals(*sdast_ricci_x_only_jets(*conn.jets(_at(at), 2))))


def sdast_rho(conn: ChartConnection, at) -> SymCov:
    F = conn.jets(_at(at), 3)
    return SymCov(_vals(*sdast_oneform_jets(*F, rho_jets(*F))))


def epsilon_sing(tau_value):
    return 1e-8 * (1.0 + np.abs(tau_value))


@dataclass(frozen=True)
class CurvatureReport:
    """Every closed-form curvature quantity at a batch of points."""

    x: np.ndarray
    y: np.ndarray
    ricci: SymCov
    nabla_ricci: dict
    rho: SymCov
    K: np.ndarray
    tau: np.ndarray
    hop_k: SymCov
    sdast_ricci: SymCov
    sdast_rho: SymCov
    near_singular: np.ndarray


def curvature_report(conn: ChartConnection, at) -> CurvatureReport:
    x, y = _at(at)
    F = conn.jets((x, y), 6)
    K = moment_k_jets(*F)
    rx, ry = rho_jets(*F)
    N = nabla_ricci_jets(*F)
    tau_v = np.asarray((K * K - rx * _d(K, 0, 1) + ry * _d(K, 1, 0)).value)
    Kv = np.asarray(K.value)
    return CurvatureReport(
        x=x, y=y,
        ricci=SymCov(_vals(*ricci_jets(*F))),
        nabla_ricci={k: np.asarray(v.value) for k, v in N.items()},
        rho=SymCov(_vals(rx, ry)),
        K=Kv,
        tau=tau_v,
        hop_k=SymCov(_vals(*hop_jets(*F, K))),
        sdast_ricci=SymCov(_vals(*sdast_ricci_from_nabla(N))),
        sdast_rho=SymCov(_vals(*sdast_oneform_jets(*F, (rx, ry)))),
        near_singular=np.abs(tau_v - Kv * Kv) < epsilon_sing(tau_v),
    )


def jets_at(conn, at, order):
    """Convenience: jets of the four fields as a tuple."""
    return conn.jets(_at(at), order)


__all__ = [
    "Domain", "DomainError", "ChartConnection", "CurvatureReport", "Jet2",
    "ricci", "nabla_ricci", "rho", "moment_k", "hop_k_closed_form", "tau",
    "sdast_ricci", "sdast_ricci_x_only", "sdast_rho", "hessian_k",
    "curvature_report", "christoffel_from_abcd", "epsilon_sing", "mp_points",
]

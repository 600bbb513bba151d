"""Tensor-product quadrature on chart rectangles.

Gauss-Legendre nodes on bounded axes, the trapezoid rule on periodic ones
(spectrally accurate for smooth periodic integrands).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import expr as ex
from .connection import ChartConnection, moment_k, rho
from .operators import second_variation_density
from .tensor2d import pairing_density, SymCov


class QuadratureError(ValueError):
    pass


@dataclass(frozen=True)
class Rule:
    kind: str = "gauss-legendre"   # or "trapezoid"
    n: int = 64

    def __post_init__(self):
        if self.kind not in ("gauss-legendre", "trapezoid"):
            raise QuadratureError(f"unknown rule {self.kind!r}")
        if not (isinstance(self.n, (int, np.integer)) and 2 <= self.n <= 4096):
            raise QuadratureError(f"rule size must be an integer in [2, 4096], got {self.n!r}")

    def nodes(self, a, b):
        """Nodes and weights on ``[a, b]`` (``[a, b)`` for the trapezoid rule)."""
        if self.kind == "trapezoid":
            h = (b - a) / self.n
            return a + h * np.arange(self.n), np.full(self.n, h)
        t, w = _leggauss(self.n)
        half = 0.5 * (b - a)
        return a + half * (t + 1.0), half * w


@lru_cache(maxsize=None)
def _leggauss(n):
    t, w = np.polynomial.legendre.leggauss(n)
    t.flags.writeable = False
    w.flags.writeable = False
    return t, w


GL64 = Rule("gauss-legendre", 64)
TRAP256 = Rule("trapezoid", 256)


@dataclass(frozen=True)
class Region:
    """``[x0, x1] x [y0, y1]``; an annulus trims margins off the x ends."""

    x0: float
    x1: float
    y0: float
    y1: float
    periodic: tuple = (False, False)
    margins: tuple | None = None

    def __post_init__(self):
        if self.margins is not None:
            e1, e2 = self.margins
            if not (e1 > 0 and e2 > 0):
                raise QuadratureError("annulus margins must be positive")
        lo, hi = self.x_range
        if not (hi > lo and self.y1 > self.y0):
            raise QuadratureError("region has empty interior")

    @classmethod
    def rectangle(cls, x0, x1, y0, y1):
        return cls(x0, x1, y0, y1)

    @classmethod
    def periodic_rectangle(cls, x0, x1, y0, y1, x_periodic=False):
        return cls(x0, x1, y0, y1, periodic=(x_periodic, True))

    @classmethod
    def annulus(cls, x0, x1, y0, y1, eps1, eps2):
        return cls(x0, x1, y0, y1, periodic=(False, True), margins=(eps1, eps2))

    @property
    def x_range(self):
        if self.margins is None:
            return self.x0, self.x1
        return self.x0 + self.margins[0], self.x1 - self.margins[1]

    @property
    def area(self):
        lo, hi = self.x_range
        return (hi - lo) * (self.y1 - self.y0)

    def default_rules(self):
        return tuple(TRAP256 if p else GL64 for p in self.periodic)


def _rules(region, rule):
    if rule is None:
        return region.default_rules()
    if isinstance(rule, Rule):
        return (rule, rule)
    return tuple(rule)


def grid(region: Region, rule=None):
    rx, ry = _rules(region, rule)
    xs, wx = rx.nodes(*region.x_range)
    ys, wy = ry.nodes(region.y0, region.y1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return X, Y, np.outer(wx, wy)


def _sum(vals, W, X, Y):
    vals = np.broadcast_to(np.asarray(vals, dtype=float), W.shape)
    bad = ~np.isfinite(vals)
    if bad.any():
        i = np.flatnonzero(bad.ravel())[0]
        raise QuadratureError(
            f"non-finite integrand at ({X.ravel()[i]!r}, {Y.ravel()[i]!r})")
    # contiguous float sums are pairwise in numpy, so the result is reproducible
    return float(np.sum(np.ascontiguousarray(vals * W)))


def integrate(field, region: Region, rule=None) -> float:
    """``int field dx dy``; ``field`` is an expression or a vectorised ``f(x, y)``."""
    X, Y, W = grid(region, rule)
    if isinstance(field, (str, ex.Expr)):
        f = ex.compile_expr(ex.as_expr(field), "numpy")
    else:
        f = field
    with np.errstate(all="ignore"):
        vals = f(X, Y)
    return _sum(vals, W, X, Y)


def energy(conn: ChartConnection, region: Region, rule=None) -> float:
    """``int K^2 dx dy``."""
    X, Y, W = grid(region, rule)
    K = moment_k(conn, (X, Y))
    return _sum(K * K, W, X, Y)


def _sym_field(components, X, Y):
    return SymCov(np.array([np.broadcast_to(ex.eval_jet(ex.as_expr(c), (X, Y), 0).value,
                                            X.shape) for c in components]))


def pairing(a_field, b_field, region: Region, rule=None) -> float:
    """``<a, b> = int pairing(a, b) dx dy`` for component lists of equal length."""
    if len(a_field) != len(b_field):
        raise QuadratureError(
            f"degree mismatch: {len(a_field) - 1} and {len(b_field) - 1}")
    X, Y, W = grid(region, rule)
    dens = pairing_density(_sym_field(a_field, X, Y), _sym_field(b_field, X, Y))
    return _sum(dens, W, X, Y)


def pairing_values(a: SymCov, b: SymCov, region: Region, rule=None) -> float:
    """Pairing of tensors already sampled on ``grid(region, rule)``."""
    X, Y, W = grid(region, rule)
    return _sum(pairing_density(a, b), W, X, Y)


def second_variation(conn: ChartConnection, alpha, beta, region: Region, rule=None) -> float:
    """``2 <H* a, H* b> + 2 <L_{H_K} a, b>``."""
    X, Y, W = grid(region, rule)
    return _sum(second_variation_density(conn, alpha, beta, (X, Y)), W, X, Y)


def _loop(conn, x, y0, y1, n):
    ys, wy = Rule("trapezoid", n).nodes(y0, y1)
    xs = np.full_like(ys, x)
    K = moment_k(conn, (xs, ys))
    r = rho(conn, (xs, ys))
    return float(np.sum(K * r.comps[1] * wy))


def boundary_flux_k_rho(conn: ChartConnection, region: Region, n: int = 256) -> float:
    """``-oint K rho`` at the inner right edge plus ``oint K rho`` at the inner left edge."""
    if region.margins is None:
        raise QuadratureError("boundary flux needs an annulus region")
    lo, hi = region.x_range
    return -_loop(conn, hi, region.y0, region.y1, n) + _loop(conn, lo, region.y0, region.y1, n)


def richardson(eps, values):
    """Value at ``eps = 0`` of the polynomial through ``(eps_i, values_i)``."""
    eps = np.asarray(eps, dtype=float)
    values = np.asarray(values, dtype=float)
    V = np.vander(eps, len(eps), increasing=True)
    return float(np.linalg.solve(V, values)[0])


def flux_limit(conn: ChartConnection, x0, x1, y0, y1, eps=(4e-3, 2e-3, 1e-3), n=256):
    """Richardson-extrapolated boundary flux with equal margins ``eps``."""
    vals = [boundary_flux_k_rho(conn, Region.annulus(x0, x1, y0, y1, e, e), n) for e in eps]
    return richardson(eps, vals), vals


def flux_consistency(conn: ChartConnection, tau_value, region: Region, rule=None, n=256):
    """``tau vol - 3 E + flux`` on an annulus; tends to zero with the margins."""
    return (tau_value * region.area - 3.0 * energy(conn, region, rule)
            + boundary_flux_k_rho(conn, region, n))


__all__ = [
    "Rule", "Region", "QuadratureError", "GL64", "TRAP256", "grid", "integrate",
    "energy", "pairing", "pairing_values", "second_variation",
    "boundary_flux_k_rho", "richardson", "flux_limit", "flux_consistency",
]

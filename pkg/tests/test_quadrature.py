import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sympconn.connection import ChartConnection, Domain
from sympconn.families import bourgeois_cahen, sphere_family
from sympconn.quadrature import (GL64, QuadratureError, Region, Rule, boundary_flux_k_rho,
                                 energy, flux_consistency, flux_limit, integrate, pairing,
                                 richardson)

SPHERE_CHART = Region.periodic_rectangle(-1.0, 1.0, 0.0, 2 * math.pi)
TORUS = Region(0, 2 * math.pi, 0, 2 * math.pi, periodic=(True, True))


def test_constant_over_unit_square():
    assert integrate("1", Region.rectangle(0, 1, 0, 1)) == pytest.approx(1.0, abs=1e-15)


def test_trapezoid_is_spectral():
    r = Region.periodic_rectangle(0, 1, 0, 2 * math.pi)
    assert integrate("sin(y)^2", r, (GL64, Rule("trapezoid", 64))) == pytest.approx(math.pi, abs=1e-12)


def test_x_squared_over_sphere_chart():
    assert integrate("x^2", SPHERE_CHART) == pytest.approx(4 * math.pi / 3, rel=1e-13)


def test_rule_validation():
    with pytest.raises(QuadratureError):
        Rule("simpson", 10)
    with pytest.raises(QuadratureError):
        Rule("trapezoid", 1)
    with pytest.raises(QuadratureError):
        Region(0, 0, 0, 1)
    with pytest.raises(QuadratureError):
        Region.annulus(0, 1, 0, 1, 0.0, 0.1)


def test_nonfinite_integrand_reports_location():
    with pytest.raises(QuadratureError, match="non-finite integrand at"):
        integrate(lambda x, y: 1 / (x - x), Region.rectangle(0, 1, 0, 1), Rule("gauss-legendre", 4))


def test_flat_energy_is_zero():
    assert energy(ChartConnection("0", "0", "0", "0"), Region.rectangle(-1, 1, -1, 1)) == 0.0


@pytest.mark.parametrize("t", [0.0, 0.5, 1.0])
def test_sphere_energy(t):
    E = energy(sphere_family(t), SPHERE_CHART)
    assert E == pytest.approx(3 * math.pi * t * t, rel=1e-6, abs=1e-12)


def test_bc_energy_on_square():
    E = energy(bourgeois_cahen(0.0, 0.0, -1.0, -1.0), Region.rectangle(-1, 1, -1, 1))
    assert E == pytest.approx(4 / 3, rel=1e-12)


def test_gauss_legendre_order_doubling():
    # the sphere energy integrand is a polynomial in x and already exact at
    # small n, so convergence is measured on a smooth non-polynomial integrand
    f = "exp(x)*cos(3*x)/(2-x)"
    g = {n: integrate(f, Region.rectangle(-1, 1, 0, 1), Rule("gauss-legendre", n)) for n in (4, 8, 16)}
    assert abs(g[16] - g[8]) * 10 <= abs(g[8] - g[4])
    conn = sphere_family(1.0)
    E = [energy(conn, SPHERE_CHART, (Rule("gauss-legendre", n), Rule("trapezoid", 64)))
         for n in (16, 32)]
    # nodes close to the poles carry some cancellation noise in K
    assert E[0] == pytest.approx(E[1], rel=1e-10)


@settings(max_examples=20)
@given(st.integers(0, 7), st.integers(0, 7), st.integers(8, 40))
def test_trapezoid_exact_on_trig_polynomials(k, m, n):
    if k + m >= n:
        return
    r = TORUS
    rule = Rule("trapezoid", n)
    val = integrate(f"cos({k}*x)*cos({m}*y)+sin({k}*x)^2", r, rule)
    exact = (4 * math.pi ** 2 if k == 0 and m == 0 else 0.0) + (2 * math.pi ** 2 if k else 0.0)
    if 2 * k >= n:
        return
    assert val == pytest.approx(exact, abs=1e-13 * (1 + abs(exact)))


def test_pairing_of_scalars_and_brackets():
    assert pairing(["1"], ["1"], Region.rectangle(0, 1, 0, 1)) == pytest.approx(1.0)
    # {f, g} integrates to zero on the torus
    f, g = "sin(x)*cos(2*y)", "cos(x+y)+sin(y)"
    pb = f"(cos(x)*cos(2*y))*(-sin(x+y)+cos(y))-(-2*sin(x)*sin(2*y))*(-sin(x+y))"
    assert abs(integrate(pb, TORUS, Rule("trapezoid", 64))) <= 1e-12
    with pytest.raises(QuadratureError, match="degree mismatch"):
        pairing(["1", "x"], ["1"], TORUS)


def test_richardson_removes_polynomial_error():
    eps = [0.4, 0.2, 0.1]
    assert richardson(eps, [3 + 2 * e - e * e for e in eps]) == pytest.approx(3.0)


def test_flux_to_six_pi():
    limit, vals = flux_limit(sphere_family(1.0), -1.0, 1.0, 0.0, 2 * math.pi)
    assert abs(limit - 6 * math.pi) <= 0.01 * 6 * math.pi
    assert boundary_flux_k_rho(ChartConnection("0", "0", "0", "0"),
                               Region.annulus(-1, 1, 0, 1, 0.1, 0.1)) == 0.0


def test_flux_consistency_shrinks():
    conn = sphere_family(1.0)
    res = [abs(flux_consistency(conn, 0.75, Region.annulus(-1, 1, 0, 2 * math.pi, e, e)))
           for e in (1e-1, 1e-2)]
    assert res[1] <= 1e-8 and res[0] <= 1e-8


def test_flux_needs_annulus():
    with pytest.raises(QuadratureError, match="annulus"):
        boundary_flux_k_rho(sphere_family(1.0), SPHERE_CHART)


def test_reproducible():
    conn = sphere_family(0.7)
    assert energy(conn, SPHERE_CHART) == energy(conn, SPHERE_CHART)

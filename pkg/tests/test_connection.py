import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracle
from sympconn import operators as op
from sympconn.connection import (ChartConnection, Domain, DomainError, curvature_report,
                                 hop_k_closed_form, mp_points, moment_k, nabla_ricci, rho, ricci,
                                 sdast_ricci, sdast_ricci_x_only, sdast_rho, tau)
from sympconn.families import bourgeois_cahen, quartic, random_polynomial_connection, sphere_family
from sympconn.metric import builtin_metric, levi_civita

FIXED = ChartConnection("x*y+0.3*x^2", "y^2-x", "0.5*x*y^2+x", "x^3*y/3")
AT = (0.3, -0.5)


def test_frozen_values_against_symbolic_oracle():
    # exact rationals from the sympy oracle at (3/10, -1/2)
    assert ricci(FIXED, AT).comps == pytest.approx(
        [-84363 / 62500, -475143 / 2000000, 2101869 / 2000000], abs=1e-14)
    assert rho(FIXED, AT).comps == pytest.approx([693389 / 100000, 122379 / 50000], abs=1e-13)
    assert float(moment_k(FIXED, AT)) == pytest.approx(-13722 / 3125, abs=1e-13)


poly_coeff = st.integers(-3, 3).map(lambda n: n / 2)


@st.composite
def poly_fields(draw):
    monos = ["1", "x", "y", "x*y", "x^2", "y^2", "x^2*y"]
    out = []
    for _ in range(4):
        cs = draw(st.lists(poly_coeff, min_size=len(monos), max_size=len(monos)))
        out.append("+".join(f"({c})*{m}" for c, m in zip(cs, monos)))
    return out


@settings(max_examples=8)
@given(poly_fields(), st.floats(-1, 1), st.floats(-1, 1))
def test_closed_forms_agree_with_symbolic_oracle(fields, a, b):
    conn = ChartConnection(*fields)
    G = oracle.christoffel(*fields)
    R = oracle.ricci(G)
    r = oracle.rho(G)
    K = oracle.moment_k(G)
    want_R = [oracle.numeric(R[k])(a, b) for k in ((0, 0), (0, 1), (1, 1))]
    assert np.allclose(ricci(conn, (a, b)).comps, want_R, atol=1e-9)
    assert np.allclose(rho(conn, (a, b)).comps, [oracle.numeric(e)(a, b) for e in r], atol=1e-8)
    assert np.isclose(moment_k(conn, (a, b)), oracle.numeric(K)(a, b), atol=1e-8)


def test_hop_is_lie_derivative_of_connection():
    G = oracle.christoffel(*(f"({s})" for s in ("x*y+0.3*x^2", "y^2-x", "0.5*x*y^2+x", "x^3*y/3")))
    f = "x^2*y+sin(x)"
    L = oracle.lie_of_connection(G, f)
    pts = (np.array([0.1, -0.4, 0.7]), np.array([0.3, 0.5, -0.2]))
    want = [oracle.numeric(L[k])(*pts) for k in ((0, 0, 0), (0, 0, 1), (0, 1, 1), (1, 1, 1))]
    assert np.allclose(op.hop(FIXED, f, pts).comps, want, atol=1e-12)


def test_round_sphere_ricci_is_metric():
    conn = ChartConnection("x/(1-x^2)", "0", "x*(1-x^2)", "0")
    r = ricci(conn, (0.3, 1.0)).comps
    assert r == pytest.approx([1 / 0.91, 0.0, 0.91], abs=1e-14)


def test_round_sphere_parallel_ricci():
    conn = levi_civita(builtin_metric("sphere"))
    x, y = conn.domain.sample(20, np.random.default_rng(1))
    # near |x| = 0.99 the chart fields are O(100) and double precision
    # leaves about 1e-12 of cancellation noise, so evaluate with 30 digits
    with mpmath.workdps(30):
        N = nabla_ricci(conn, mp_points((x, y)))
    assert max(float(np.max(np.abs(v))) for v in N.values()) <= 1e-12
    N = nabla_ricci(conn, (x, y))
    assert max(np.max(np.abs(v)) for v in N.values()) <= 1e-10


def test_nabla_ricci_matches_generic_route():
    rng = np.random.default_rng(3)
    conn = random_polynomial_connection(rng, 4)
    at = conn.domain.sample(20, rng)
    gen = op.generic_curvature(conn, at)["nabla_ricci"]
    N = nabla_ricci(conn, at)
    for k in N:
        assert np.allclose(N[k], gen[k], atol=1e-11, rtol=1e-11)


def test_bourgeois_cahen_closed_forms():
    conn = bourgeois_cahen(0.25, 0.4, -1.0, -1.0)
    x, y = conn.domain.sample(50, np.random.default_rng(2))
    assert np.max(np.abs(moment_k(conn, (x, y)) - (x + 0.25))) <= 1e-10
    r = rho(conn, (x, y)).comps
    assert np.max(np.abs(r[0])) <= 1e-10
    assert np.max(np.abs(r[1] - (-1.0 - (x + 0.25) ** 2))) <= 1e-10
    assert np.max(np.abs(hop_k_closed_form(conn, (x, y)).comps)) <= 1e-9
    assert np.max(np.abs(tau(conn, (x, y)) + 1.0)) <= 1e-10


def test_bourgeois_cahen_q_off_tau():
    a, p, q, t0 = 0.0, 0.5, 0.7, -1.0
    conn = bourgeois_cahen(a, p, q, t0)
    x, y = conn.domain.sample(30, np.random.default_rng(4))
    s = 9 * sdast_ricci(conn, (x, y)).comps
    # a single component (x, y, y); the comps store T(x, y, y) directly
    assert np.max(np.abs(s[2] - (t0 - q))) <= 1e-8
    assert np.max(np.abs(s[[0, 1, 3]])) <= 1e-8
    # with q != tau the one-form is no longer (tau - x^2) dy
    r = rho(conn, (x, y)).comps
    assert np.max(np.abs(r[1] - ((2 * t0 + q) / 3 - x * x))) <= 1e-9
    assert np.max(np.abs(sdast_rho(conn, (x, y)).comps)) > 1e-3


def test_x_only_route_matches_general_route():
    conn = bourgeois_cahen(0.1, 0.3, 0.5, -1.0)
    x, y = conn.domain.sample(20, np.random.default_rng(5))
    assert np.allclose(sdast_ricci_x_only(conn, (x, y)).comps,
                       sdast_ricci(conn, (x, y)).comps, atol=1e-11)


def test_quartic_critical_not_moment_constant():
    conn = quartic(0.2, 0.3, -0.1, 0.5)
    x, y = conn.domain.sample(50, np.random.default_rng(6))
    assert np.max(np.abs(moment_k(conn, (x, y)) - x - 0.2)) <= 1e-10
    assert np.max(np.abs(hop_k_closed_form(conn, (x, y)).comps)) <= 1e-9


def test_sphere_family_tau_and_not_preferred():
    for t in (0.5, 1.0, 2.0):
        conn = sphere_family(t)
        x, y = conn.domain.sample(30, np.random.default_rng(7))
        tv = tau(conn, (x, y))
        assert np.std(tv) <= 1e-9
        assert np.mean(tv) == pytest.approx(0.75 * t * t, rel=1e-10)
        assert np.max(np.abs(sdast_ricci(conn, (x, y)).comps)) > 1e-2


def test_domain_violation():
    conn = sphere_family(1.0)
    with pytest.raises(DomainError, match="outside"):
        rho(conn, (1.5, 0.0))
    d = Domain(x=(0.0, 1.0), exclusions=(("x-0.5", 1e-3),))
    assert not d.contains(0.5, 0.0) and d.contains(0.6, 0.0)


def test_domain_json_roundtrip():
    d = Domain(x=(-1.0, float("inf")), periodic=(False, True), exclusions=(("x", 0.1),),
               box=(-1.0, 1.0, 0.0, 2.0))
    e = Domain.from_json(d.to_json())
    assert e.to_json() == d.to_json()


def test_curvature_report_consistent():
    conn = sphere_family(1.0)
    x = np.array([0.2, 1 / np.sqrt(3)])
    rep = curvature_report(conn, (x, np.zeros(2)))
    assert list(rep.near_singular) == [False, True]
    assert np.allclose(rep.rho.comps, rho(conn, (x, np.zeros(2))).comps)


def test_deformed_is_linear_in_t():
    pi = ("x", "y^2", "1", "x*y")
    d = FIXED.deformed(pi, 0.5)
    assert rho(d, AT).comps == pytest.approx(rho(FIXED.deformed(pi, 1.0).deformed(pi, -0.5), AT).comps)

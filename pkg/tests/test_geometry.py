import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sympconn.connection import ChartConnection, Domain
from sympconn.families import bourgeois_cahen, cube_of_exact, quartic, sphere_family
from sympconn.geometry import (DegeneratePoint, GeodesicError, GeodesicState, bc_energy_drift,
                               bc_first_integral, conserved_rho_along, geodesic_integrate,
                               integrate_many, rho_sharp_flow, structure_probe, t_function)
from sympconn.jet import Jet2

FLAT = ChartConnection("0", "0", "0", "0")


def test_flat_geodesics_are_lines():
    tr = geodesic_integrate(FLAT, GeodesicState(0.1, -0.2, 0.5, 1.5), 3.0, n_out=31)
    assert tr.completed
    assert np.allclose(tr.x, 0.1 + 0.5 * tr.t, atol=1e-12)
    assert np.allclose(tr.y, -0.2 + 1.5 * tr.t, atol=1e-12)
    assert conserved_rho_along(FLAT, tr) == 0.0


def test_invalid_inits():
    sp = sphere_family(1.0)
    with pytest.raises(GeodesicError, match="outside"):
        geodesic_integrate(sp, GeodesicState(1.2, 0.0, 0.0, 1.0), 1.0)
    with pytest.raises(GeodesicError, match="t_max"):
        geodesic_integrate(FLAT, GeodesicState(0, 0, 1, 0), 0.0)
    with pytest.raises(GeodesicError, match="unachievable"):
        geodesic_integrate(FLAT, GeodesicState(0, 0, 1, 0), 1.0, rtol=1e-16)
    with pytest.raises(ValueError):
        GeodesicState(0.0, math.nan, 0.0, 0.0)


def test_domain_exit_is_reported():
    conn = ChartConnection("0", "0", "0", "0", Domain(x=(-1.0, 1.0)))
    tr = geodesic_integrate(conn, GeodesicState(0.0, 0.0, 1.0, 0.0), 5.0)
    assert tr.status == "domain-exit"
    assert tr.t[-1] < 1.0 + 1e-9


def test_csv_output():
    tr = geodesic_integrate(FLAT, GeodesicState(0, 0, 1, 1), 1.0, n_out=3)
    rows = list(csv.reader(io.StringIO(tr.to_csv())))
    assert rows[0] == ["t", "x", "y", "xdot", "ydot", "rho_gammadot"]
    assert len(rows) == 4 and float(rows[-1][1]) == pytest.approx(1.0)


def test_bc_conserved_quantities():
    conn = bourgeois_cahen(0.0, 0.0, -1.0, -1.0)
    rng = np.random.default_rng(0)
    for s in rng.uniform(-1, 1, (3, 4)):
        tr = geodesic_integrate(conn, GeodesicState(*s), 100.0)
        assert tr.completed
        I = bc_first_integral(tr, -1.0)
        assert np.max(np.abs(I - I[0])) <= 1e-8
        assert conserved_rho_along(conn, tr) <= 1e-8
        assert bc_energy_drift(tr, -1.0, 0.0, -1.0) <= 1e-7


def test_integrate_many_preserves_order():
    inits = [GeodesicState(0, 0, v, 0) for v in (1.0, 2.0, 3.0)]
    out = integrate_many(FLAT, inits, 1.0, jobs=2, n_out=2)
    assert [tr.x[-1] for tr in out] == pytest.approx([1.0, 2.0, 3.0])


def test_cube_rho_drift_is_informational():
    conn = cube_of_exact("x*y")
    tr = geodesic_integrate(conn, GeodesicState(0.1, 0.1, 0.2, -0.1), 1.0)
    assert np.isfinite(conserved_rho_along(conn, tr))


@settings(max_examples=30)
@given(st.floats(-3, 3), st.sampled_from([-2.0, -0.5, 0.5, 2.0]))
def test_t_function_derivative(K, tau):
    if tau > 0 and abs(tau - K * K) < 0.05:
        return
    j = t_function(Jet2.variable("x", K, 1), tau)
    assert j.partial(1, 0) == pytest.approx(1.0 / (tau - K * K), rel=1e-10)
    assert float(j.value) == pytest.approx(float(t_function(K, tau)), rel=1e-12, abs=1e-12)


def test_structure_on_bc():
    conn = bourgeois_cahen(0.0, 0.2, -1.0, -1.0)
    pr = structure_probe(conn, (0.4, 0.3))
    assert pr.sigma.comps == pytest.approx([0.0, 1.0], abs=1e-12)
    assert pr.dsigma_residual <= 1e-12
    assert pr.dK_wedge_sigma_minus_Omega <= 1e-12
    assert pr.gauss_curvature_of_k <= 1e-9
    assert pr.tau == pytest.approx(-1.0)


@pytest.mark.parametrize("conn", [sphere_family(1.0), quartic(0.1, 0.2, 0.3, 0.4),
                                  bourgeois_cahen(0.0, 0.3, 0.7, -1.0)],
                         ids=["sphere", "quartic", "bc-critical"])
def test_structure_residuals(conn):
    pts = conn.domain.sample(40, np.random.default_rng(3))
    n = 0
    for x, y in zip(*pts):
        try:
            pr = structure_probe(conn, (x, y))
        except DegeneratePoint:
            continue
        if abs(pr.tau - pr.K ** 2) <= 0.1:
            continue
        n += 1
        assert pr.dsigma_residual <= 1e-7
        assert pr.dK_wedge_sigma_minus_Omega <= 1e-7
        assert pr.gauss_curvature_of_k <= 1e-5
        if n == 5:
            break
    assert n == 5


def test_sphere_degenerate_locus():
    conn = sphere_family(1.0)
    with pytest.raises(DegeneratePoint, match="degenerate"):
        structure_probe(conn, (1 / math.sqrt(3), 0.0))


def test_structure_refuses_non_critical():
    conn = ChartConnection("x*y", "y^2", "x^3", "sin(x)")
    with pytest.raises(DegeneratePoint, match="not critical"):
        structure_probe(conn, (0.3, 0.2))


def test_rho_sharp_flow_unit_speed():
    conn = sphere_family(1.0)
    t, T = rho_sharp_flow(conn, (0.2, 1.0), 0.5, n_out=11)
    assert len(t) == 11
    assert np.allclose(np.diff(T) / np.diff(t), 1.0, atol=1e-6)


def test_rho_sharp_flow_partial_on_escape():
    # with q != tau, x' = (2 tau + q)/3 - x^2 < 0 is a Riccati equation that
    # escapes to -infinity in finite time; the solved part is returned
    t, T = rho_sharp_flow(bourgeois_cahen(0.0, 0.3, 0.7, -1.0), (0.5, 0.0), 20.0, n_out=41)
    assert 2 <= len(t) < 41

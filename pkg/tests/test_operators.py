import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sympconn import expr as ex
from sympconn import operators as op
from sympconn.connection import (ChartConnection, christoffel_from_abcd, hop_k_closed_form,
                                 moment_k, rho)
from sympconn.families import (SPHERE_KILLING_CUBE, bourgeois_cahen, random_polynomial_connection,
                               sphere_family)
from sympconn.metric import builtin_metric, levi_civita
from sympconn.quadrature import grid, pairing_values, second_variation
from sympconn.verify import (TEST_PI, TEST_PI2, TORUS, TRAP64, TRIG_CONN, adjointness_residuals,
                             sampled, second_variation_residual, variation_residuals)

def _pts(conn, n=20, seed=0):
    return conn.domain.sample(n, np.random.default_rng(seed))


def test_two_delta_ricci_is_rho_on_bc():
    conn = bourgeois_cahen(0.2, 0.1, -1.0, -1.0)
    x, y = _pts(conn)
    gen = op.generic_curvature(conn, (x, y))
    r = 2 * op.covdiv(conn, _ricci_exprs(conn), (x, y)).comps
    assert np.max(np.abs(r[0])) <= 1e-10
    assert np.max(np.abs(r[1] - (-1.0 - (x + 0.2) ** 2))) <= 1e-10
    assert np.allclose(gen["rho"].comps, r, atol=1e-10)


def _ricci_exprs(conn):
    # Ricci written out from the chart fields, as expressions
    A, B, C, D = conn.fields
    d = ex.diff
    m, a, s = ex.mul, ex.add, ex.sub
    Rxx = a(a(d(A, "x"), d(B, "y")), m(2.0, s(m(B, D), m(A, A))))
    Ryy = a(a(d(C, "x"), d(D, "y")), m(2.0, s(m(A, C), m(D, D))))
    Rxy = a(s(ex.neg(d(A, "y")), d(D, "x")), s(m(A, D), m(B, C)))
    return (Rxx, Rxy, Ryy)


def test_covdiv_rejects_degree_zero():
    with pytest.raises(op.OperatorError):
        op.covdiv(TRIG_CONN, ("sin(x)",), (0.1, 0.2))


def test_double_divergence_against_finite_differences():
    rng = np.random.default_rng(2)
    conn = random_polynomial_connection(rng, 2)
    P = ("x*y+1", "sin(x)", "y^2-x", "cos(x*y)")
    x0, y0, h = 0.21, -0.33, 1e-4

    def T(x, y):
        return op.covdiv(conn, P, (x, y)).comps          # (T_xx, T_xy, T_yy)

    def full(c):
        return {(0, 0): c[0], (0, 1): c[1], (1, 0): c[1], (1, 1): c[2]}

    dT = [(np.array(T(x0 + h, y0)) - T(x0 - h, y0)) / (2 * h),
          (np.array(T(x0, y0 + h)) - T(x0, y0 - h)) / (2 * h)]
    Tv, dTx, dTy = full(T(x0, y0)), full(dT[0]), full(dT[1])
    dT = (dTx, dTy)
    F = [float(ex.evaluate(f, x0, y0)) for f in conn.fields]
    G = christoffel_from_abcd(*F)
    omega_up = ((0.0, 1.0), (-1.0, 0.0))

    def nabla_T(p, i, q):
        return dT[p][(i, q)] - sum(G[m][p][i] * Tv[(m, q)] + G[m][p][q] * Tv[(i, m)]
                                   for m in (0, 1))

    # delta T_i = -nabla_p T_i^p = -Omega^pq nabla_p T_iq
    want = [-sum(omega_up[p][q] * nabla_T(p, i, q) for p in (0, 1) for q in (0, 1))
            for i in (0, 1)]
    jets = op.field_jets(P, (np.array(x0), np.array(y0)), 2)
    Gj = op.gamma(conn.jets((np.array(x0), np.array(y0)), 2))
    got = op.delta(Gj, op.delta(Gj, jets))
    assert np.allclose([float(got[(i,)].value) for i in (0, 1)], want, atol=1e-8)


def test_sdast_rho_vanishes_on_bc():
    conn = bourgeois_cahen(0.0, 0.4, -2.0, -2.0)
    x, y = _pts(conn)
    r = rho(conn, (x, y)).comps
    assert np.max(np.abs(r[1] - (-2 - x * x))) <= 1e-10
    gen = op.generic_curvature(conn, (x, y))
    assert np.max(np.abs(gen["sdast_rho"].comps)) <= 1e-10


def test_killing_field_of_round_sphere():
    conn = levi_civita(builtin_metric("sphere"))
    x, y = _pts(conn)
    # L acts through the symplectic dual: the rotation d/dy corresponds to -dx
    assert np.max(np.abs(op.lop(conn, ("-1", "0"), (x, y)).comps)) <= 1e-9
    # the metric dual (1 - x^2) dy is not the right one-form
    assert np.max(np.abs(op.lop(conn, ("0", "1-x^2"), (x, y)).comps)) > 0.1


def test_hop_of_k_vanishes_on_bc():
    conn = bourgeois_cahen(0.3, 0.2, 0.5, -1.0)
    x, y = _pts(conn)
    assert np.max(np.abs(op.hop(conn, "x+0.3", (x, y)).comps)) <= 1e-9


@pytest.mark.parametrize("t", [0.0, 0.5, 1.0, 2.0])
def test_hop_of_gamma_on_sphere(t):
    conn = sphere_family(t)
    x, y = _pts(conn)
    # gamma = -2x; only its span matters
    assert np.max(np.abs(op.hop(conn, "x", (x, y)).comps)) <= 1e-8


def test_adjoints_are_first_variations():
    rng = np.random.default_rng(1)
    conn = random_polynomial_connection(rng, 3)
    P = ("x*y", "1+x^2", "y^3-x", "x*y^2")
    at = conn.domain.sample(10, rng)
    r = op.variation_rho(conn, P, at)
    k = op.variation_k(conn, P, at)
    assert np.allclose(r[1].comps, -2 * op.lop_adjoint(conn, P, at).comps, atol=1e-10)
    assert np.allclose(k[1], op.hop_adjoint(conn, P, at), atol=1e-10)
    assert np.allclose(r[0].comps, rho(conn, at).comps, atol=1e-10)
    assert np.allclose(k[0], moment_k(conn, at), atol=1e-10)


def test_hop_adjoint_matches_polynomial_fit():
    rng = np.random.default_rng(8)
    conn = random_polynomial_connection(rng, 3)
    P = ("x", "y*x", "1-y^2", "x^2")
    at = conn.domain.sample(10, rng)
    ts = np.array([-0.2, -0.1, 0.1, 0.2])
    ks = np.array([moment_k(conn.deformed(P, t), at) for t in ts])
    c = np.linalg.solve(np.vander(ts, 4, increasing=True), ks)
    assert np.max(np.abs(c[1] - op.hop_adjoint(conn, P, at)) / (1 + np.abs(c[1]))) <= 1e-9


def test_variation_of_round_sphere_along_killing_cube():
    base = levi_civita(builtin_metric("sphere"))
    x, y = _pts(base, 15)
    r = op.variation_rho(base, SPHERE_KILLING_CUBE, (x, y))
    for t in (0.3, 1.0):
        total = sum(t ** n * r[n].comps for n in range(4))
        assert np.allclose(total[1], t / 2 * (1 - 3 * x * x), atol=1e-9)
        assert np.allclose(total[0], 0.0, atol=1e-9)


@settings(max_examples=6)
@given(st.integers(0, 2 ** 31 - 1))
def test_variation_coefficients_property(seed):
    rng = np.random.default_rng(seed)
    conn = random_polynomial_connection(rng, 2)
    P = tuple(ex.unparse(f) for f in random_polynomial_connection(rng, 2).fields)
    r, k = variation_residuals(conn, P, conn.domain.sample(8, rng))
    assert r <= 1e-9 and k <= 1e-9


def test_second_variation_is_second_derivative_of_energy():
    rel, sv, fit = second_variation_residual()
    assert rel <= 1e-6
    # the quadratic form is the full second derivative, not half of it
    assert abs(sv - fit / 2) > 0.1 * abs(fit)


def test_hamiltonian_direction_at_flat_connection():
    flat = ChartConnection("0", "0", "0", "0", TRIG_CONN.domain)
    f = ex.parse("sin(x)+cos(y)")
    comps = []
    for j in range(4):
        g = f
        for _ in range(3 - j):
            g = ex.diff(g, "x")
        for _ in range(j):
            g = ex.diff(g, "y")
        comps.append(ex.unparse(g))
    X, Y, _ = grid(TORUS, TRAP64)
    # H(f) = (delta*)^3 f = -d^3 f at the flat connection
    assert np.allclose(op.hop(flat, f, (X, Y)).comps, -sampled(comps, X, Y).comps, atol=1e-12)
    assert abs(second_variation(flat, comps, comps, TORUS, TRAP64)) <= 1e-8


@pytest.mark.parametrize("t", [0.0, 0.5, 1.0, 2.0])
def test_jacobi_kills_the_killing_cube(t):
    conn = sphere_family(t)
    x, y = _pts(conn, 10)
    J = op.jacobi(conn, SPHERE_KILLING_CUBE, (x, y), dps=40)
    assert np.max(np.abs(J.comps)) <= 1e-7


def test_jacobi_pairing_is_half_second_variation():
    X, Y, _ = grid(TORUS, TRAP64)
    jab = pairing_values(op.jacobi(TRIG_CONN, TEST_PI, (X, Y)), sampled(TEST_PI2, X, Y),
                         TORUS, TRAP64)
    half = 0.5 * second_variation(TRIG_CONN, TEST_PI, TEST_PI2, TORUS, TRAP64)
    assert abs(jab - half) <= 1e-6 * abs(half)


def test_adjointness():
    for name, v in adjointness_residuals().items():
        assert v <= 1e-10, name


def test_identities_on_random_connections():
    rng = np.random.default_rng(4)
    for _ in range(2):
        conn = random_polynomial_connection(rng, 3)
        at = conn.domain.sample(5, rng)
        res = op.identity_residuals(conn, at, ("x*y", "1+x^2", "y^3-x", "x*y^2"), "x^2*y-y")
        for name, v in res.items():
            assert v <= 1e-8, name
        res = op.identity_residuals(conn, at, ("sin(x)", "x*y"), "y")
        for name, v in res.items():
            assert v <= 1e-8, name


def test_preferred_identity():
    x, y = _pts(bourgeois_cahen(0.0, 0.3, -1.0, -1.0), 10)
    assert op.preferred_nabla_dk_residual(bourgeois_cahen(0.0, 0.3, -1.0, -1.0), (x, y)) <= 1e-9
    assert op.preferred_nabla_dk_residual(bourgeois_cahen(0.0, 0.3, 0.7, -1.0), (x, y)) > 1e-2


def test_lie_derivative_needs_symplectic_field():
    with pytest.raises(op.OperatorError, match="not symplectic"):
        op.lie_derivative(TRIG_CONN, ("x", "0"), ("1", "0"), (0.1, 0.2))
    general = op.lie_derivative(TRIG_CONN, ("x", "0"), ("1", "0"), (0.1, 0.2), general=True)
    assert general.comps == pytest.approx([1.0, 0.0])


def test_lie_derivative_routes_agree():
    X = ("-cos(y)", "cos(x)")     # Hamiltonian field of sin(x) + sin(y)
    a = ("x*y", "sin(y)", "1")
    at = (np.array([0.3, 1.2]), np.array([-0.4, 2.0]))
    c = op.lie_derivative(TRIG_CONN, X, a, at)
    g = op.lie_derivative(TRIG_CONN, X, a, at, general=True)
    assert np.allclose(c.comps, g.comps, atol=1e-12)


def test_hop_k_closed_form_matches_generic():
    rng = np.random.default_rng(9)
    conn = random_polynomial_connection(rng, 4)
    at = conn.domain.sample(10, rng)
    gen = op.generic_curvature(conn, at)
    c = hop_k_closed_form(conn, at).comps
    assert np.max(np.abs(c - gen["hop_k"].comps) / (1 + np.abs(c))) <= 1e-9

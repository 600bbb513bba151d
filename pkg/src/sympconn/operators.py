"""Generic covariant calculus of a symplectic connection on jets.

Everything here is built from the Christoffel symbols and the covariant
derivative of a full tensor, so it provides a route to the curvature that
is independent of the explicit component formulas in
:mod:`sympconn.connection`.

Operators on symmetric covariant tensors::

    delta a   = (-1)^(k-1) nabla_p a_{...}^p      (last index raised)
    delta* a  = -nabla_(i a_...)
    L(a)      = delta*^2 a + a_(i R_jk)
    H(f)      = delta*^3 f - df_(i R_jk) = L(delta* f)
    L*(P)_i   = -delta^2 P_i + P_i^{ab} R_ab
    H*(P)     = delta L*(P)

Tensor fields are passed as tuples of expressions (the symmetric
components, see :mod:`sympconn.tensor2d`); internally they become dicts of
jets keyed by index tuples.
"""
from __future__ import annotations

from itertools import product

import mpmath
import numpy as np

from .connection import ChartConnection, christoffel_from_abcd, _at, mp_points
from .expr import as_expr, eval_jet
from .tensor2d import (SymCov, full_to_sym, pairing_full, symmetrize, sym_to_full)


class OperatorError(ValueError):
    pass


# basic calculus on full tensors --------------------------------------------------
def _rank(T):
    return len(next(iter(T)))


def _unit(i):
    return (1, 0) if i == 0 else (0, 1)


def gamma(F):
    return christoffel_from_abcd(*F)


def nabla(G, T):
    """Covariant derivative; key ``(i,) + I`` holds ``nabla_i T_I``."""
    k = _rank(T)
    out = {}
    for i in (0, 1):
        for I in product((0, 1), repeat=k):
            v = T[I].derivative(*_unit(i))
            for s in range(k):
                for p in (0, 1):
                    g = G[p][i][I[s]]
                    v = v - g * T[I[:s] + (p,) + I[s + 1:]]
            out[(i,) + I] = v
    return out


def d_scalar(f):
    return {(0,): f.derivative(1, 0), (1,): f.derivative(0, 1)}


def delta(G, T):
    """``(-1)^(k-1) nabla_p T_{..}^p`` for a rank-k tensor, ``k >= 1``."""
    k = _rank(T)
    if k == 0:
        raise OperatorError("divergence of a function is undefined")
    N = nabla(G, T)
    sign = (-1) ** (k - 1)
    return {J: sign * (N[(0,) + J + (1,)] - N[(1,) + J + (0,)])
            for J in product((0, 1), repeat=k - 1)}


def delta_star(G, T):
    if _rank(T) == 0:
        f = T[()]
        return {(0,): -f.derivative(1, 0), (1,): -f.derivative(0, 1)}
    return _neg(symmetrize(nabla(G, T), _rank(T) + 1))


def _neg(T):
    return {k: -v for k, v in T.items()}


def _add(S, T):
    return {k: S[k] + T[k] for k in S}


def _scale(T, s):
    return {k: v * s for k, v in T.items()}


def tensor_product(S, T):
    return {I + J: a * b for I, a in S.items() for J, b in T.items()}


def raise_last(T):
    """``T_{I}^{q} = Omega^{qr} T_{I r}``."""
    out = {}
    for I in T:
        base = I[:-1]
        if I[-1] == 0:
            out[base + (0,)] = T[base + (1,)]
            out[base + (1,)] = -T[base + (0,)]
    return out


def slot(T, i):
    """``T_{i ...}`` as a tensor of one rank lower."""
    return {I[1:]: v for I, v in T.items() if I[0] == i}


def ricci_generic(G):
    """Ricci from Christoffels: ``R_jk = R_pjk^p``."""
    R = {}
    for j, k in product((0, 1), repeat=2):
        v = 0.0
        for p in (0, 1):
            v = v + G[p][j][k].derivative(*_unit(p)) - G[p][p][k].derivative(*_unit(j))
            for q in (0, 1):
                v = v + G[p][p][q] * G[q][j][k] - G[p][j][q] * G[q][p][k]
        R[(j, k)] = v
    return R


def ric_action(R, a):
    """``a_(i1 R_i2 i3)``-type symmetrised product of a rank-(k) tensor with Ricci."""
    return symmetrize(tensor_product(a, R), _rank(a) + 2)


def lop_full(G, R, a):
    return _add(delta_star(G, delta_star(G, a)), ric_action(R, a))


def hop_full(G, R, f):
    return lop_full(G, R, delta_star(G, {(): f}))


def lop_adj_full(G, R, P):
    dd = delta(G, delta(G, P))
    return {(i,): -dd[(i,)] + pairing_full(slot(P, i), R) for i in (0, 1)}


def hop_adj_full(G, R, P):
    return delta(G, lop_adj_full(G, R, P))[()]


def b_of_pi(P):
    U = raise_last(P)
    return {(i, j): sum((U[(i, p, q)] * U[(j, q, p)] for p, q in product((0, 1), repeat=2)),
                        0.0)
            for i, j in product((0, 1), repeat=2)}


def t_of_pi(P, Bp):
    return {(i,): -pairing_full(slot(P, i), Bp) for i in (0, 1)}


def pi_star_pi(G, P):
    Bp = b_of_pi(P)
    dB = delta(G, Bp)
    N = nabla(G, P)
    return {(i,): 3 * dB[(i,)] - pairing_full(slot(N, i), P) for i in (0, 1)}


def rho_variation_full(G, R, P):
    """Coefficients of ``rho(nabla + t P)`` in powers of t, beyond order 0."""
    Bp = b_of_pi(P)
    dB = delta(G, Bp)
    dP = delta(G, P)
    Ls = lop_adj_full(G, R, P)
    T = t_of_pi(P, Bp)
    r1 = _scale(Ls, -2.0)
    r2 = {(i,): -2.0 * (dB[(i,)] + pairing_full(slot(P, i), dP)) for i in (0, 1)}
    r3 = _scale(T, -2.0)
    return r1, r2, r3


def k_variation_full(G, R, P):
    Bp = b_of_pi(P)
    k1 = hop_adj_full(G, R, P)
    k2 = 0.5 * delta(G, pi_star_pi(G, P))[()]
    k3 = delta(G, t_of_pi(P, Bp))[()]
    return k1, k2, k3


def lie_full(X, a, G=None):
    """Lie derivative of a covariant tensor along the vector field ``X``.

    With ``G`` given, uses ``X^p nabla_p a + sum_s a_{..p..} nabla_{i_s} X^p``
    (torsion-free, so it agrees with the coordinate formula used otherwise).
    """
    k = _rank(a)
    if G is None:
        dX = [[X[p].derivative(*_unit(i)) for p in (0, 1)] for i in (0, 1)]
        da = {I: (a[I].derivative(1, 0), a[I].derivative(0, 1)) for I in a}
        out = {}
        for I in a:
            v = X[0] * da[I][0] + X[1] * da[I][1]
            for s in range(k):
                for p in (0, 1):
                    v = v + a[I[:s] + (p,) + I[s + 1:]] * dX[I[s]][p]
            out[I] = v
        return out
    N = nabla(G, a)
    nX = [[X[p].derivative(*_unit(i)) + sum((G[p][i][q] * X[q] for q in (0, 1)), 0.0)
           for p in (0, 1)] for i in (0, 1)]
    out = {}
    for I in a:
        v = X[0] * N[(0,) + I] + X[1] * N[(1,) + I]
        for s in range(k):
            for p in (0, 1):
                v = v + a[I[:s] + (p,) + I[s + 1:]] * nX[I[s]][p]
        out[I] = v
    return out


def moment_k_generic(G, R):
    """``K = -delta(rho)/2`` with ``rho = 2 delta Ric``."""
    rho = _scale(delta(G, R), 2.0)
    return -0.5 * delta(G, rho)[()], rho


# evaluation helpers ---------------------------------------------------------------
def field_jets(components, at, order):
    """Full tensor of jets from symmetric-component expressions."""
    comps = [eval_jet(as_expr(c), at, order) for c in components]
    return sym_to_full(comps)


def _frame(conn, at, order):
    at = _at(at)
    F = conn.jets(at, order)
    G = gamma(F)
    return at, G


def _symval(T):
    k = _rank(T)
    if k == 0:
        return np.asarray(T[()].value)
    return SymCov(np.array([np.asarray(c.value) for c in full_to_sym(T, k)]))


def _fullval(T):
    return {k: np.asarray(v.value) for k, v in T.items()}


# public operators --------------------------------------------------------------------
def covdiv(conn: ChartConnection, field, at):
    """``delta`` of a symmetric covariant field given by its components."""
    at, G = _frame(conn, at, 1)
    return _symval(delta(G, field_jets(field, at, 1)))


def sdast(conn: ChartConnection, field, at):
    """``delta*`` of a symmetric field (a function for degree 0)."""
    at, G = _frame(conn, at, 1)
    return _symval(delta_star(G, field_jets(field, at, 1)))


def lop(conn: ChartConnection, oneform, at):
    at, G = _frame(conn, at, 2)
    R = ricci_generic(G)
    return _symval(lop_full(G, R, field_jets(oneform, at, 2)))


def hop(conn: ChartConnection, f, at):
    at, G = _frame(conn, at, 3)
    R = ricci_generic(G)
    return _symval(hop_full(G, R, eval_jet(as_expr(f), at, 3)))


def lop_adjoint(conn: ChartConnection, P, at):
    at, G = _frame(conn, at, 2)
    R = ricci_generic(G)
    return _symval(lop_adj_full(G, R, field_jets(P, at, 2)))


def hop_adjoint(conn: ChartConnection, P, at):
    at, G = _frame(conn, at, 3)
    R = ricci_generic(G)
    return np.asarray(hop_adj_full(G, R, field_jets(P, at, 3)).value)


def lie_derivative(conn: ChartConnection, X, alpha, at, general=False, tol=1e-9):
    """Lie derivative of a symmetric field along the vector field ``X``.

    ``X`` is a pair of expressions ``(X^x, X^y)``.  Unless ``general`` is set,
    ``X`` must be symplectic (divergence free) and the covariant form of the
    formula is used.
    """
    at, G = _frame(conn, at, 1)
    Xj = tuple(eval_jet(as_expr(c), at, 1) for c in X)
    a = field_jets(alpha, at, 1)
    if general:
        return _symval(lie_full(Xj, a))
    div = np.asarray((Xj[0].derivative(1, 0) + Xj[1].derivative(0, 1)).value)
    if np.max(np.abs(div)) > tol:
        raise OperatorError("vector field is not symplectic (non-zero divergence); "
                            "pass general=True for the coordinate formula")
    return _symval(lie_full(Xj, a, G))


def jacobi_full(G, R, P):
    Kj, _ = moment_k_generic(G, R)
    HK = (-Kj.derivative(0, 1), Kj.derivative(1, 0))
    hh = hop_full(G, R, hop_adj_full(G, R, P))
    return _add(hh, lie_full(HK, P))


def jacobi(conn: ChartConnection, alpha, at, dps=None):
    """``J(alpha) = H H*(alpha) + L_{H_K} alpha``; ``dps`` as in ``hop_k_closed_form``."""
    if dps:
        with mpmath.workdps(dps):
            out = jacobi(conn, alpha, mp_points(at))
        return SymCov(np.asarray(out.comps, dtype=float))
    at, G = _frame(conn, at, 6)
    R = ricci_generic(G)
    return _symval(jacobi_full(G, R, field_jets(alpha, at, 6)))


def variation_rho(conn: ChartConnection, P, at):
    """``[r0, r1, r2, r3]`` with ``rho(nabla + tP) = sum r_n t^n``."""
    at, G = _frame(conn, at, 2)
    R = ricci_generic(G)
    r0 = _scale(delta(G, R), 2.0)
    r1, r2, r3 = rho_variation_full(G, R, field_jets(P, at, 2))
    return [_symval(r) for r in (r0, r1, r2, r3)]


def variation_k(conn: ChartConnection, P, at):
    """``[k0, k1, k2, k3]`` with ``K(nabla + tP) = sum k_n t^n``."""
    at, G = _frame(conn, at, 3)
    R = ricci_generic(G)
    k0, _ = moment_k_generic(G, R)
    k1, k2, k3 = k_variation_full(G, R, field_jets(P, at, 3))
    return [np.asarray(v.value) for v in (k0, k1, k2, k3)]


def generic_curvature(conn: ChartConnection, at):
    """Ricci, rho, K and H(K) by the generic route (order-6 jets)."""
    at, G = _frame(conn, at, 6)
    R = ricci_generic(G)
    Kj, rho = moment_k_generic(G, R)
    N = nabla(G, R)
    return {
        "ricci": _symval(R),
        "nabla_ricci": _fullval(N),
        "rho": _symval(rho),
        "K": np.asarray(Kj.value),
        "hop_k": _symval(hop_full(G, R, Kj)),
        "sdast_ricci": _symval(delta_star(G, R)),
        "sdast_rho": _symval(delta_star(G, rho)),
    }


def second_variation_density(conn: ChartConnection, alpha, beta, at):
    """Pointwise ``2 H*a H*b + 2 <L_{H_K} a, b>``."""
    at, G = _frame(conn, at, 5)
    R = ricci_generic(G)
    a = field_jets(alpha, at, 5)
    b = field_jets(beta, at, 5)
    Kj, _ = moment_k_generic(G, R)
    HK = (-Kj.derivative(0, 1), Kj.derivative(1, 0))
    ha = hop_adj_full(G, R, a)
    hb = hop_adj_full(G, R, b)
    lie = lie_full(HK, a)
    val = 2 * ha * hb + 2 * pairing_full(lie, b)
    return np.asarray(val.value)


# identities --------------------------------------------------------------------------
def _omega_low(i, j):
    return 0.0 if i == j else (1.0 if (i, j) == (0, 1) else -1.0)


def _ricci_raised_action(R, a):
    """``R_(i1^p a_{i2..ik) p}`` with ``R_i^p = Omega^{pq} R_iq``."""
    k = _rank(a)
    Rr = raise_last(R)
    T = {}
    for I in product((0, 1), repeat=k):
        v = 0.0
        for p in (0, 1):
            v = v + Rr[(I[0], p)] * a[I[1:] + (p,)]
        T[I] = v
    return symmetrize(T, k)


def identity_residuals(conn: ChartConnection, at, alpha, f):
    """Max residuals of the structural identities at the given points.

    ``alpha`` is a symmetric field (tuple of component expressions, degree
    >= 1) and ``f`` a function; both enter the universal identities, the
    connection-specific ones use only ``conn``.
    """
    at, G = _frame(conn, at, 6)
    R = ricci_generic(G)
    a = field_jets(alpha, at, 6)
    k = _rank(a)
    out = {}

    # nabla a = -delta* a + (-1)^(k+1) k/(k+1) Omega_(i(i1) delta a_(i2..ik))
    N = nabla(G, a)
    ds = delta_star(G, a)
    da = delta(G, a)
    res = 0.0
    for I in product((0, 1), repeat=k + 1):
        i, rest = I[0], I[1:]
        acc = 0.0
        perms = 0
        for s in range(k):
            acc = acc + _omega_low(i, rest[s]) * da[rest[:s] + rest[s + 1:]]
            perms += 1
        term = (-1) ** (k + 1) * (k / (k + 1)) * (1.0 / perms) * acc
        r = N[I] + ds[I] - term
        res = max(res, float(np.max(np.abs(np.asarray(r.value)))))
    out["nabla_decomposition"] = res

    # (k+1) delta delta* a + k delta* delta a = (-1)^k k(k+1) R_(i^p a_..p)
    lhs = _add(_scale(delta(G, delta_star(G, a)), k + 1.0),
               _scale(delta_star(G, delta(G, a)), float(k)))
    rhs = _scale(_ricci_raised_action(R, a), (-1) ** k * k * (k + 1.0))
    out["delta_commutator"] = max(float(np.max(np.abs(np.asarray((lhs[I] - rhs[I]).value))))
                                  for I in lhs)

    # H*H(f) = {f, K}
    fj = eval_jet(as_expr(f), at, 6)
    Kj, rho = moment_k_generic(G, R)
    hh = hop_adj_full(G, R, hop_full(G, R, fj))
    pb = fj.derivative(1, 0) * Kj.derivative(0, 1) - fj.derivative(0, 1) * Kj.derivative(1, 0)
    out["hop_adjoint_hop"] = float(np.max(np.abs(np.asarray((hh - pb).value))))

    # delta* rho = -3 delta delta* Ric
    dsr = delta_star(G, rho)
    ddr = delta(G, delta_star(G, R))
    out["sdast_rho"] = max(float(np.max(np.abs(np.asarray((dsr[I] + 3 * ddr[I]).value))))
                           for I in dsr)

    # d rho = -2 K Omega
    drho = rho[(1,)].derivative(1, 0) - rho[(0,)].derivative(0, 1)
    out["d_rho"] = float(np.max(np.abs(np.asarray((drho + 2 * Kj).value))))

    # nabla dK formula
    dK = d_scalar(Kj)
    NdK = nabla(G, dK)
    rr = raise_last({(0,): rho[(0,)], (1,): rho[(1,)]})
    sdric = delta_star(G, R)
    sdrho = delta_star(G, rho)
    ddd = delta(G, delta_star(G, delta_star(G, rho)))
    Rr = raise_last(R)
    res = 0.0
    for i, j in product((0, 1), repeat=2):
        t1 = rho[(i,)] * rho[(j,)] * (1.0 / 6.0) - Kj * R[(i, j)]
        t2 = -(rr[(0,)] * sdric[(i, j, 0)] + rr[(1,)] * sdric[(i, j, 1)])
        t3 = 2.0 * sum((Rr[(i, p)] * sdrho[(j, p)] + Rr[(j, p)] * sdrho[(i, p)]
                        for p in (0, 1)), 0.0)
        t4 = -1.5 * ddd[(i, j)]
        r = NdK[(i, j)] - (t1 + t2 + t3 + t4)
        res = max(res, float(np.max(np.abs(np.asarray(r.value)))))
    out["nabla_dk"] = res
    return out


def preferred_nabla_dk_residual(conn: ChartConnection, at):
    """Max of ``|nabla dK - rho rho / 6 + K Ric|``; zero on preferred connections."""
    at, G = _frame(conn, at, 5)
    R = ricci_generic(G)
    Kj, rho = moment_k_generic(G, R)
    NdK = nabla(G, d_scalar(Kj))
    res = 0.0
    for i, j in product((0, 1), repeat=2):
        r = NdK[(i, j)] - (rho[(i,)] * rho[(j,)] * (1.0 / 6.0) - Kj * R[(i, j)])
        res = max(res, float(np.max(np.abs(np.asarray(r.value)))))
    return res

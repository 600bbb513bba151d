"""Symbolic reference computations with sympy.

Nothing here imports sympconn.  The connection is rebuilt from its
Christoffel symbols and the curvature goes through the textbook chain
Riemann -> Ricci -> rho -> K.
"""
from itertools import product

import sympy as sp

x, y = sp.symbols("x y", real=True)
X = (x, y)
OMEGA_UP = ((0, 1), (-1, 0))
OMEGA_LOW = ((0, 1), (-1, 0))


def sym(text):
    return sp.sympify(text.replace("^", "**"), locals={"x": x, "y": y})


def christoffel(A, B, C, D):
    """``G[k][i][j]``: nabla_i d_j = G^k_ij d_k."""
    A, B, C, D = (sym(s) if isinstance(s, str) else s for s in (A, B, C, D))
    return [[[A, -D], [-D, C]], [[B, -A], [-A, D]]]


def riemann(G):
    """``R[l][i][j][k]`` = component of R(d_i, d_j) d_k along d_l."""
    R = {}
    for l, i, j, k in product(range(2), repeat=4):
        v = sp.diff(G[l][j][k], X[i]) - sp.diff(G[l][i][k], X[j])
        v += sum(G[l][i][m] * G[m][j][k] - G[l][j][m] * G[m][i][k] for m in range(2))
        R[l, i, j, k] = v
    return R


def ricci(G):
    Rm = riemann(G)
    return {(j, k): sp.expand(sum(Rm[p, p, j, k] for p in range(2))) for j, k in product(range(2), repeat=2)}


def cov_deriv(G, T, rank):
    """``(nabla_i T)_{j...}`` for a covariant tensor dict keyed by index tuples."""
    out = {}
    for i in range(2):
        for I in product(range(2), repeat=rank):
            v = sp.diff(T[I], X[i])
            for s in range(rank):
                v -= sum(G[p][i][I[s]] * T[I[:s] + (p,) + I[s + 1:]] for p in range(2))
            out[(i,) + I] = v
    return out


def rho(G):
    """``rho_i = 2 nabla^p Ric_ip`` with ``nabla^p = Omega^pq nabla_q``."""
    NR = cov_deriv(G, ricci(G), 2)
    return [sp.simplify(2 * sum(OMEGA_UP[p][q] * NR[q, i, p] for p, q in product(range(2), repeat=2)))
            for i in range(2)]


def moment_k(G):
    """``K = nabla^p rho_p / 2``."""
    r = rho(G)
    Nr = cov_deriv(G, {(0,): r[0], (1,): r[1]}, 1)
    return sp.simplify(sum(OMEGA_UP[p][q] * Nr[q, p] for p, q in product(range(2), repeat=2)) / 2)


def lie_of_connection(G, f):
    """``(L_{H_f} nabla)`` lowered: ``P_ijk = Omega_lk (L_X nabla)^l_ij`` with ``X = (-f_y, f_x)``."""
    f = sym(f) if isinstance(f, str) else f
    V = (-sp.diff(f, y), sp.diff(f, x))
    L = {}
    for l, i, j in product(range(2), repeat=3):
        v = sp.diff(V[l], X[i], X[j])
        v += sum(V[m] * sp.diff(G[l][i][j], X[m]) for m in range(2))
        v -= sum(G[m][i][j] * sp.diff(V[l], X[m]) for m in range(2))
        v += sum(G[l][m][j] * sp.diff(V[m], X[i]) + G[l][i][m] * sp.diff(V[m], X[j]) for m in range(2))
        L[l, i, j] = v
    return {(i, j, k): sp.expand(sum(L[l, i, j] * OMEGA_LOW[l][k] for l in range(2)))
            for i, j, k in product(range(2), repeat=3)}


def numeric(e):
    return sp.lambdify((x, y), e, "numpy")

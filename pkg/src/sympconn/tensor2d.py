"""Symplectic linear algebra in two dimensions.

Conventions used throughout the package::

    Omega = dx ^ dy,        Omega_xy = Omega^xy = +1
    X_i = X^p Omega_pi,     X^i = Omega^ip X_p      (so a^x = a_y, a^y = -a_x)
    H_f^i = -df^i = (-f_y, f_x)
    {f, g} = f_x g_y - f_y g_x = dg(H_f)

A symmetric covariant k-tensor is stored by its k+1 distinct components
``t[j] = T(x,...,x, y,...,y)`` with ``j`` copies of ``y``.  Full tensors are
dicts keyed by index tuples (0 for x, 1 for y); their values may be plain
numbers, arrays or jets, since only ring operations are used.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

OMEGA_LOW = ((0.0, 1.0), (-1.0, 0.0))   # Omega_ij
OMEGA_UP = ((0.0, 1.0), (-1.0, 0.0))    # Omega^ij


@dataclass(frozen=True)
class SymCov:
    """Values of a symmetric covariant tensor at one point or a batch.

    ``comps`` has shape ``(degree + 1, *batch)``.
    """

    comps: np.ndarray

    def __post_init__(self):
        c = np.array(self.comps, dtype=float)
        if c.ndim == 0:
            raise ValueError("SymCov needs at least one component")
        if not np.all(np.isfinite(c)):
            raise ValueError("SymCov components must be finite")
        c.flags.writeable = False
        object.__setattr__(self, "comps", c)

    @property
    def degree(self) -> int:
        return self.comps.shape[0] - 1

    def __getitem__(self, j):
        return self.comps[j]

    def coefficients(self) -> np.ndarray:
        """Coefficients in the basis ``dx^(k-j) . dy^j`` of symmetric products."""
        k = self.degree
        w = np.array([math.comb(k, j) for j in range(k + 1)], dtype=float)
        return self.comps * w.reshape((-1,) + (1,) * (self.comps.ndim - 1))

    def full(self) -> dict:
        return sym_to_full(list(self.comps))

    def __add__(self, other):
        return SymCov(self.comps + other.comps)

    def __sub__(self, other):
        return SymCov(self.comps - other.comps)

    def __mul__(self, s):
        return SymCov(self.comps * s)

    __rmul__ = __mul__


OneFormVal = SymCov


def sym_to_full(comps):
    """Full index dict from the k+1 symmetric components."""
    k = len(comps) - 1
    return {I: comps[sum(I)] for I in product((0, 1), repeat=k)}


def full_to_sym(T, k):
    """Symmetric part of a full tensor, as k+1 components."""
    acc = [None] * (k + 1)
    for I, v in T.items():
        j = sum(I)
        acc[j] = v if acc[j] is None else acc[j] + v
    return [acc[j] * (1.0 / math.comb(k, j)) for j in range(k + 1)]


def symmetrize(T, k):
    return sym_to_full(full_to_sym(T, k))


def rank(T) -> int:
    return len(next(iter(T)))


def raise_vector(a):
    """``a^i = Omega^ip a_p`` for a one-form given as ``(a_x, a_y)``."""
    return (a[1], -a[0])


def lower_vector(v):
    """``v_i = v^p Omega_pi`` for a vector ``(v^x, v^y)``."""
    return (-v[1], v[0])


def hamiltonian_vf(df):
    """Hamiltonian vector field ``(-f_y, f_x)`` from ``df = (f_x, f_y)``."""
    return (-df[1], df[0])


def poisson(df, dg):
    """``{f, g} = f_x g_y - f_y g_x``."""
    return df[0] * dg[1] - df[1] * dg[0]


def omega(X, Y):
    """``Omega(X, Y) = X^x Y^y - X^y Y^x``."""
    return X[0] * Y[1] - X[1] * Y[0]


def pairing_density(a, b):
    """Full contraction ``a_{i..} b^{i..}`` with every index of ``b`` raised.

    Accepts :class:`SymCov` values or component sequences of equal degree.
    For degree k this is ``sum_j (-1)^j C(k, j) a[j] b[k-j]``; it is graded
    symmetric, ``<a, b> = (-1)^k <b, a>``.
    """
    ca = a.comps if isinstance(a, SymCov) else a
    cb = b.comps if isinstance(b, SymCov) else b
    k = len(ca) - 1
    if len(cb) - 1 != k:
        raise ValueError(f"pairing of degrees {k} and {len(cb) - 1}")
    out = 0.0
    for j in range(k + 1):
        out = out + ((-1) ** j * math.comb(k, j)) * (ca[j] * cb[k - j])
    return out


def pairing_full(A, B):
    """Full contraction of two full tensors with every index of ``B`` raised."""
    out = 0.0
    for I, a in A.items():
        J = tuple(1 - i for i in I)
        sign = (-1) ** sum(I)
        out = out + sign * (a * B[J])
    return out


def contract_last_raised(T, S):
    """``T_{I p} S^{p}`` over the last index of ``T``; ``S`` is a one-form."""
    out = {}
    for I, v in T.items():
        if I[-1] == 0:
            out[I[:-1]] = out.get(I[:-1], 0.0) + v * S[1]
        else:
            out[I[:-1]] = out.get(I[:-1], 0.0) - v * S[0]
    return out

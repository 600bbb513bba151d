"""Truncated bivariate Taylor jets.

A jet of order ``m`` at a point stores the raw partial derivatives
``d^(i+j) f / dx^i dy^j`` for ``i + j <= m``.  Coefficients are laid out by
total degree, then by the number of ``y`` derivatives, so truncating a jet
is a slice.  Trailing array axes are a batch of independent base points.
"""
from __future__ import annotations

import math
from functools import lru_cache

import mpmath
import numpy as np

MAX_ORDER = 6

FUNCTIONS = ("exp", "log", "sin", "cos", "tan", "sinh", "cosh", "tanh",
             "sqrt", "atan", "pow", "reciprocal")


class JetError(ValueError):
    """Structural misuse of a jet (orders, shapes, non-finite data)."""


class JetDomainError(ValueError):
    """An elementary function was applied outside its domain."""


def ncoeffs(order: int) -> int:
    return (order + 1) * (order + 2) // 2


def index(i: int, j: int) -> int:
    """Position of the partial ``(i, j)`` in the coefficient layout."""
    n = i + j
    return n * (n + 1) // 2 + j


@lru_cache(maxsize=None)
def _pairs(order):
    return tuple((n - j, j) for n in range(order + 1) for j in range(n + 1))


@lru_cache(maxsize=None)
def _product_table(order):
    out_start, ia, ib, w = [], [], [], []
    for i, j in _pairs(order):
        out_start.append(len(ia))
        for p in range(i + 1):
            for q in range(j + 1):
                ia.append(index(p, q))
                ib.append(index(i - p, j - q))
                w.append(math.comb(i, p) * math.comb(j, q))
    return (np.array(ia), np.array(ib), np.array(w, dtype=float),
            np.array(out_start))


@lru_cache(maxsize=None)
def _shift_table(order, dx, dy):
    return np.array([index(i + dx, j + dy) for i, j in _pairs(order - dx - dy)])


def as_array(v):
    """Float array, or an object array when ``v`` holds mpmath numbers."""
    if isinstance(v, np.ndarray) and v.dtype == object:
        return v
    if isinstance(v, mpmath.mpf):
        return np.array(v, dtype=object)
    if isinstance(v, (list, tuple)) and any(isinstance(e, mpmath.mpf) for e in np.ravel(np.array(v, dtype=object))):
        return np.array(v, dtype=object)
    return np.asarray(v, dtype=float)


def _all_finite(c):
    if c.dtype == object:
        return all(mpmath.isfinite(e) for e in c.flat)
    return bool(np.all(np.isfinite(c)))


def _check_order(order):
    if not isinstance(order, (int, np.integer)) or order < 0:
        raise JetError(f"jet order must be a non-negative integer, got {order!r}")


class Jet2:
    """Immutable truncated Taylor jet in the chart variables ``(x, y)``.

    Parameters
    ----------
    coeffs : array_like
        Raw partials in layout order, shape ``(ncoeffs(order), *batch)``.
    order : int
        Truncation order.

    Arithmetic between jets of different order truncates to the smaller
    order; the checked variants are :func:`jet_add` and :func:`jet_mul`.
    """

    __slots__ = ("_order", "_c")

    def __init__(self, coeffs, order: int):
        _check_order(order)
        c = np.array(as_array(coeffs))
        if c.ndim == 0 or c.shape[0] != ncoeffs(order):
            raise JetError(
                f"order {order} needs {ncoeffs(order)} coefficients, got shape {c.shape}")
        if not _all_finite(c):
            raise JetError("jet coefficients must be finite")
        c.flags.writeable = False
        object.__setattr__(self, "_order", int(order))
        object.__setattr__(self, "_c", c)

    @classmethod
    def _raw(cls, c, order):
        if not _all_finite(c):
            raise JetError("jet coefficients must be finite")
        obj = cls.__new__(cls)
        c.flags.writeable = False
        object.__setattr__(obj, "_order", order)
        object.__setattr__(obj, "_c", c)
        return obj

    def __setattr__(self, name, value):
        raise AttributeError("Jet2 is immutable")

    def __reduce__(self):
        return (Jet2, (np.array(self._c), self._order))

    @classmethod
    def constant(cls, value, order: int) -> "Jet2":
        _check_order(order)
        v = as_array(value)
        c = np.zeros((ncoeffs(order),) + v.shape, dtype=v.dtype)
        c[0, ...] = v
        return cls._raw(c, order)

    @classmethod
    def variable(cls, name: str, value, order: int) -> "Jet2":
        """The coordinate function ``x`` or ``y`` expanded at ``value``."""
        _check_order(order)
        if name not in ("x", "y"):
            raise JetError(f"unknown chart variable {name!r}")
        v = as_array(value)
        c = np.zeros((ncoeffs(order),) + v.shape, dtype=v.dtype)
        c[0, ...] = v
        if order >= 1:
            c[index(1, 0) if name == "x" else index(0, 1)] = 1.0
        return cls._raw(c, order)

    @property
    def order(self) -> int:
        return self._order

    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @property
    def value(self):
        return self._c[0]

    @property
    def batch_shape(self):
        return self._c.shape[1:]

    def partial(self, dx: int, dy: int):
        if dx < 0 or dy < 0:
            raise JetError("derivative counts must be non-negative")
        if dx + dy > self._order:
            raise JetError(
                f"partial ({dx},{dy}) exceeds jet order {self._order}")
        return self._c[index(dx, dy)]

    def derivative(self, dx: int = 0, dy: int = 0) -> "Jet2":
        """Jet of ``d^(dx+dy) f / dx^dx dy^dy``, of order ``order - dx - dy``."""
        if dx + dy > self._order:
            raise JetError(
                f"cannot differentiate ({dx},{dy}) a jet of order {self._order}")
        if dx == 0 and dy == 0:
            return self
        return Jet2._raw(self._c[_shift_table(self._order, dx, dy)],
                         self._order - dx - dy)

    def truncate(self, order: int) -> "Jet2":
        if order > self._order:
            raise JetError(f"cannot raise jet order {self._order} to {order}")
        if order == self._order:
            return self
        return Jet2._raw(self._c[:ncoeffs(order)], order)

    # arithmetic -------------------------------------------------------
    def _align(self, other):
        m = min(self._order, other._order)
        return self.truncate(m)._c, other.truncate(m)._c, m

    def __add__(self, other):
        if isinstance(other, Jet2):
            a, b, m = self._align(other)
            return Jet2._raw(a + b, m)
        v = as_array(other)
        c = self._c + np.zeros(v.shape, dtype=v.dtype)
        c[0, ...] = c[0] + v
        return Jet2._raw(c, self._order)

    __radd__ = __add__

    def __neg__(self):
        return Jet2._raw(-self._c, self._order)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet2):
            a, b, m = self._align(other)
            return Jet2._raw(_mul_coeffs(a, b, m), m)
        return Jet2._raw(self._c * as_array(other), self._order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet2):
            return self * jet_apply("reciprocal", other)
        v = as_array(other)
        if np.any(v == 0):
            raise JetDomainError("division by zero")
        return Jet2._raw(self._c / v, self._order)

    def __rtruediv__(self, other):
        return jet_apply("reciprocal", self) * other

    def __pow__(self, n):
        if isinstance(n, (int, np.integer)) or float(n).is_integer():
            n = int(n)
            if n < 0:
                return jet_apply("reciprocal", self) ** (-n)
            result = Jet2.constant(np.ones(self.batch_shape), self._order)
            base = self
            while n:
                if n & 1:
                    result = result * base
                n >>= 1
                if n:
                    base = base * base
            return result
        return jet_apply("pow", self, exponent=float(n))

    def __repr__(self):
        return f"Jet2(order={self._order}, batch={self.batch_shape})"


def _mul_coeffs(a, b, m):
    ia, ib, w, starts = _product_table(m)
    terms = a[ia] * b[ib]
    terms *= w.reshape((-1,) + (1,) * (terms.ndim - 1))
    return np.add.reduceat(terms, starts, axis=0)


def jet_add(a: Jet2, b: Jet2) -> Jet2:
    if a.order != b.order:
        raise JetError(f"incompatible jet orders {a.order} and {b.order}")
    return a + b


def jet_mul(a: Jet2, b: Jet2) -> Jet2:
    if a.order != b.order:
        raise JetError(f"incompatible jet orders {a.order} and {b.order}")
    return a * b


def jet_partial(a: Jet2, dx: int, dy: int):
    return a.partial(dx, dy)


# univariate Taylor series -------------------------------------------------
def _useries_mul(a, b):
    m = a.shape[0] - 1
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=np.result_type(a, b))
    for n in range(m + 1):
        for k in range(n + 1):
            out[n] = out[n] + a[k] * b[n - k]
    return out


def _useries_recip(a):
    m = a.shape[0] - 1
    out = np.zeros_like(a)
    out[0] = 1.0 / a[0]
    for n in range(1, m + 1):
        s = np.zeros_like(a[0])
        for k in range(1, n + 1):
            s = s + a[k] * out[n - k]
        out[n] = -s / a[0]
    return out


def _fail(fn, v, mask, why):
    bad = np.asarray(v)[mask].ravel()[0] if np.ndim(v) else float(v)
    raise JetDomainError(f"{fn}: {why} at argument {bad!r}")


_MP = {name: np.frompyfunc(getattr(mpmath, name), 1, 1)
       for name in ("exp", "log", "sin", "cos", "sinh", "cosh", "atan")}


def _f(name, v):
    if v.dtype == object:
        return _MP[name](v)
    return getattr(np, "arctan" if name == "atan" else name)(v)


def _series(fn, v, m, exponent=None):
    """Normalised Taylor coefficients ``f^(n)(v) / n!`` for ``n <= m``."""
    v = as_array(v)
    shape = (m + 1,) + v.shape
    fact = np.array([math.factorial(n) for n in range(m + 1)], dtype=float)
    fact = fact.reshape((-1,) + (1,) * v.ndim)
    out = np.zeros(shape, dtype=v.dtype)
    if fn == "exp":
        out[:] = _f("exp", v)
        return out / fact
    if fn in ("sin", "cos"):
        s, c = _f("sin", v), _f("cos", v)
        cyc = [s, c, -s, -c] if fn == "sin" else [c, -s, -c, s]
        for n in range(m + 1):
            out[n] = cyc[n % 4]
        return out / fact
    if fn in ("sinh", "cosh"):
        sh, ch = _f("sinh", v), _f("cosh", v)
        cyc = [sh, ch] if fn == "sinh" else [ch, sh]
        for n in range(m + 1):
            out[n] = cyc[n % 2]
        return out / fact
    if fn == "log":
        if np.any(v <= 0):
            _fail(fn, v, v <= 0, "non-positive argument")
        out[0] = _f("log", v)
        for n in range(1, m + 1):
            out[n] = (-1) ** (n - 1) / (n * v ** n)
        return out
    if fn == "reciprocal":
        if np.any(v == 0):
            _fail(fn, v, v == 0, "division by zero")
        for n in range(m + 1):
            out[n] = (-1) ** n / v ** (n + 1)
        return out
    if fn in ("sqrt", "pow"):
        e = 0.5 if fn == "sqrt" else exponent
        if e is None:
            raise JetError("pow needs a constant exponent")
        e = float(e)
        if e.is_integer() and e >= 0:
            bad = np.zeros(v.shape, dtype=bool)
        elif e.is_integer():
            bad = v == 0
        else:
            bad = v < 0 if (m == 0 and e > 0) else v <= 0
        if np.any(bad):
            _fail(fn, v, bad, "argument outside domain")
        coef = 1.0
        for n in range(m + 1):
            if e.is_integer() and n > e >= 0:
                break
            out[n] = coef * (v ** (e - n) if v.dtype == object else np.power(v, e - n))
            coef *= (e - n) / (n + 1)
        return out
    if fn in ("tan", "tanh"):
        num = _series("sin" if fn == "tan" else "sinh", v, m)
        den = _series("cos" if fn == "tan" else "cosh", v, m)
        if np.any(den[0] == 0):
            _fail(fn, v, den[0] == 0, "pole")
        return _useries_mul(num, _useries_recip(den))
    if fn == "atan":
        if m == 0:
            out[0] = _f("atan", v)
            return out
        u = np.zeros((m,) + v.shape, dtype=v.dtype)
        u[0] = 1.0 + v * v
        if m > 1:
            u[1] = 2.0 * v
        if m > 2:
            u[2] = 1.0
        d = _useries_recip(u)
        out[0] = _f("atan", v)
        for n in range(1, m + 1):
            out[n] = d[n - 1] / n
        return out
    raise JetError(f"unknown elementary function {fn!r}")


def jet_apply(fn: str, a: Jet2, exponent: float | None = None) -> Jet2:
    """Compose an elementary function with a jet.

    Uses the univariate Taylor series of ``fn`` at the jet's value and
    Horner evaluation in the nilpotent remainder.
    """
    m = a.order
    coef = _series(fn, a.value, m, exponent)
    h = Jet2._raw(np.concatenate([np.zeros_like(a.coeffs[:1]), a.coeffs[1:]]), m)
    result = Jet2.constant(coef[m], m)
    for n in range(m - 1, -1, -1):
        result = h * result + coef[n]
    return result


def taylor_coefficient(a: Jet2, i: int, j: int):
    """Normalised Taylor coefficient ``partial(i, j) / (i! j!)``."""
    return a.partial(i, j) / (math.factorial(i) * math.factorial(j))

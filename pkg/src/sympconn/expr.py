"""Scalar expressions in the chart variables ``x`` and ``y``.

Grammar (``^`` is right associative and binds tighter than unary minus)::

    expr    = term , { ("+" | "-") , term } ;
    term    = unary , { ("*" | "/") , unary } ;
    unary   = "-" , unary | power ;
    power   = atom , [ "^" , unary ] ;
    atom    = number | "x" | "y" | "pi" | "e"
            | func , "(" , expr , ")" | "(" , expr , ")" ;

There is no implicit multiplication.  Expressions evaluate on jets (for
derivatives), compile to plain float/numpy code (for integrators), and
differentiate symbolically (for families built from a potential).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

import mpmath

from .jet import Jet2, JetDomainError, as_array, jet_apply

FUNCS = ("exp", "log", "sin", "cos", "tan", "sinh", "cosh", "tanh", "sqrt", "atan")
CONSTS = {"pi": math.pi, "e": math.e}
VARS = ("x", "y")


class ParseError(ValueError):
    """Syntax error with the byte offset of the offending token."""

    def __init__(self, offset: int, message: str, expected: str = ""):
        self.offset = offset
        self.message = message
        self.expected = expected
        text = f"{message} at offset {offset}"
        if expected:
            text += f" (expected {expected})"
        super().__init__(text)


# AST ----------------------------------------------------------------------
class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class Num(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Const(Expr):
    name: str


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr


@dataclass(frozen=True)
class Bin(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Call(Expr):
    func: str
    arg: Expr


# tokenizer ----------------------------------------------------------------
_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
""", re.VERBOSE)


def tokenize(text: str):
    """List of ``(kind, text, offset)``; ends with an ``eof`` token."""
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(pos, f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        if kind != "ws":
            toks.append((kind, m.group(), pos))
        pos = m.end()
    toks.append(("eof", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text):
        self.toks = tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text):
        kind, t, off = self.peek()
        if t != text:
            got = "end of input" if kind == "eof" else repr(t)
            raise ParseError(off, f"unexpected {got}", repr(text))
        return self.take()

    def parse(self):
        node = self.expr()
        kind, t, off = self.peek()
        if kind != "eof":
            raise ParseError(off, f"unexpected {t!r}", "operator or end of input")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            node = Bin(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            node = Bin(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[1] == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            return Bin("^", base, self.unary())
        return base

    def atom(self):
        kind, t, off = self.take()
        if kind == "num":
            return Num(float(t))
        if kind == "ident":
            if t in VARS:
                return Var(t)
            if t in CONSTS:
                return Const(t)
            if t in FUNCS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(t, arg)
            raise ParseError(off, f"unknown identifier {t!r}",
                             "x, y, pi, e or a function name")
        if t == "(":
            node = self.expr()
            self.expect(")")
            return node
        got = "end of input" if kind == "eof" else repr(t)
        raise ParseError(off, f"unexpected {got}", "number, variable, function or '('")


def parse(text: str) -> Expr:
    return _Parser(text).parse()


def as_expr(obj) -> Expr:
    """Accept an AST, a number or expression text."""
    if isinstance(obj, Expr):
        return obj
    if isinstance(obj, (int, float, np.integer, np.floating)):
        return num(float(obj))
    if isinstance(obj, str):
        return parse(obj)
    raise TypeError(f"cannot interpret {obj!r} as an expression")


def unparse(node: Expr) -> str:
    """Fully parenthesised text that parses back to the same tree."""
    if isinstance(node, Num):
        s = repr(float(node.value))
        return f"(-{s[1:]})" if s.startswith("-") else s
    if isinstance(node, (Var, Const)):
        return node.name
    if isinstance(node, Neg):
        return f"(-{unparse(node.operand)})"
    if isinstance(node, Bin):
        return f"({unparse(node.left)}{node.op}{unparse(node.right)})"
    if isinstance(node, Call):
        return f"{node.func}({unparse(node.arg)})"
    raise TypeError(node)


# smart constructors with light folding -------------------------------------
ZERO, ONE = Num(0.0), Num(1.0)


def num(v: float) -> Expr:
    v = float(v)
    if not math.isfinite(v):
        raise ValueError(f"non-finite constant {v}")
    return Neg(Num(-v)) if v < 0 else Num(v)


def const_value(node: Expr):
    """Numeric value of a variable-free tree, else None."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Neg) and isinstance(node.operand, Num):
        return -node.operand.value
    return None


def add(a, b):
    a, b = as_expr(a), as_expr(b)
    va, vb = const_value(a), const_value(b)
    if va == 0:
        return b
    if vb == 0:
        return a
    if va is not None and vb is not None:
        return num(va + vb)
    return Bin("+", a, b)


def sub(a, b):
    a, b = as_expr(a), as_expr(b)
    va, vb = const_value(a), const_value(b)
    if vb == 0:
        return a
    if va == 0:
        return neg(b)
    if va is not None and vb is not None:
        return num(va - vb)
    return Bin("-", a, b)


def neg(a):
    a = as_expr(a)
    va = const_value(a)
    if va is not None:
        return num(-va)
    if isinstance(a, Neg):
        return a.operand
    return Neg(a)


def mul(a, b):
    a, b = as_expr(a), as_expr(b)
    va, vb = const_value(a), const_value(b)
    if va == 0 or vb == 0:
        return ZERO
    if va == 1:
        return b
    if vb == 1:
        return a
    if va == -1:
        return neg(b)
    if vb == -1:
        return neg(a)
    if va is not None and vb is not None:
        return num(va * vb)
    return Bin("*", a, b)


def div(a, b):
    a, b = as_expr(a), as_expr(b)
    va, vb = const_value(a), const_value(b)
    if vb == 0:
        raise ZeroDivisionError("division by constant zero")
    if va == 0:
        return ZERO
    if vb == 1:
        return a
    if va is not None and vb is not None:
        return num(va / vb)
    return Bin("/", a, b)


def power(a, b):
    a, b = as_expr(a), as_expr(b)
    vb = const_value(b)
    if vb == 0:
        return ONE
    if vb == 1:
        return a
    return Bin("^", a, b)


def call(func, a):
    if func not in FUNCS:
        raise ValueError(f"unknown function {func!r}")
    return Call(func, as_expr(a))


def total(terms):
    out = ZERO
    for t in terms:
        out = add(out, t)
    return out


def free_vars(node: Expr) -> frozenset:
    if isinstance(node, Var):
        return frozenset([node.name])
    if isinstance(node, (Num, Const)):
        return frozenset()
    if isinstance(node, (Neg, Call)):
        return free_vars(node.operand if isinstance(node, Neg) else node.arg)
    return free_vars(node.left) | free_vars(node.right)


def substitute(node: Expr, mapping: dict) -> Expr:
    """Replace chart variables by expressions."""
    if isinstance(node, Var):
        return as_expr(mapping[node.name]) if node.name in mapping else node
    if isinstance(node, (Num, Const)):
        return node
    if isinstance(node, Neg):
        return Neg(substitute(node.operand, mapping))
    if isinstance(node, Call):
        return Call(node.func, substitute(node.arg, mapping))
    return Bin(node.op, substitute(node.left, mapping), substitute(node.right, mapping))


# symbolic differentiation -------------------------------------------------
def diff(node: Expr, var: str) -> Expr:
    """Partial derivative with respect to ``x`` or ``y``."""
    if var not in VARS:
        raise ValueError(f"unknown chart variable {var!r}")
    if isinstance(node, Var):
        return ONE if node.name == var else ZERO
    if isinstance(node, (Num, Const)):
        return ZERO
    if isinstance(node, Neg):
        return neg(diff(node.operand, var))
    if isinstance(node, Bin):
        a, b = node.left, node.right
        if node.op == "+":
            return add(diff(a, var), diff(b, var))
        if node.op == "-":
            return sub(diff(a, var), diff(b, var))
        if node.op == "*":
            return add(mul(diff(a, var), b), mul(a, diff(b, var)))
        if node.op == "/":
            return div(sub(mul(diff(a, var), b), mul(a, diff(b, var))), power(b, 2.0))
        if node.op == "^":
            if var not in free_vars(b):
                c = _const_eval(b)
                return mul(mul(num(c), power(a, num(c - 1.0))), diff(a, var))
            return mul(node, add(mul(diff(b, var), call("log", a)),
                                 mul(b, div(diff(a, var), a))))
    if isinstance(node, Call):
        u, du = node.arg, diff(node.arg, var)
        if const_value(du) == 0:
            return ZERO
        f = node.func
        if f == "exp":
            d = node
        elif f == "log":
            d = div(ONE, u)
        elif f == "sin":
            d = call("cos", u)
        elif f == "cos":
            d = neg(call("sin", u))
        elif f == "tan":
            d = add(ONE, power(node, 2.0))
        elif f == "sinh":
            d = call("cosh", u)
        elif f == "cosh":
            d = call("sinh", u)
        elif f == "tanh":
            d = sub(ONE, power(node, 2.0))
        elif f == "sqrt":
            d = div(num(0.5), node)
        elif f == "atan":
            d = div(ONE, add(ONE, power(u, 2.0)))
        else:
            raise ValueError(f)
        return mul(d, du)
    raise TypeError(node)


# evaluation ---------------------------------------------------------------
def _const_eval(node: Expr) -> float:
    """Value of a tree without chart variables."""
    v = _eval(node, None, None, 0)
    return float(v)


def _eval(node, xj, yj, order):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Const):
        if xj is not None and xj.coeffs.dtype == object:
            return mpmath.pi if node.name == "pi" else mpmath.e
        return CONSTS[node.name]
    if isinstance(node, Var):
        if xj is None:
            raise ValueError("chart variable in a constant expression")
        return xj if node.name == "x" else yj
    if isinstance(node, Neg):
        return -_eval(node.operand, xj, yj, order)
    if isinstance(node, Call):
        a = _eval(node.arg, xj, yj, order)
        if isinstance(a, Jet2):
            return jet_apply(node.func, a)
        return float(jet_apply(node.func, Jet2.constant(a, 0)).value)
    a = _eval(node.left, xj, yj, order)
    op = node.op
    if op == "^":
        if not free_vars(node.right):
            c = _const_eval(node.right)
            if isinstance(a, Jet2):
                return a ** c
            return float((Jet2.constant(a, 0) ** c).value)
        b = _eval(node.right, xj, yj, order)
        if not isinstance(a, Jet2):
            a = Jet2.constant(np.full(b.batch_shape, a), b.order)
        return jet_apply("exp", b * jet_apply("log", a))
    b = _eval(node.right, xj, yj, order)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if not isinstance(b, Jet2):
            if b == 0:
                raise JetDomainError("division by zero")
            return a / b
        return a * jet_apply("reciprocal", b)
    raise ValueError(op)


def eval_jet(node, at, order: int) -> Jet2:
    """Jet of the expression at ``at = (x, y)`` (scalars or arrays)."""
    node = as_expr(node)
    x, y = np.broadcast_arrays(as_array(at[0]), as_array(at[1]))
    if x.dtype != y.dtype:
        x, y = x.astype(object), y.astype(object)
    xj = Jet2.variable("x", x, order)
    yj = Jet2.variable("y", y, order)
    out = _eval(node, xj, yj, order)
    if not isinstance(out, Jet2):
        out = Jet2.constant(np.full(x.shape, out, dtype=x.dtype), order)
    return out


def evaluate(node, x, y):
    """Plain value of the expression (through order-0 jets)."""
    return eval_jet(node, (x, y), 0).value


# compilation to plain code --------------------------------------------------
def _source(node, lib):
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Const):
        return repr(CONSTS[node.name])
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{_source(node.operand, lib)})"
    if isinstance(node, Call):
        name = {"atan": "atan" if lib == "math" else "arctan"}.get(node.func, node.func)
        return f"{lib}.{name}({_source(node.arg, lib)})"
    a = _source(node.left, lib)
    b = _source(node.right, lib)
    if node.op == "^":
        if not free_vars(node.right):
            c = _const_eval(node.right)
            if c.is_integer() and abs(c) <= 64:
                return f"({a})**({int(c)})"
            return f"_pow({a}, {c!r})"
        return f"_pow({a}, {b})"
    return f"({a}{node.op}{b})"


def _math_pow(a, b):
    return math.pow(a, b)


def _np_pow(a, b):
    return np.power(np.asarray(a, dtype=float), b)


@lru_cache(maxsize=512)
def compile_expr(node: Expr, lib: str = "numpy"):
    """Compile to ``f(x, y)``; ``lib='math'`` gives a fast scalar version."""
    if lib not in ("math", "numpy"):
        raise ValueError(lib)
    src = _source(node, "math" if lib == "math" else "np")
    ns = {"math": math, "np": np, "_pow": _math_pow if lib == "math" else _np_pow}
    return eval(f"lambda x, y: {src}", ns)
